// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero when any criterion
// fails other than the known deviation, or when the known deviation unexpectedly passes.
#include <chrono>
#include <iostream>
#include <random>

#include "ani/ani.hpp"
#include "ani/random_program.hpp"
#include "ani/selftest.hpp"
#include "oracle.hpp"

using namespace ani;
using checkers::Status;
using domains::Point;
using semantics::ObsPoint;
using semantics::State;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> body;
    double limit_ms = 0;                  // 0: no runtime bound
    std::optional<std::string> expected;  // reason, when a failure is expected
};

lang::Policy policy_of(const fixtures::Fixture& f, const lang::Program& p) { return lang::parse_policy(f.policy, p); }

const char* st(Status s) { return checkers::to_string(s); }

Outcome definite() {
    Outcome o;
    auto p = selftest::load(fixtures::definite);
    auto pol = policy_of(fixtures::definite, p);
    auto space = selftest::space_of(p);
    auto all = lang::all_slots(p);
    auto phi = lang::phi_domain(p, pol, all);
    auto eta = lang::eta_domain(p, pol, all);
    auto rho = lang::rho_domain(p, pol, p.observable_outputs());
    auto ni = checkers::check_ni(p, space);
    auto dani = checkers::check_dani(p, phi, eta, rho, space);
    o.require(ni.status == Status::violated, std::string("ni is ") + st(ni.status));
    o.require(dani.status == Status::holds, std::string("dani is ") + st(dani.status));
    o.require(oracle::ni(p, space) == oracle::Verdict::violated, "oracle ni is not violated");
    o.require(oracle::dani(p, space, phi, eta, rho) == oracle::Verdict::holds, "oracle dani does not hold");
    o.detail = o.pass ? "ni violated, dani (sign,sign) id par holds" : o.detail;
    return o;
}

Outcome running_trace_ni() {
    Outcome o;
    auto p = selftest::load(fixtures::running);
    auto space = selftest::space_of(p);
    auto at_end = checkers::check_trace_ni(p, {ObsPoint::end()}, space);
    o.require(at_end.status == Status::holds, std::string("O={end} is ") + st(at_end.status));
    std::vector<ObsPoint> pts{ObsPoint::at(3), ObsPoint::at(4), ObsPoint::end()};
    auto v = checkers::check_trace_ni(p, pts, space);
    o.require(v.status == Status::violated, std::string("O={3,4,end} is ") + st(v.status));
    o.require(!v.witnesses.empty() && v.witnesses.front().point == ObsPoint::at(3), "first witness is not at 3");
    if (!v.witnesses.empty()) {
        const auto& w = v.witnesses.front();
        auto a = semantics::post_at(p, ObsPoint::at(3), w.s1, 100);
        auto b = semantics::post_at(p, ObsPoint::at(3), w.s2, 100);
        o.require(a[2] != b[2], "witness states do not differ on l1 at 3");
    }
    // replay h2 = 2 against h2 = 3 with everything else fixed
    State s2{0, 2, 0, 0}, s3{0, 3, 0, 0};
    auto lib2 = semantics::post_at(p, ObsPoint::at(3), s2, 100);
    auto lib3 = semantics::post_at(p, ObsPoint::at(3), s3, 100);
    auto ref2 = oracle::reference_trace(p, s2, 100);
    auto ref3 = oracle::reference_trace(p, s3, 100);
    o.require(lib2[2] == 0 && lib3[2] == 1, "library replay does not give l1 = 0 vs 1");
    o.require(ref2 && ref3 && (*ref2)[3][2] == 0 && (*ref3)[3][2] == 1, "reference replay does not give l1 = 0 vs 1");
    o.require(oracle::trace_ni(p, space, pts) == oracle::Verdict::violated, "oracle trace-ni is not violated");
    if (o.pass) o.detail = "O={end} holds; O={3,4,end} violated at 3, replay h2=2 vs 3 gives l1=0 vs 1";
    return o;
}

std::set<ObsPoint> violated_points(const checkers::Verdict& v) {
    std::set<ObsPoint> out;
    for (const auto& w : v.witnesses) out.insert(w.point);
    return out;
}

Outcome running_trace_ani() {
    Outcome o;
    auto p = selftest::load(fixtures::running);
    auto space = selftest::space_of(p);
    auto eta = domains::identity(4);
    auto rho = domains::product({domains::nonneg(), domains::nonneg()});
    auto at_end = checkers::check_trace_ani(p, {ObsPoint::end()}, eta, rho, space);
    o.require(at_end.status == Status::holds, std::string("O={end} is ") + st(at_end.status));
    // the common abstraction at the end is >= 0 on both observables
    for (const auto& s0 : space.states()) {
        auto s = semantics::post_at(p, ObsPoint::end(), s0, 100);
        if (s[2] < 0 || s[3] < 0) {
            o.require(false, "an end state is negative");
            break;
        }
    }
    std::vector<ObsPoint> pts{ObsPoint::at(3), ObsPoint::at(4), ObsPoint::end()};
    checkers::Options opt;
    opt.max_witnesses = 1000;
    auto v = checkers::check_trace_ani(p, pts, eta, rho, space, opt);
    auto bad = violated_points(v);
    o.require(v.status == Status::violated, std::string("O={3,4,end} is ") + st(v.status));
    o.require(bad.count(ObsPoint::at(4)) > 0, "not violated at 4");
    o.require(bad.count(ObsPoint::at(3)) > 0, "not violated at 3: l1 = h2 mod 2 is never negative");
    o.require(bad.count(ObsPoint::end()) == 0, "violated at end");
    std::string pts_text;
    for (const auto& b : bad) pts_text += (pts_text.empty() ? "" : ",") + b.str();
    o.detail = (o.pass ? "" : o.detail + "; ") + "violated at {" + pts_text + "}";
    return o;
}

Outcome release_parity() {
    Outcome o;
    auto p = selftest::load(fixtures::release);
    auto space = selftest::space_of(p);
    auto phi_h = domains::product({domains::top(1), domains::parity()});
    auto adni = checkers::check_adni(p, phi_h, space);
    o.require(adni.status == Status::holds, std::string("adni is ") + st(adni.status));
    auto r = derive::released_info(p, domains::identity(2), domains::identity(2), space);
    o.require(r.support.size() == 1 && r.names[r.support[0]] == "h2", "release does not depend on h2 alone");
    auto atoms = r.projected_atoms();
    std::sort(atoms.begin(), atoms.end());
    std::set<Point> even, odd;
    for (lang::Value v = -4; v <= 4; ++v) (oracle::floor_mod(v, 2) == 0 ? even : odd).insert({v});
    o.require(atoms == std::vector<std::set<Point>>{even, odd}, "atoms are not the parity classes");
    o.require(r.projected_family().size() == 4, "family is not {{}, even, odd, all}");
    if (o.pass) o.detail = "adni (top,par) holds; release = {even, odd} on h2";
    return o;
}

Outcome declassified() {
    Outcome o;
    auto p = selftest::load(fixtures::declassified);
    auto space = selftest::space_of(p);
    std::vector<ObsPoint> pts{ObsPoint::at(3), ObsPoint::at(5), ObsPoint::at(6)};
    auto at = derive::released_info_at(p, pts, domains::identity(2), lang::Mode::incremental, space);
    const auto& r5 = at.at(ObsPoint::at(5));
    o.require(r5.support.size() == 1 && r5.names[r5.support[0]] == "h2", "release at 5 is not on h2 alone");
    bool singletons = r5.atoms.size() == 9;
    for (const auto& a : r5.projected_atoms()) singletons = singletons && a.size() == 1;
    o.require(singletons, "release at 5 is not the identity on h2");
    auto phis = derive::extract_declass_policies(p, space);
    lang::Policy none;
    auto dflt = lang::phi_domain(p, none, lang::all_slots(p));
    auto inc = checkers::check_trace_dni(p, pts, phis, dflt, lang::Mode::incremental, space);
    auto loc = checkers::check_trace_dni(p, pts, phis, dflt, lang::Mode::localized, space);
    o.require(inc.status == Status::holds, std::string("incremental is ") + st(inc.status));
    o.require(loc.status == Status::violated && !loc.witnesses.empty() && loc.witnesses.front().point == ObsPoint::at(5),
              std::string("localized is ") + st(loc.status) + " (first witness not at 5)");
    if (o.pass) o.detail = "release at 5 = identity on h2; incremental holds, localized violated at 5";
    return o;
}

Outcome equivalences() {
    Outcome o;
    selftest::Agreement acc;
    for (const auto* f : fixtures::all()) {
        auto p = selftest::load(*f);
        selftest::cross_validate(p, selftest::space_of(p), selftest::fixture_domains(p, policy_of(*f, p)), {}, acc,
                                 f->name);
    }
    random::ProgramGenerator g(2024);
    for (int c = 0; c < 100; ++c) {
        auto p = g.program();
        auto d = selftest::random_domains(p, g);
        selftest::cross_validate(p, selftest::space_of(p, {0, 3}), d, {}, acc, "random #" + std::to_string(c));
    }
    o.require(acc.all(), acc.disagreements.empty() ? "disagreement" : acc.disagreements.front());
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(acc.agreements) + "/" + std::to_string(acc.cases) +
                " equations agree over " + std::to_string(acc.instances) + " instances";
    return o;
}

Outcome formulations() {
    Outcome o;
    std::size_t ok = 0, total = 0;
    for (const auto* f : fixtures::all()) {
        auto p = selftest::load(*f);
        auto pol = policy_of(*f, p);
        ++total;
        ok += checkers::check_ani_equiv_formulations(p, lang::eta_domain(p, pol, p.observable_inputs()),
                                                     lang::rho_domain(p, pol, p.observable_outputs()),
                                                     selftest::space_of(p));
    }
    std::size_t agreeing = 0;
    auto acc = selftest::formulation_battery(100, 99, {}, agreeing);
    ok += agreeing;
    total += acc.cases;
    o.require(ok == total, "some formulation pair disagrees");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(ok) + "/" + std::to_string(total) + " instances";
    return o;
}

Outcome laws() {
    Outcome o;
    auto s = selftest::law_battery(8);
    o.require(s.failures.empty(), s.failures.empty() ? "" : s.failures.front());
    o.require(s.domains >= 55, "fewer domains than required");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(s.domains) + " domains, " + std::to_string(s.checks) +
                " checks";
    return o;
}

Outcome duality() {
    Outcome o;
    std::mt19937_64 rng(50);
    std::size_t agree = 0, complete = 0;
    const std::size_t cases = 50;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t n = 1 + rng() % 5;
        auto f = selftest::random_additive(n, rng);
        auto rho = selftest::random_closure(n, rng);
        // adjoint and both completeness notions by direct enumeration
        auto plus = [&](const domains::Subset& y) {
            domains::Subset out(n);
            for (std::size_t u = 0; u < n; ++u) {
                domains::Subset one(n);
                one.set(u);
                if (f(one).is_subset_of(y)) out.set(u);
            }
            return out;
        };
        bool backward = true, forward = true;
        for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) {
            domains::Subset x(n, m);
            auto rx = rho.close(x);
            backward = backward && rho.close(f(rx)) == rho.close(f(x));
            forward = forward && rho.close(plus(rx)) == plus(rx);
        }
        auto rep = completeness::check_bf_duality(f, rho, n);
        o.require(rep.backward == backward && rep.forward == forward, "library and enumeration differ");
        agree += backward == forward;
        complete += backward;
    }
    o.require(agree == cases, "duality fails on some transformer");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(agree) + "/" + std::to_string(cases) + " agree (" +
                std::to_string(complete) + " backward complete)";
    return o;
}

Outcome derivations() {
    Outcome o;
    double slowest = 0;
    for (const auto* f : fixtures::all()) {
        auto t0 = std::chrono::steady_clock::now();
        auto p = selftest::load(*f);
        auto space = selftest::space_of(p);
        auto delta = domains::identity(p.observable_inputs().size());
        auto obs = derive::check_observer(p, delta, space);
        auto rel = derive::check_release(p, space);
        o.require(obs.soundness == Status::holds, f->name + ": observer unsound");
        o.require(obs.maximal(), f->name + ": enlargement " + obs.first_surviving + " keeps nani");
        o.require(rel.sufficiency == Status::holds, f->name + ": release insufficient");
        o.require(rel.necessary(), f->name + ": merge of " + rel.first_surviving + " keeps adni");
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, ms);
        o.require(ms < 10000, f->name + " took over 10 s");
    }
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(fixtures::all().size()) +
                " fixtures, slowest " + std::to_string(static_cast<long>(slowest)) + " ms";
    return o;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria{
        {1, "definite: ni violated, dani holds", definite, 1000},
        {2, "running: trace-ni at {end} and {3,4,end}", running_trace_ni, 5000},
        {3, "running: trace-ani with nonneg output observation", running_trace_ani, 0,
         "mod takes the sign of the divisor, so h2 mod 2 is never negative and step 3 cannot be told apart by sign"},
        {4, "release: adni with parity protection and derived parity release", release_parity},
        {5, "declassified: release at 5 and trace-dni modes", declassified},
        {6, "completeness equations agree with definitions", equivalences, 60000},
        {7, "ani formulations agree", formulations},
        {8, "closure laws", laws},
        {9, "backward/forward adjoint duality", duality},
        {10, "derived observer and release are sound and tight", derivations},
    };
    int unexpected = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_ms > 0 && ms >= c.limit_ms) {
            o.pass = false;
            o.detail += "; over the " + std::to_string(static_cast<long>(c.limit_ms)) + " ms bound";
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " [" << o.detail << "] ("
                  << static_cast<long>(ms) << " ms)";
        if (c.expected) {
            std::cout << (o.pass ? " UNEXPECTED PASS" : " expected failure: " + *c.expected);
            if (o.pass) ++unexpected;
        } else if (!o.pass) {
            ++unexpected;
        }
        std::cout << "\n";
    }
    std::cout << (unexpected ? "acceptance: unexpected results: " + std::to_string(unexpected) : "acceptance: as expected")
              << "\n";
    return unexpected ? 1 : 0;
}
