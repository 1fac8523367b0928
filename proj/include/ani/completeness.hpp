// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ani/checkers.hpp"
#include "ani/domains.hpp"
#include "ani/moore.hpp"
#include "ani/semantics.hpp"

namespace ani::completeness {

using checkers::Options;
using checkers::RunTable;
using checkers::Status;
using checkers::Verdict;
using domains::MooreFamily;
using domains::Point;
using domains::Subset;
using domains::Uco;
using lang::Program;
using semantics::InputSpace;
using semantics::ObsPoint;
using semantics::State;

/// Outcome of evaluating both sides of a completeness equation on a generator set.
struct EquationResult {
    bool holds = true;
    bool inconclusive = false;    // some inputs diverged and were left out
    std::size_t generators = 0;   // generators on which both sides were compared
    std::size_t excluded = 0;     // inputs dropped for divergence or runtime errors
    std::string counterexample;   // first generator on which the sides differ
    std::string bound;            // description of the generator set
};

/// Whether a definitional verdict and an equation result say the same thing.
inline bool agrees(const Verdict& v, const EquationResult& e) { return (v.status == Status::violated) == !e.holds; }

enum class Attack { static_attack, dynamic_attack };

inline const char* to_string(Attack a) { return a == Attack::static_attack ? "static" : "dynamic"; }

// ---------------------------------------------------------------------------
// The abstraction keeping observable data and forgetting internal data.

using SetTransformer = std::function<std::set<State>(const std::set<State>&)>;

/// X ↦ {s ∈ universe | the projection of s on `observable` is a projection of some x ∈ X}.
inline SetTransformer build_H(std::vector<std::size_t> observable, std::vector<State> universe) {
    return [observable = std::move(observable), universe = std::move(universe)](const std::set<State>& xs) {
        std::set<Point> seen;
        for (const auto& x : xs) seen.insert(semantics::project(x, observable));
        std::set<State> out;
        for (const auto& u : universe)
            if (seen.count(semantics::project(u, observable))) out.insert(u);
        return out;
    };
}

namespace detail {

inline std::string render_outputs(const Program& p, const std::vector<std::size_t>& slots, const std::set<Point>& xs) {
    return checkers::detail::render_set(p, slots, xs);
}

inline void account(const RunTable& run, EquationResult& r) {
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (run.ok(i)) continue;
        ++r.excluded;
        if (run.diverged(i)) r.inconclusive = true;
    }
}

/// Compares {out(y) | y ∈ lift(x)} with {out(x)} at point index k for every terminating x.
template <class Lift>
void singleton_equation(const RunTable& run, std::size_t k, Lift&& lift, EquationResult& r) {
    const auto& p = run.program();
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (!run.ok(i)) continue;
        ++r.generators;
        std::set<Point> lhs;
        for (auto t : lift(i))
            if (run.ok(t)) lhs.insert(run.output(t, k));
        std::set<Point> rhs{run.output(i, k)};
        if (lhs != rhs && r.holds) {
            r.holds = false;
            r.counterexample = "at " + run.points()[k].str() + " from " + checkers::render_state(p, run.space().state_at(i)) +
                               ": left side " + render_outputs(p, run.output_slots(), lhs) + ", right side " +
                               render_outputs(p, run.output_slots(), rhs);
        }
    }
}

inline Uco phi_on_inputs(const Program& p, const Uco& phi_star, const Uco& phi_circ) {
    auto hi = p.internal_inputs();
    auto lo = p.observable_inputs();
    std::vector<std::pair<std::vector<std::size_t>, Uco>> factors;
    if (!hi.empty()) factors.push_back({hi, phi_star});
    if (!lo.empty()) factors.push_back({lo, phi_circ});
    return domains::product(factors, p.decls.size(), "(" + phi_star.name() + ", " + phi_circ.name() + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Backward completeness of the standard and trace-based properties.

/// Both sides of H∘P∘H = H∘P on every singleton generator, paired with the definitional NI status.
inline std::pair<EquationResult, Status> check_bc_ni(const Program& p, const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    EquationResult r;
    r.bound = "all singletons of the terminating inputs";
    detail::account(run, r);
    auto top = domains::top(p.internal_inputs().size());
    checkers::Lifter lifter(top, p.internal_inputs(), space);
    detail::singleton_equation(run, 0, [&](std::size_t i) { return lifter.lift(space.state_at(i)); }, r);
    return {r, checkers::check_ni(p, space, opt).status};
}

/// H∘post^j∘H = H∘post^j at every point, on singleton generators.
inline EquationResult check_trace_completeness(const Program& p, const std::vector<ObsPoint>& points,
                                               const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, points, opt.budget);
    EquationResult r;
    r.bound = "all singletons of the terminating inputs, at every observation point";
    detail::account(run, r);
    auto top = domains::top(p.internal_inputs().size());
    checkers::Lifter lifter(top, p.internal_inputs(), space);
    std::vector<std::vector<std::size_t>> lifts(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) lifts[i] = lifter.lift(space.state_at(i));
    for (std::size_t k = 0; k < run.points().size(); ++k)
        detail::singleton_equation(run, k, [&](std::size_t i) -> const std::vector<std::size_t>& { return lifts[i]; }, r);
    return r;
}

/// Forward completeness of the weakest liberal precondition: H∘Wlp∘H = Wlp∘H. Generators are the
/// H-closed sets of outputs whose observable part is a union of at most `max_union` reachable
/// observable outputs, plus the full set.
inline EquationResult check_fc_wlp(const Program& p, const InputSpace& space, const Options& opt = {},
                                   std::size_t max_union = 2) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    EquationResult r;
    r.bound = "unions of at most " + std::to_string(max_union) + " reachable observable outputs, plus the full set";
    detail::account(run, r);

    checkers::Interner<Point> outs;
    std::vector<std::size_t> out_id(run.size(), checkers::npos);
    for (std::size_t i = 0; i < run.size(); ++i)
        if (run.ok(i)) out_id[i] = outs.id(run.output(i, 0));
    // Classes of H on the input side: terminating inputs sharing observable inputs.
    std::map<Point, std::vector<std::size_t>> classes;
    auto low = p.observable_inputs();
    for (std::size_t i = 0; i < run.size(); ++i)
        if (run.ok(i)) classes[semantics::project(space.state_at(i), low)].push_back(i);

    const std::size_t m = outs.size();
    // Wlp(Y) is H-closed iff no class has members both inside and outside Y.
    auto test = [&](const std::vector<bool>& in_y, const std::string& label) {
        ++r.generators;
        for (const auto& [lv, members] : classes) {
            (void)lv;
            bool any_in = false, any_out = false;
            std::size_t a = 0, b = 0;
            for (auto i : members) {
                if (in_y[out_id[i]]) {
                    if (!any_in) a = i;
                    any_in = true;
                } else {
                    if (!any_out) b = i;
                    any_out = true;
                }
            }
            if (any_in && any_out) {
                r.holds = false;
                r.counterexample = "Y = " + label + ": " + checkers::render_state(p, space.state_at(a)) +
                                   " is in the precondition but " + checkers::render_state(p, space.state_at(b)) +
                                   " is not";
                return false;
            }
        }
        return true;
    };
    auto name = [&](const std::vector<std::size_t>& ids) {
        std::set<Point> pts;
        for (auto id : ids) pts.insert(outs.value(id));
        return detail::render_outputs(p, run.output_slots(), pts);
    };
    std::vector<bool> in_y(m, false);
    std::vector<std::size_t> chosen;
    std::function<bool(std::size_t)> rec = [&](std::size_t from) {
        if (!chosen.empty() && !test(in_y, name(chosen))) return false;
        if (chosen.size() == max_union) return true;
        for (std::size_t o = from; o < m; ++o) {
            chosen.push_back(o);
            in_y[o] = true;
            bool ok = rec(o + 1);
            in_y[o] = false;
            chosen.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    if (rec(0) && m > 0) {
        std::vector<bool> all(m, true);
        test(all, "all reachable outputs");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Declassified and abstract variants.

/// Completeness form of declassified abstract non-interference. The static attack compares
/// H∘P^{eta,rho}∘H^phi with H∘P^{eta,rho}; the dynamic attack compares H_rho∘P∘H^phi with H_rho∘P.
inline EquationResult check_dani_completeness(const Program& p, const Uco& phi, const Uco& eta, const Uco& rho,
                                              Attack attack, const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    EquationResult r;
    r.bound = std::string("all singletons of the terminating inputs (") + to_string(attack) + " attack)";
    detail::account(run, r);
    auto all = lang::all_slots(p);
    checkers::Lifter by_phi(phi, all, space);

    std::set<Point> reach_set;
    for (std::size_t i = 0; i < run.size(); ++i)
        if (run.ok(i)) reach_set.insert(run.output(i, 0));
    std::vector<Point> reach(reach_set.begin(), reach_set.end());

    if (attack == Attack::static_attack) {
        // Observation of each input: the closed set rho(P(eta-lift)°) traced on reachable outputs.
        checkers::Lifter by_eta(eta, all, space);
        std::vector<std::optional<Subset>> obs(run.size());
        for (std::size_t i = 0; i < run.size(); ++i) {
            auto members = eta.is_identity() ? std::vector<std::size_t>{i} : by_eta.lift(space.state_at(i));
            auto outs = checkers::detail::lifted_outputs(run, members, 0);
            if (outs) obs[i] = domains::to_subset(rho.extension(rho.apply(*outs), reach), reach);
        }
        for (std::size_t i = 0; i < run.size(); ++i) {
            if (!obs[i]) continue;
            ++r.generators;
            Subset lhs(reach.size());
            for (auto t : by_phi.lift(space.state_at(i)))
                if (obs[t]) lhs |= *obs[t];
            if (lhs != *obs[i] && r.holds) {
                r.holds = false;
                std::set<Point> a, b;
                for (auto q : domains::members_of(lhs)) a.insert(reach[q]);
                for (auto q : domains::members_of(*obs[i])) b.insert(reach[q]);
                r.counterexample = "from " + checkers::render_state(p, space.state_at(i)) + ": left side " +
                                   detail::render_outputs(p, run.output_slots(), a) + ", right side " +
                                   detail::render_outputs(p, run.output_slots(), b);
            }
        }
        return r;
    }
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (!run.ok(i)) continue;
        ++r.generators;
        std::set<Point> outs;
        for (auto t : by_phi.lift(space.state_at(i)))
            if (run.ok(t)) outs.insert(run.output(t, 0));
        auto lhs = rho.apply(outs);
        auto rhs = rho.apply_one(run.output(i, 0));
        if (lhs != rhs && r.holds) {
            r.holds = false;
            r.counterexample = "from " + checkers::render_state(p, space.state_at(i)) + ": left side " +
                               rho.render(lhs) + ", right side " + rho.render(rhs);
        }
    }
    return r;
}

/// H∘P∘H^phi = H∘P with phi = (phi_star on internal inputs, phi_circ on observable inputs).
inline EquationResult check_hphi_decla(const Program& p, const Uco& phi_star, const Uco& phi_circ,
                                       const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    EquationResult r;
    r.bound = "all singletons of the terminating inputs";
    detail::account(run, r);
    auto phi = detail::phi_on_inputs(p, phi_star, phi_circ);
    checkers::Lifter lifter(phi, lang::all_slots(p), space);
    detail::singleton_equation(run, 0, [&](std::size_t i) { return lifter.lift(space.state_at(i)); }, r);
    return r;
}

/// The definitional counterpart of check_hphi_decla: A-DNI when phi_circ is the identity, DANI otherwise.
inline Verdict check_hphi_definitional(const Program& p, const Uco& phi_star, const Uco& phi_circ,
                                       const InputSpace& space, const Options& opt = {}) {
    if (phi_circ.is_identity() || p.observable_inputs().empty()) return checkers::check_adni(p, phi_star, space, opt);
    auto phi = detail::phi_on_inputs(p, phi_star, phi_circ);
    auto n = p.decls.size();
    return checkers::check_dani(p, phi, domains::identity(n), domains::identity(p.observable_outputs().size()), space,
                                opt);
}

// ---------------------------------------------------------------------------
// Adjoints and the backward/forward duality on finite powersets.

class NotAdditive : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

using SubsetMap = std::function<Subset(const Subset&)>;

inline Subset singleton(std::size_t n, std::size_t u) {
    Subset s(n);
    s.set(u);
    return s;
}

/// The additive map sending each singleton {u} to images[u].
inline SubsetMap additive_from_images(std::vector<Subset> images) {
    return [images = std::move(images)](const Subset& x) {
        Subset out(images.empty() ? 0 : images.front().size());
        for (auto u : domains::members_of(x)) out |= images[u];
        return out;
    };
}

/// Right adjoint of an additive f on subsets of {0..n-1}: f⁺(X) = {u | f({u}) ⊆ X}.
/// Additivity is checked on the empty set and on every union of two singletons.
inline SubsetMap adjoint_plus(const SubsetMap& f, std::size_t n) {
    if (f(Subset(n)).any()) throw NotAdditive("transformer does not map the empty set to the empty set");
    std::vector<Subset> img(n);
    for (std::size_t u = 0; u < n; ++u) img[u] = f(singleton(n, u));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (f(singleton(n, a) | singleton(n, b)) != (img[a] | img[b]))
                throw NotAdditive("transformer is not additive on {" + std::to_string(a) + ", " + std::to_string(b) +
                                  "}");
    return [img, n](const Subset& x) {
        Subset out(n);
        for (std::size_t u = 0; u < n; ++u)
            if (img[u].is_subset_of(x)) out.set(u);
        return out;
    };
}

struct DualityReport {
    bool backward = true;   // rho∘f∘rho = rho∘f
    bool forward = true;    // rho∘f⁺∘rho = f⁺∘rho
    std::size_t checked = 0;
    bool agree() const { return backward == forward; }
};

/// Evaluates backward completeness of rho for f and forward completeness of rho for f⁺ on every
/// subset when n ≤ 16, otherwise on `samples` seeded random subsets plus all singletons.
inline DualityReport check_bf_duality(const SubsetMap& f, const MooreFamily& rho, std::size_t n,
                                      std::size_t samples = 4096, std::uint64_t seed = 1) {
    if (rho.universe() != n) throw std::invalid_argument("check_bf_duality: closure over a different universe");
    auto fplus = adjoint_plus(f, n);
    DualityReport rep;
    auto one = [&](const Subset& x) {
        ++rep.checked;
        Subset rx = rho.close(x);
        if (rho.close(f(rx)) != rho.close(f(x))) rep.backward = false;
        if (rho.close(fplus(rx)) != fplus(rx)) rep.forward = false;
    };
    if (n <= 16) {
        for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) one(Subset(n, m));
    } else {
        std::mt19937_64 rng(seed);
        for (std::size_t u = 0; u < n; ++u) one(singleton(n, u));
        for (std::size_t k = 0; k < samples; ++k) {
            Subset x(n);
            for (std::size_t u = 0; u < n; ++u)
                if (rng() & 1U) x.set(u);
            one(x);
        }
    }
    return rep;
}

/// The lifted semantics at a point as a map on subsets of the input space. Requires the program to
/// stay inside the space and to terminate without errors on it.
inline SubsetMap post_transformer(const Program& p, const InputSpace& space, ObsPoint pt, std::size_t budget) {
    const std::size_t n = space.size();
    std::vector<Subset> img(n, Subset(n));
    for (std::size_t i = 0; i < n; ++i) {
        auto t = semantics::post_at(p, pt, space.state_at(i), budget);
        auto idx = space.index_of(t);
        if (!idx) throw std::invalid_argument("post_transformer: a result leaves the input space");
        img[i].set(*idx);
    }
    return additive_from_images(std::move(img));
}

/// Fixpoints of H on subsets of the input space: unions of the classes of equal projection on `slots`.
inline MooreFamily h_family(const InputSpace& space, const std::vector<std::size_t>& slots) {
    const std::size_t n = space.size();
    std::map<Point, Subset> blocks;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = blocks.try_emplace(semantics::project(space.state_at(i), slots), Subset(n));
        it->second.set(i);
    }
    std::vector<Subset> bs;
    for (auto& [k, b] : blocks) bs.push_back(std::move(b));
    return domains::unions_of_blocks(n, bs);
}

}  // namespace ani::completeness
