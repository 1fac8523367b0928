// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ani/checkers.hpp"
#include "ani/completeness.hpp"
#include "ani/derive.hpp"
#include "ani/fixtures.hpp"
#include "ani/parser.hpp"
#include "ani/policy.hpp"
#include "ani/report.hpp"
#include "ani/selftest.hpp"

namespace ani::cli {

using checkers::Status;
using domains::Uco;
using lang::Program;
using semantics::InputSpace;
using semantics::ObsPoint;

enum Exit : int { exit_holds = 0, exit_violated = 1, exit_inconclusive = 2, exit_usage = 3, exit_defect = 4 };

inline int exit_for(Status s) {
    switch (s) {
    case Status::holds: return exit_holds;
    case Status::violated: return exit_violated;
    case Status::inconclusive: return exit_inconclusive;
    }
    return exit_defect;
}

/// Bad invocation or unreadable input; maps to the usage exit code.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string program_path;
    std::string fixture;
    std::string policy;
    std::string check = "ni";
    std::size_t budget = 10000;
    std::string range;
    std::string mode;
    std::string format = "text";
    std::uint64_t seed = 7;
    std::size_t max_witnesses = 10;
    bool secr_literal = false;
    bool no_timing = false;
    std::string out;
    // derive
    std::string what;
    // verify-completeness
    std::string equations = "all";
    std::string attack = "both";
    std::size_t random = 0;
    std::size_t wlp_union = 2;
    // selftest
    bool quick = false;
};

/// A program with its policy, input space and checker options.
struct Loaded {
    Program program;
    lang::Policy policy;
    InputSpace space;
    checkers::Options opt;
    std::string name;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline lang::Range parse_range(const std::string& text) {
    static const std::regex re(R"(^\s*\[?\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*\]?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw UsageError("--range expects lo..hi, got '" + text + "'");
    lang::Range r{std::stoll(m[1]), std::stoll(m[2])};
    if (r.lo > r.hi) throw UsageError("--range is empty");
    return r;
}

inline Loaded load(const Flags& f) {
    Loaded l;
    std::string source, policy_text;
    if (!f.program_path.empty() && !f.fixture.empty()) throw UsageError("give either --program or --fixture");
    if (!f.program_path.empty()) {
        source = read_file(f.program_path);
        l.name = f.program_path;
    } else if (!f.fixture.empty()) {
        const fixtures::Fixture* fx = nullptr;
        try {
            fx = &fixtures::by_name(f.fixture);
        } catch (const std::out_of_range& e) {
            throw UsageError(e.what());
        }
        source = fx->program;
        policy_text = fx->policy;
        l.name = fx->name;
    } else {
        throw UsageError("a program is required (--program PATH or --fixture NAME)");
    }
    if (!f.policy.empty()) {
        std::error_code ec;
        policy_text = std::filesystem::is_regular_file(f.policy, ec) ? read_file(f.policy) : f.policy;
    }
    l.opt.budget = f.budget;
    l.opt.max_witnesses = f.max_witnesses;
    l.program = lang::parse_program(source, l.name);
    l.policy = lang::parse_policy(policy_text, l.program, f.budget);
    if (f.mode == "incremental")
        l.policy.mode = lang::Mode::incremental;
    else if (f.mode == "localized")
        l.policy.mode = lang::Mode::localized;
    else if (!f.mode.empty())
        throw UsageError("--mode expects incremental or localized");
    lang::Range fallback = selftest::default_range;
    if (!f.range.empty())
        fallback = parse_range(f.range);
    else if (l.policy.default_range)
        fallback = *l.policy.default_range;
    l.space = InputSpace::for_program(l.program, fallback);
    return l;
}

/// Protections per point: declassify-derived domains, overridden by the policy's per-point entries.
inline std::map<ObsPoint, Uco> phi_map(const Loaded& l) {
    auto out = derive::extract_declass_policies(l.program, l.space, l.opt);
    for (const auto& [pt, d] : l.policy.phi_at) {
        (void)d;
        out.insert_or_assign(pt, lang::phi_domain(l.program, l.policy, lang::all_slots(l.program), pt));
    }
    return out;
}

inline Uco default_phi(const Loaded& l) { return lang::phi_domain(l.program, l.policy, lang::all_slots(l.program)); }

/// Runs one definitional check by name.
inline checkers::Verdict run_check(const Loaded& l, const std::string& name) {
    const auto& p = l.program;
    const auto& pol = l.policy;
    auto all = lang::all_slots(p);
    auto lows = p.observable_inputs();
    auto outs = p.observable_outputs();
    auto rho = [&] { return lang::rho_domain(p, pol, outs); };
    if (name == "ni") return checkers::check_ni(p, l.space, l.opt);
    if (name == "nani") return checkers::check_nani(p, lang::phi_domain(p, pol, lows), rho(), l.space, l.opt);
    if (name == "ani") return checkers::check_ani(p, lang::eta_domain(p, pol, lows), rho(), l.space, l.opt);
    if (name == "bdni") return checkers::check_bdni(p, lang::eta_domain(p, pol, p.internal_inputs()), l.space, l.opt);
    if (name == "adni") return checkers::check_adni(p, lang::phi_domain(p, pol, p.internal_inputs()), l.space, l.opt);
    if (name == "dani")
        return checkers::check_dani(p, lang::phi_domain(p, pol, all), lang::eta_domain(p, pol, all), rho(), l.space,
                                    l.opt);
    if (name == "trace-ni") return checkers::check_trace_ni(p, pol.points, l.space, l.opt);
    if (name == "trace-ani")
        return checkers::check_trace_ani(p, pol.points, lang::eta_domain(p, pol, all), rho(), l.space, l.opt);
    if (name == "trace-dni")
        return checkers::check_trace_dni(p, pol.points, phi_map(l), default_phi(l), pol.mode, l.space, l.opt);
    throw UsageError("unknown check '" + name + "'");
}

class Clock {
  public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void emit(const report::Report& r, const Program& p, const Flags& f, std::ostream& out) {
    std::string text;
    if (f.format == "json")
        text = report::to_json(r, p).dump(2) + "\n";
    else
        text = report::to_text(r, p, !f.no_timing);
    if (f.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(f.out, std::ios::binary);
    if (!file) throw UsageError("cannot write '" + f.out + "'");
    file << text;
    out << r.status << "\n";
}

inline report::Report start(const Loaded& l, const std::string& check) {
    report::Report r;
    r.program = l.name;
    r.check = check;
    r.policy = l.policy.summary();
    return r;
}

inline int cmd_check(const Flags& f, std::ostream& out) {
    Clock clock;
    auto l = load(f);
    auto v = run_check(l, f.check);
    auto r = start(l, f.check);
    r.absorb(v);
    r.elapsed_ms = f.no_timing ? 0 : clock.ms();
    emit(r, l.program, f, out);
    return exit_for(v.status);
}

inline int cmd_derive(const Flags& f, std::ostream& out) {
    Clock clock;
    auto l = load(f);
    const auto& p = l.program;
    auto r = start(l, "derive " + f.what);
    Status status = Status::holds;
    auto rho = lang::rho_domain(p, l.policy, p.observable_outputs());
    if (f.what == "observer") {
        auto delta = lang::phi_domain(p, l.policy, p.observable_inputs());
        auto u = derive::undist_sets(p, delta, l.space, l.opt);
        auto obs = derive::harmless_observer(p, u, f.secr_literal);
        r.derived.push_back(report::derived_from(obs, p));
        auto v = checkers::check_nani(p, delta, obs.uco, l.space, l.opt);
        status = u.inconclusive ? Status::inconclusive : v.status;
        r.notes.push_back(std::string("nani with the derived observer: ") + checkers::to_string(v.status));
        if (u.excluded) r.notes.push_back(std::to_string(u.excluded) + " inputs excluded by runtime errors");
    } else if (f.what == "release") {
        auto delta = lang::eta_domain(p, l.policy, p.observable_inputs());
        auto rel = derive::released_info(p, delta, rho, l.space, l.opt);
        r.derived.push_back(report::derived_from(rel, "release", std::nullopt));
        status = rel.inconclusive ? Status::inconclusive : Status::holds;
        if (rel.excluded) r.notes.push_back(std::to_string(rel.excluded) + " inputs excluded by runtime errors");
    } else if (f.what == "release-at") {
        auto mode = l.policy.mode;
        auto at = derive::released_info_at(p, l.policy.points, rho, mode, l.space, l.opt);
        auto phis = phi_map(l);
        auto dflt = default_phi(l);
        auto declared_at = [&](ObsPoint pt) -> const Uco* {
            auto it = phis.find(pt);
            return it == phis.end() ? &dflt : &it->second;
        };
        for (const auto& [pt, rel] : at) {
            auto d = report::derived_from(rel, "release", pt.str());
            std::vector<const Uco*> doms;
            if (mode == lang::Mode::incremental) {
                for (const auto& [k, other] : at)
                    if (k <= pt) doms.push_back(declared_at(k));
            } else {
                doms.push_back(declared_at(pt));
            }
            try {
                d.policy_satisfied = derive::policy_satisfied(rel, derive::internal_view(p, l.space, doms));
                d.declared = std::string(lang::to_string(mode)) + " protection";
                if (!*d.policy_satisfied) status = Status::violated;
            } catch (const domains::DomainError& e) {
                r.notes.push_back("@" + pt.str() + ": " + e.what());
            } catch (const std::length_error& e) {
                r.notes.push_back("@" + pt.str() + ": policy not compared: " + e.what());
                if (status == Status::holds) status = Status::inconclusive;
            }
            if (rel.inconclusive && status == Status::holds) status = Status::inconclusive;
            r.derived.push_back(std::move(d));
        }
    } else {
        throw UsageError("derive expects observer, release or release-at");
    }
    r.status = checkers::to_string(status);
    r.elapsed_ms = f.no_timing ? 0 : clock.ms();
    emit(r, p, f, out);
    return exit_for(status);
}

inline report::Equation equation(std::string name, const checkers::Verdict& v, completeness::EquationResult e) {
    report::Equation q;
    q.name = std::move(name);
    q.definitional = v.status;
    q.agree = completeness::agrees(v, e);
    q.result = std::move(e);
    return q;
}

inline int cmd_verify(const Flags& f, std::ostream& out) {
    Clock clock;
    if (f.attack != "static" && f.attack != "dynamic" && f.attack != "both")
        throw UsageError("--attack expects static, dynamic or both");
    if (f.random > 0) {
        checkers::Options opt;
        opt.budget = f.budget;
        opt.max_witnesses = f.max_witnesses;
        auto acc = selftest::random_battery(f.random, f.seed, opt);
        report::Report r;
        r.program = "random";
        r.check = "verify-completeness";
        r.policy = "seed " + std::to_string(f.seed);
        r.status = acc.all() ? "agree" : "disagree";
        r.notes.push_back(std::to_string(acc.instances_agreeing) + "/" + std::to_string(acc.instances) +
                          " agreements (" + std::to_string(acc.agreements) + "/" + std::to_string(acc.cases) +
                          " equations)");
        for (const auto& d : acc.disagreements) r.notes.push_back("disagreement: " + d);
        r.elapsed_ms = f.no_timing ? 0 : clock.ms();
        emit(r, Program{}, f, out);
        return acc.all() ? exit_holds : exit_defect;
    }
    auto l = load(f);
    const auto& p = l.program;
    const auto& pol = l.policy;
    auto all = lang::all_slots(p);
    auto r = start(l, "verify-completeness " + f.equations);
    auto want = [&](const char* c) { return f.equations == "all" || f.equations == c; };
    bool known = false;
    if (want("ni")) {
        known = true;
        auto v = checkers::check_ni(p, l.space, l.opt);
        r.equations.push_back(equation("ni backward", v, completeness::check_bc_ni(p, l.space, l.opt).first));
        r.equations.push_back(equation("ni wlp", v, completeness::check_fc_wlp(p, l.space, l.opt, f.wlp_union)));
    }
    if (want("trace-ni")) {
        known = true;
        r.equations.push_back(equation("trace-ni", checkers::check_trace_ni(p, pol.points, l.space, l.opt),
                                       completeness::check_trace_completeness(p, pol.points, l.space, l.opt)));
    }
    if (want("dani")) {
        known = true;
        auto phi = lang::phi_domain(p, pol, all);
        auto rho = lang::rho_domain(p, pol, p.observable_outputs());
        if (f.attack != "dynamic") {
            auto eta = lang::eta_domain(p, pol, all);
            r.equations.push_back(equation(
                "dani static", checkers::check_dani(p, phi, eta, rho, l.space, l.opt),
                completeness::check_dani_completeness(p, phi, eta, rho, completeness::Attack::static_attack, l.space,
                                                      l.opt)));
        }
        if (f.attack != "static") {
            auto id = domains::identity(all.size());
            r.equations.push_back(equation(
                "dani dynamic", checkers::check_dani(p, phi, id, rho, l.space, l.opt),
                completeness::check_dani_completeness(p, phi, id, rho, completeness::Attack::dynamic_attack, l.space,
                                                      l.opt)));
        }
    }
    if (want("adni")) {
        known = true;
        auto phi_h = lang::phi_domain(p, pol, p.internal_inputs());
        auto id_low = domains::identity(p.observable_inputs().size());
        r.equations.push_back(equation("adni", checkers::check_adni(p, phi_h, l.space, l.opt),
                                       completeness::check_hphi_decla(p, phi_h, id_low, l.space, l.opt)));
    }
    if (!known) throw UsageError("verify-completeness checks are ni, trace-ni, dani, adni or all");
    bool agree = true;
    for (const auto& e : r.equations) agree = agree && e.agree;
    r.status = agree ? "agree" : "disagree";
    r.elapsed_ms = f.no_timing ? 0 : clock.ms();
    emit(r, p, f, out);
    return agree ? exit_holds : exit_defect;
}

inline int cmd_selftest(const Flags& f, std::ostream& out) {
    selftest::Settings s;
    s.quick = f.quick;
    s.secr_literal = f.secr_literal;
    s.seed = f.seed;
    s.opt.budget = f.budget;
    auto items = selftest::run(s);
    std::size_t failed = 0;
    for (const auto& i : items)
        if (!i.pass && !i.deviation) ++failed;
    if (f.format == "json") {
        nlohmann::json j;
        j["version"] = report::tool_version;
        j["check"] = "selftest";
        j["status"] = failed ? "failed" : "passed";
        j["items"] = nlohmann::json::array();
        for (const auto& i : items)
            j["items"].push_back({{"name", i.name}, {"pass", i.pass}, {"detail", i.detail}, {"known_deviation", i.deviation}});
        out << j.dump(2) << "\n";
    } else {
        for (const auto& i : items)
            out << (i.pass ? "PASS  " : i.deviation ? "KNOWN " : "FAIL  ") << i.name << " (" << i.detail << ")\n";
        out << (items.size() - failed) << "/" << items.size() << " passed\n";
    }
    return failed ? exit_violated : exit_holds;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Flags f;
    CLI::App app{"Abstract non-interference checker", "ani"};
    app.require_subcommand(1);
    app.set_version_flag("--version", report::tool_version);

    auto common = [&](CLI::App* c, bool program) {
        if (program) {
            c->add_option("--program", f.program_path, "Program file");
            c->add_option("--fixture", f.fixture, "Built-in example program");
            c->add_option("--policy", f.policy, "Policy file or inline policy text");
            c->add_option("--range", f.range, "Range lo..hi for undeclared variables");
            c->add_option("--mode", f.mode, "incremental or localized");
            c->add_option("--out", f.out, "Write the report to a file");
            c->add_flag("--no-timing", f.no_timing, "Report elapsed_ms as 0");
            c->add_option("--max-witnesses", f.max_witnesses, "Witnesses kept per check")->check(CLI::PositiveNumber);
        }
        c->add_option("--budget", f.budget, "Step budget per run")->check(CLI::PositiveNumber);
        c->add_option("--format", f.format, "text or json")->check(CLI::IsMember({"text", "json"}));
        c->add_option("--seed", f.seed, "Seed for randomized batteries");
    };

    auto* check = app.add_subcommand("check", "Run a non-interference check");
    common(check, true);
    check->add_option("--check", f.check, "Check name")
        ->check(CLI::IsMember({"ni", "nani", "ani", "bdni", "adni", "dani", "trace-ni", "trace-ani", "trace-dni"}));

    auto* derive = app.add_subcommand("derive", "Derive the harmless observer or the released information");
    common(derive, true);
    derive->add_option("what", f.what, "observer, release or release-at")
        ->required()
        ->check(CLI::IsMember({"observer", "release", "release-at"}));
    derive->add_flag("--secr-literal", f.secr_literal, "Use the literal undistinguishable-set observer");

    auto* verify = app.add_subcommand("verify-completeness", "Compare checks with their completeness equations");
    common(verify, true);
    verify->add_option("--check", f.equations, "ni, trace-ni, dani, adni or all");
    verify->add_option("--attack", f.attack, "static, dynamic or both");
    verify->add_option("--random", f.random, "Number of random programs");
    verify->add_option("--wlp-bound", f.wlp_union, "Largest union of outputs in the wlp equation")
        ->check(CLI::PositiveNumber);

    auto* self = app.add_subcommand("selftest", "Run the fixture and property battery");
    common(self, false);
    self->add_flag("--quick", f.quick, "Fixtures only");
    self->add_flag("--secr-literal", f.secr_literal, "Check the literal observer instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        if (check->parsed()) return cmd_check(f, out);
        if (derive->parsed()) return cmd_derive(f, out);
        if (verify->parsed()) return cmd_verify(f, out);
        if (self->parsed()) return cmd_selftest(f, out);
    } catch (const UsageError& e) {
        err << "ani: " << e.what() << "\n";
        return exit_usage;
    } catch (const lang::ParseError& e) {
        err << "ani: parse error at " << e.what() << "\n";
        return exit_usage;
    } catch (const domains::DomainError& e) {
        err << "ani: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "ani: internal error: " << e.what() << "\n";
        return exit_defect;
    }
    return exit_usage;
}

}  // namespace ani::cli
