// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ani/checkers.hpp"
#include "ani/completeness.hpp"
#include "ani/derive.hpp"

namespace ani::report {

using nlohmann::json;

inline constexpr const char* tool_version = "1.0.0";

/// One derived family: its variables, atoms and (when small) all closed sets.
struct Derived {
    std::string name;
    std::optional<std::string> point;
    std::vector<std::string> variables;
    std::vector<std::set<domains::Point>> atoms;
    std::vector<std::set<domains::Point>> family;
    bool family_listed = false;
    std::optional<bool> policy_satisfied;
    std::string declared;
};

/// A definitional verdict next to its completeness equation.
struct Equation {
    std::string name;
    checkers::Status definitional = checkers::Status::holds;
    completeness::EquationResult result;
    bool agree = true;
};

struct Report {
    std::string program;
    std::string check;
    std::string policy;
    std::string status = "holds";
    std::vector<checkers::Witness> witnesses;
    std::vector<Derived> derived;
    std::vector<Equation> equations;
    std::vector<std::string> notes;
    std::size_t pairs_checked = 0;
    std::size_t failed_inputs = 0;
    std::size_t diverged_inputs = 0;
    double elapsed_ms = 0;

    void absorb(const checkers::Verdict& v) {
        status = checkers::to_string(v.status);
        witnesses = v.witnesses;
        pairs_checked += v.pairs_checked;
        failed_inputs += v.failed_inputs;
        diverged_inputs += v.diverged_inputs;
        notes.insert(notes.end(), v.runtime_errors.begin(), v.runtime_errors.end());
    }
};

inline json point_json(const domains::Point& x) {
    if (x.size() == 1) return x[0];
    return json(x);
}

inline json set_json(const std::set<domains::Point>& xs) {
    json a = json::array();
    for (const auto& x : xs) a.push_back(point_json(x));
    return a;
}

/// Machine format: one JSON document with sorted keys.
inline json to_json(const Report& r, const lang::Program& p) {
    json j;
    j["version"] = tool_version;
    j["program"] = r.program;
    j["check"] = r.check;
    j["policy"] = r.policy;
    j["status"] = r.status;
    j["pairs_checked"] = r.pairs_checked;
    j["elapsed_ms"] = r.elapsed_ms;
    j["failed_inputs"] = r.failed_inputs;
    j["diverged_inputs"] = r.diverged_inputs;
    j["notes"] = r.notes;
    json ws = json::array();
    for (const auto& w : r.witnesses) {
        json o;
        o["point"] = w.point.str();
        o["s1"] = checkers::render_state(p, w.s1);
        o["s2"] = checkers::render_state(p, w.s2);
        o["obs1"] = w.obs1;
        o["obs2"] = w.obs2;
        o["reason"] = w.reason;
        ws.push_back(std::move(o));
    }
    j["witnesses"] = std::move(ws);
    json ds = json::array();
    for (const auto& d : r.derived) {
        json o;
        o["name"] = d.name;
        if (d.point) o["point"] = *d.point;
        o["variables"] = d.variables;
        json atoms = json::array();
        for (const auto& a : d.atoms) atoms.push_back(set_json(a));
        o["atoms"] = std::move(atoms);
        if (d.family_listed) {
            json fam = json::array();
            for (const auto& m : d.family) fam.push_back(set_json(m));
            o["family"] = std::move(fam);
        }
        if (d.policy_satisfied) {
            o["policy_satisfied"] = *d.policy_satisfied;
            o["declared"] = d.declared;
        }
        ds.push_back(std::move(o));
    }
    j["derived"] = std::move(ds);
    if (!r.equations.empty()) {
        json es = json::array();
        for (const auto& e : r.equations) {
            json o;
            o["name"] = e.name;
            o["definitional"] = checkers::to_string(e.definitional);
            o["equation_holds"] = e.result.holds;
            o["agree"] = e.agree;
            o["generators"] = e.result.generators;
            o["excluded"] = e.result.excluded;
            o["bound"] = e.result.bound;
            if (!e.result.counterexample.empty()) o["counterexample"] = e.result.counterexample;
            es.push_back(std::move(o));
        }
        j["equations"] = std::move(es);
    }
    return j;
}

inline std::string render_set_text(const std::set<domains::Point>& xs) { return set_json(xs).dump(); }

/// Human format.
inline std::string to_text(const Report& r, const lang::Program& p, bool timing = true) {
    std::ostringstream os;
    os << "program   " << r.program << "\n";
    os << "check     " << r.check << "\n";
    if (!r.policy.empty()) os << "policy    " << r.policy << "\n";
    os << "status    " << r.status << "\n";
    if (r.pairs_checked) os << "pairs     " << r.pairs_checked << "\n";
    if (r.failed_inputs) os << "errors    " << r.failed_inputs << " inputs hit a runtime error\n";
    if (r.diverged_inputs) os << "diverged  " << r.diverged_inputs << " inputs exhausted the step budget\n";
    if (timing) os << "time      " << r.elapsed_ms << " ms\n";
    for (const auto& w : r.witnesses) {
        os << "witness @" << w.point.str() << ": [" << checkers::render_state(p, w.s1) << "] -> " << w.obs1 << "  vs  ["
           << checkers::render_state(p, w.s2) << "] -> " << w.obs2 << "  (" << w.reason << ")\n";
    }
    for (const auto& d : r.derived) {
        os << d.name;
        if (d.point) os << " @" << *d.point;
        os << " over (";
        for (std::size_t i = 0; i < d.variables.size(); ++i) os << (i ? ", " : "") << d.variables[i];
        os << ")\n  atoms:";
        for (const auto& a : d.atoms) os << " " << render_set_text(a);
        os << "\n";
        if (d.family_listed) {
            os << "  family:";
            for (const auto& m : d.family) os << " " << render_set_text(m);
            os << "\n";
        }
        if (d.policy_satisfied)
            os << "  declared " << d.declared << ": " << (*d.policy_satisfied ? "satisfied" : "not satisfied") << "\n";
    }
    for (const auto& e : r.equations) {
        os << "equation " << e.name << ": definitional " << checkers::to_string(e.definitional) << ", equation "
           << (e.result.holds ? "holds" : "fails") << ", " << (e.agree ? "agree" : "DISAGREE") << " (" << e.result.generators
           << " generators; " << e.result.bound << ")\n";
        if (!e.result.counterexample.empty()) os << "  " << e.result.counterexample << "\n";
    }
    for (const auto& n : r.notes) os << "note: " << n << "\n";
    return os.str();
}

inline Derived derived_from(const derive::ReleaseDomain& rel, std::string name, std::optional<std::string> point) {
    Derived d;
    d.name = std::move(name);
    d.point = std::move(point);
    for (auto q : rel.support) d.variables.push_back(rel.names[q]);
    d.atoms = rel.projected_atoms();
    std::sort(d.atoms.begin(), d.atoms.end());
    if (rel.atoms.size() <= derive::listed_atoms_limit) {
        d.family = rel.projected_family();
        d.family_listed = true;
    }
    return d;
}

inline Derived derived_from(const derive::Observer& obs, const lang::Program& p) {
    Derived d;
    d.name = obs.literal ? "observer (literal)" : "observer";
    d.variables = p.names(p.observable_outputs());
    d.atoms = obs.atoms;
    d.family = obs.family;
    d.family_listed = !obs.family.empty();
    return d;
}

}  // namespace ani::report
