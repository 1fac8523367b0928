// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force reference implementations used as test oracles. They share only the AST and the
// domain objects with the library; execution and every check are re-derived from the definitions.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ani/ani.hpp"

namespace oracle {

using ani::domains::Point;
using ani::domains::Uco;
using ani::lang::Program;
using ani::lang::Value;
using ani::semantics::InputSpace;
using ani::semantics::ObsPoint;
using State = std::vector<Value>;

enum class Verdict { holds, violated, inconclusive };

inline Verdict from(ani::checkers::Status s) {
    switch (s) {
    case ani::checkers::Status::holds: return Verdict::holds;
    case ani::checkers::Status::violated: return Verdict::violated;
    default: return Verdict::inconclusive;
    }
}

inline const char* name(Verdict v) {
    return v == Verdict::holds ? "holds" : v == Verdict::violated ? "violated" : "inconclusive";
}

// ---------------------------------------------------------------------------
// Reference interpreter: recursive big-step walk that records the state after every statement.

struct Failure {};
struct OutOfBudget {};
struct Enough {};

inline Value floor_mod(Value a, Value b) {
    if (b == 0) throw Failure{};
    Value q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return a - b * q;
}

inline Value ev(const ani::lang::Expr& e, const State& s) {
    using namespace ani::lang;
    if (auto c = std::get_if<Expr::Const>(&e.node)) return c->value;
    if (auto v = std::get_if<Expr::Var>(&e.node)) return s.at(v->slot);
    if (auto u = std::get_if<Expr::Unary>(&e.node)) {
        Value x = ev(*u->arg, s);
        return u->op == UnaryOp::neg ? -x : (x < 0 ? -x : x);
    }
    const auto& b = std::get<Expr::Binary>(e.node);
    Value x = ev(*b.lhs, s), y = ev(*b.rhs, s);
    switch (b.op) {
    case BinaryOp::add: return x + y;
    case BinaryOp::sub: return x - y;
    case BinaryOp::mul: return x * y;
    case BinaryOp::mod: return floor_mod(x, y);
    }
    return 0;
}

inline bool ev(const ani::lang::BExpr& e, const State& s) {
    using namespace ani::lang;
    if (auto c = std::get_if<BExpr::Const>(&e.node)) return c->value;
    if (auto c = std::get_if<BExpr::Compare>(&e.node)) {
        Value x = ev(*c->lhs, s), y = ev(*c->rhs, s);
        switch (c->op) {
        case CompareOp::eq: return x == y;
        case CompareOp::neq: return x != y;
        case CompareOp::lt: return x < y;
        case CompareOp::le: return x <= y;
        }
    }
    if (auto n = std::get_if<BExpr::Not>(&e.node)) return !ev(*n->arg, s);
    const auto& l = std::get<BExpr::Logic>(e.node);
    if (l.op == LogicOp::and_) return ev(*l.lhs, s) ? ev(*l.rhs, s) : false;
    return ev(*l.lhs, s) ? true : ev(*l.rhs, s);
}

struct Walker {
    std::vector<State> trace;
    std::size_t budget;
    std::size_t need = std::numeric_limits<std::size_t>::max();

    void push(const State& s) {
        if (trace.size() > budget) throw OutOfBudget{};
        trace.push_back(s);
        if (trace.size() > need) throw Enough{};
    }

    void run(const ani::lang::Stmt& st, State& s) {
        using namespace ani::lang;
        if (std::holds_alternative<Stmt::Skip>(st.node)) {
            push(s);
        } else if (auto a = std::get_if<Stmt::Assign>(&st.node)) {
            s[a->slot] = ev(*a->rhs, s);
            push(s);
        } else if (auto q = std::get_if<Stmt::Seq>(&st.node)) {
            for (const auto& item : q->items) run(*item, s);
        } else if (auto i = std::get_if<Stmt::If>(&st.node)) {
            bool g = ev(*i->guard, s);
            push(s);
            run(g ? *i->then_branch : *i->else_branch, s);
        } else if (auto w = std::get_if<Stmt::While>(&st.node)) {
            for (;;) {
                bool g = ev(*w->guard, s);
                push(s);
                if (!g) break;
                run(*w->body, s);
            }
        }
    }
};

/// Trace s0, s1, ..., cut after step `need`, or nullopt on a runtime error. Throws OutOfBudget past
/// `budget` steps.
inline std::optional<std::vector<State>> reference_trace(const Program& p, const State& s0, std::size_t budget,
                                                         std::size_t need = std::numeric_limits<std::size_t>::max()) {
    Walker w{{s0}, budget, need};
    State s = s0;
    try {
        if (p.body && need > 0) w.run(*p.body, s);
    } catch (const Failure&) {
        return std::nullopt;
    } catch (const Enough&) {
    }
    return w.trace;
}

/// Outcome of one input: observable output at each point, or the reason it has none.
struct Run {
    enum class Kind { ok, failed, diverged } kind = Kind::ok;
    std::vector<Point> out;   // observable outputs, one per point
    std::vector<State> full;  // full states, one per point
};

inline Point project(const State& s, const std::vector<std::size_t>& slots) {
    Point p;
    for (auto k : slots) p.push_back(s[k]);
    return p;
}

inline std::vector<Run> runs(const Program& p, const InputSpace& space, const std::vector<ObsPoint>& points,
                             std::size_t budget = 10000) {
    auto outs = p.observable_outputs();
    std::size_t need = 0;
    for (const auto& pt : points) need = pt.is_end() ? std::numeric_limits<std::size_t>::max() : std::max(need, pt.step());
    std::vector<Run> rs;
    for (const auto& s0 : space.states()) {
        Run r;
        try {
            auto t = reference_trace(p, s0, budget, need);
            if (!t) {
                r.kind = Run::Kind::failed;
            } else {
                for (const auto& pt : points) {
                    const State& s = pt.is_end() ? t->back() : (*t)[std::min(pt.step(), t->size() - 1)];
                    r.full.push_back(s);
                    r.out.push_back(project(s, outs));
                }
            }
        } catch (const OutOfBudget&) {
            r.kind = Run::Kind::diverged;
        }
        rs.push_back(std::move(r));
    }
    return rs;
}

inline bool any_diverged(const std::vector<Run>& rs) {
    return std::any_of(rs.begin(), rs.end(), [](const Run& r) { return r.kind == Run::Kind::diverged; });
}

/// Generic pairwise definition: `select(i, j)` picks comparable pairs, `observe(i, k)` gives an
/// observation id (nullopt when undefined) at point index k.
inline Verdict pairwise(std::size_t n, std::size_t npoints, const std::function<bool(std::size_t, std::size_t)>& select,
                        const std::function<std::optional<std::string>(std::size_t, std::size_t)>& observe,
                        bool diverged) {
    for (std::size_t k = 0; k < npoints; ++k) {
        std::vector<std::optional<std::string>> obs(n);
        for (std::size_t i = 0; i < n; ++i) obs[i] = observe(i, k);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (obs[i] && obs[j] && select(i, j) && *obs[i] != *obs[j]) return Verdict::violated;
    }
    return diverged ? Verdict::inconclusive : Verdict::holds;
}

inline std::string key(const Point& p) {
    std::string s;
    for (auto v : p) s += std::to_string(v) + ",";
    return s;
}

/// Extensional closure of a set of points, as the members of `universe` it contains.
inline std::string closed_key(const Uco& d, const std::set<Point>& xs, const std::vector<Point>& universe) {
    auto e = d.apply(xs);
    std::string s;
    for (const auto& u : universe) s += d.contains(e, u) ? '1' : '0';
    return s;
}

struct Space {
    const Program& p;
    const InputSpace& space;
    std::vector<State> states;
    explicit Space(const Program& prog, const InputSpace& sp) : p(prog), space(sp), states(sp.states()) {}
};

inline bool same_on(const State& a, const State& b, const std::vector<std::size_t>& slots) {
    for (auto k : slots)
        if (a[k] != b[k]) return false;
    return true;
}

/// Members t of the space with t in the closure of {s} (restricted to `slots`) and equal elsewhere.
inline std::vector<std::size_t> lift(const Space& sp, const Uco& d, const std::vector<std::size_t>& slots,
                                     std::size_t i) {
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < sp.p.decls.size(); ++k)
        if (std::find(slots.begin(), slots.end(), k) == slots.end()) others.push_back(k);
    auto e = d.apply_one(project(sp.states[i], slots));
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < sp.states.size(); ++t)
        if (same_on(sp.states[i], sp.states[t], others) && d.contains(e, project(sp.states[t], slots))) out.push_back(t);
    return out;
}

inline std::vector<Point> output_universe(const std::vector<Run>& rs, std::size_t k) {
    std::set<Point> u;
    for (const auto& r : rs)
        if (r.kind == Run::Kind::ok) u.insert(r.out[k]);
    return {u.begin(), u.end()};
}

inline std::optional<std::string> lifted(const std::vector<Run>& rs, const std::vector<std::size_t>& members,
                                         std::size_t k, const Uco& rho, const std::vector<Point>& universe) {
    std::set<Point> outs;
    for (auto t : members) {
        if (rs[t].kind != Run::Kind::ok) return std::nullopt;
        outs.insert(rs[t].out[k]);
    }
    return closed_key(rho, outs, universe);
}

inline std::optional<std::string> concrete(const std::vector<Run>& rs, std::size_t i, std::size_t k) {
    if (rs[i].kind != Run::Kind::ok) return std::nullopt;
    return key(rs[i].out[k]);
}

// ---------------------------------------------------------------------------
// Definitions.

inline Verdict trace_ni(const Program& p, const InputSpace& space, const std::vector<ObsPoint>& points) {
    Space sp(p, space);
    auto rs = runs(p, space, points);
    auto low = p.observable_inputs();
    return pairwise(
        rs.size(), points.size(), [&](auto i, auto j) { return same_on(sp.states[i], sp.states[j], low); },
        [&](auto i, auto k) { return concrete(rs, i, k); }, any_diverged(rs));
}

inline Verdict ni(const Program& p, const InputSpace& space) { return trace_ni(p, space, {ObsPoint::end()}); }

inline Verdict nani(const Program& p, const InputSpace& space, const Uco& phiL, const Uco& rho) {
    Space sp(p, space);
    auto rs = runs(p, space, {ObsPoint::end()});
    auto low = p.observable_inputs();
    auto u = output_universe(rs, 0);
    return pairwise(
        rs.size(), 1,
        [&](auto i, auto j) {
            return closed_key(phiL, {project(sp.states[i], low)}, {project(sp.states[i], low), project(sp.states[j], low)}) ==
                   closed_key(phiL, {project(sp.states[j], low)}, {project(sp.states[i], low), project(sp.states[j], low)});
        },
        [&](auto i, auto k) { return lifted(rs, {i}, k, rho, u); }, any_diverged(rs));
}

/// Trace ANI: pairs agreeing on observable inputs; each run lifted over eta on the whole state.
inline Verdict trace_ani(const Program& p, const InputSpace& space, const std::vector<ObsPoint>& points, const Uco& eta,
                         const Uco& rho) {
    Space sp(p, space);
    auto rs = runs(p, space, points);
    auto low = p.observable_inputs();
    auto all = ani::lang::all_slots(p);
    std::vector<std::vector<std::size_t>> lifts;
    for (std::size_t i = 0; i < rs.size(); ++i) lifts.push_back(lift(sp, eta, all, i));
    std::vector<std::vector<Point>> us;
    for (std::size_t k = 0; k < points.size(); ++k) us.push_back(output_universe(rs, k));
    return pairwise(
        rs.size(), points.size(), [&](auto i, auto j) { return same_on(sp.states[i], sp.states[j], low); },
        [&](auto i, auto k) { return lifted(rs, lifts[i], k, rho, us[k]); }, any_diverged(rs));
}

inline Verdict ani_check(const Program& p, const InputSpace& space, const Uco& etaL, const Uco& rho) {
    Space sp(p, space);
    auto rs = runs(p, space, {ObsPoint::end()});
    auto low = p.observable_inputs();
    std::vector<std::vector<std::size_t>> lifts;
    for (std::size_t i = 0; i < rs.size(); ++i) lifts.push_back(lift(sp, etaL, low, i));
    auto u = output_universe(rs, 0);
    return pairwise(
        rs.size(), 1, [&](auto i, auto j) { return same_on(sp.states[i], sp.states[j], low); },
        [&](auto i, auto k) { return lifted(rs, lifts[i], k, rho, u); }, any_diverged(rs));
}

inline Verdict bdni(const Program& p, const InputSpace& space, const Uco& etaH) {
    Space sp(p, space);
    auto rs = runs(p, space, {ObsPoint::end()});
    auto low = p.observable_inputs();
    auto hi = p.internal_inputs();
    auto u = output_universe(rs, 0);
    auto id = ani::domains::identity(p.observable_outputs().size());
    return pairwise(
        rs.size(), 1, [&](auto i, auto j) { return same_on(sp.states[i], sp.states[j], low); },
        [&](auto i, auto k) { return lifted(rs, lift(sp, etaH, hi, i), k, id, u); }, any_diverged(rs));
}

inline Verdict adni(const Program& p, const InputSpace& space, const Uco& phiH) {
    Space sp(p, space);
    auto rs = runs(p, space, {ObsPoint::end()});
    auto low = p.observable_inputs();
    auto hi = p.internal_inputs();
    return pairwise(
        rs.size(), 1,
        [&](auto i, auto j) {
            auto a = project(sp.states[i], hi), b = project(sp.states[j], hi);
            return same_on(sp.states[i], sp.states[j], low) && closed_key(phiH, {a}, {a, b}) == closed_key(phiH, {b}, {a, b});
        },
        [&](auto i, auto k) { return concrete(rs, i, k); }, any_diverged(rs));
}

inline Verdict dani(const Program& p, const InputSpace& space, const Uco& phi, const Uco& eta, const Uco& rho) {
    Space sp(p, space);
    auto rs = runs(p, space, {ObsPoint::end()});
    auto all = ani::lang::all_slots(p);
    std::vector<std::vector<std::size_t>> lifts;
    for (std::size_t i = 0; i < rs.size(); ++i) lifts.push_back(lift(sp, eta, all, i));
    auto u = output_universe(rs, 0);
    return pairwise(
        rs.size(), 1,
        [&](auto i, auto j) {
            const auto& a = sp.states[i];
            const auto& b = sp.states[j];
            return closed_key(phi, {a}, {a, b}) == closed_key(phi, {b}, {a, b});
        },
        [&](auto i, auto k) { return lifted(rs, lifts[i], k, rho, u); }, any_diverged(rs));
}

// ---------------------------------------------------------------------------
// Set partitions.

/// Every partition of {0..n-1}, as block labels (restricted growth strings).
inline std::vector<std::vector<std::size_t>> partitions(std::size_t n) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> a(n, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (std::size_t b = 0; b <= blocks; ++b) {
            a[i] = b;
            rec(i + 1, std::max(blocks, b + 1));
        }
    };
    if (n == 0)
        out.push_back({});
    else
        rec(0, 0);
    return out;
}

/// Whether partition `fine` refines `coarse` (both as block labels).
inline bool refines(const std::vector<std::size_t>& fine, const std::vector<std::size_t>& coarse) {
    for (std::size_t i = 0; i < fine.size(); ++i)
        for (std::size_t j = 0; j < fine.size(); ++j)
            if (fine[i] == fine[j] && coarse[i] != coarse[j]) return false;
    return true;
}

inline std::vector<std::set<Point>> blocks_of(const std::vector<std::size_t>& labels, const std::vector<Point>& u) {
    std::map<std::size_t, std::set<Point>> m;
    for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].insert(u[i]);
    std::vector<std::set<Point>> out;
    for (auto& [k, b] : m) out.push_back(std::move(b));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace oracle
