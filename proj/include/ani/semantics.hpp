// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ani/lang.hpp"

namespace ani::semantics {

using lang::Program;
using lang::Value;

/// Variable values indexed by declaration slot.
using State = std::vector<Value>;

enum class RuntimeErrorKind { mod_by_zero, overflow };

inline const char* to_string(RuntimeErrorKind k) { return k == RuntimeErrorKind::mod_by_zero ? "mod_by_zero" : "overflow"; }

class RuntimeError : public std::runtime_error {
  public:
    RuntimeError(RuntimeErrorKind kind, std::size_t step)
        : std::runtime_error(std::string("runtime error: ") + to_string(kind) + " at step " + std::to_string(step)),
          kind_(kind), step_(step) {}
    RuntimeErrorKind kind() const { return kind_; }
    std::size_t step() const { return step_; }

  private:
    RuntimeErrorKind kind_;
    std::size_t step_;
};

/// Raised when the step budget runs out before the requested point is reached.
class Inconclusive : public std::runtime_error {
  public:
    explicit Inconclusive(const std::string& what) : std::runtime_error(what) {}
};

/// An observation point: an execution step index, or the end of the run.
class ObsPoint {
  public:
    constexpr ObsPoint() = default;
    constexpr static ObsPoint at(std::size_t step) { return ObsPoint(false, step); }
    constexpr static ObsPoint end() { return ObsPoint(true, 0); }
    constexpr bool is_end() const { return end_; }
    constexpr std::size_t step() const { return step_; }
    friend constexpr bool operator==(const ObsPoint&, const ObsPoint&) = default;
    friend constexpr std::strong_ordering operator<=>(const ObsPoint& a, const ObsPoint& b) {
        if (a.end_ != b.end_) return a.end_ ? std::strong_ordering::greater : std::strong_ordering::less;
        return a.step_ <=> b.step_;
    }
    std::string str() const { return end_ ? "end" : std::to_string(step_); }

  private:
    constexpr ObsPoint(bool e, std::size_t s) : end_(e), step_(s) {}
    bool end_ = false;
    std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Expression evaluation with checked 64-bit arithmetic.

namespace detail {

struct EvalFailure {
    RuntimeErrorKind kind;
};

inline Value checked_add(Value a, Value b) {
    Value r;
    if (__builtin_add_overflow(a, b, &r)) throw EvalFailure{RuntimeErrorKind::overflow};
    return r;
}
inline Value checked_sub(Value a, Value b) {
    Value r;
    if (__builtin_sub_overflow(a, b, &r)) throw EvalFailure{RuntimeErrorKind::overflow};
    return r;
}
inline Value checked_mul(Value a, Value b) {
    Value r;
    if (__builtin_mul_overflow(a, b, &r)) throw EvalFailure{RuntimeErrorKind::overflow};
    return r;
}
inline Value checked_neg(Value a) {
    if (a == std::numeric_limits<Value>::min()) throw EvalFailure{RuntimeErrorKind::overflow};
    return -a;
}

}  // namespace detail

/// Mathematical modulus: the result carries the sign of the divisor.
inline Value math_mod(Value a, Value b) {
    if (b == 0) throw detail::EvalFailure{RuntimeErrorKind::mod_by_zero};
    if (b == -1) return 0;
    Value r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) r += b;
    return r;
}

inline Value eval(const lang::Expr& e, const State& s) {
    using lang::Expr;
    return std::visit(
        [&](const auto& n) -> Value {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Const>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return s[n.slot];
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                Value v = eval(*n.arg, s);
                if (n.op == lang::UnaryOp::neg) return detail::checked_neg(v);
                return v < 0 ? detail::checked_neg(v) : v;
            } else {
                Value a = eval(*n.lhs, s);
                Value b = eval(*n.rhs, s);
                switch (n.op) {
                case lang::BinaryOp::add: return detail::checked_add(a, b);
                case lang::BinaryOp::sub: return detail::checked_sub(a, b);
                case lang::BinaryOp::mul: return detail::checked_mul(a, b);
                case lang::BinaryOp::mod: return math_mod(a, b);
                }
                return 0;
            }
        },
        e.node);
}

inline bool eval(const lang::BExpr& b, const State& s) {
    using lang::BExpr;
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BExpr::Const>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, BExpr::Compare>) {
                Value x = eval(*n.lhs, s);
                Value y = eval(*n.rhs, s);
                switch (n.op) {
                case lang::CompareOp::eq: return x == y;
                case lang::CompareOp::neq: return x != y;
                case lang::CompareOp::lt: return x < y;
                case lang::CompareOp::le: return x <= y;
                }
                return false;
            } else if constexpr (std::is_same_v<T, BExpr::Not>) {
                return !eval(*n.arg, s);
            } else {
                if (n.op == lang::LogicOp::and_) return eval(*n.lhs, s) && eval(*n.rhs, s);
                return eval(*n.lhs, s) || eval(*n.rhs, s);
            }
        },
        b.node);
}

// ---------------------------------------------------------------------------
// Small-step machine: one labeled statement per step.

/// Pending statements, innermost last. Sequences are flattened without consuming a step.
struct ControlPoint {
    std::vector<const lang::Stmt*> pending;

    bool done() const { return pending.empty(); }
    bool operator==(const ControlPoint&) const = default;

    const lang::Stmt* current() const { return pending.empty() ? nullptr : pending.back(); }

    void normalize() {
        while (!pending.empty()) {
            const auto* seq = std::get_if<lang::Stmt::Seq>(&pending.back()->node);
            if (!seq) return;
            pending.pop_back();
            for (auto it = seq->items.rbegin(); it != seq->items.rend(); ++it) pending.push_back(it->get());
        }
    }
};

inline ControlPoint initial_control(const Program& p) {
    ControlPoint pc;
    if (p.body) pc.pending.push_back(p.body.get());
    pc.normalize();
    return pc;
}

namespace detail {

inline void step_in_place(State& s, ControlPoint& pc) {
    using lang::Stmt;
    const Stmt* cur = pc.pending.back();
    pc.pending.pop_back();
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Stmt::Assign>) {
                s[n.slot] = eval(*n.rhs, s);
            } else if constexpr (std::is_same_v<T, Stmt::If>) {
                pc.pending.push_back(eval(*n.guard, s) ? n.then_branch.get() : n.else_branch.get());
            } else if constexpr (std::is_same_v<T, Stmt::While>) {
                if (eval(*n.guard, s)) {
                    pc.pending.push_back(cur);
                    pc.pending.push_back(n.body.get());
                }
            }
        },
        cur->node);
    pc.normalize();
}

}  // namespace detail

/// Executes exactly one statement. Throws RuntimeError (step reported as 1) on arithmetic failure.
inline std::pair<State, ControlPoint> step(const Program& p, State s, ControlPoint pc) {
    (void)p;
    if (pc.done()) throw std::invalid_argument("step: control point is already final");
    try {
        detail::step_in_place(s, pc);
    } catch (const detail::EvalFailure& f) {
        throw RuntimeError(f.kind, 1);
    }
    return {std::move(s), std::move(pc)};
}

enum class TraceStatus { terminated, budget_exhausted };

inline const char* to_string(TraceStatus t) { return t == TraceStatus::terminated ? "terminated" : "budget_exhausted"; }

struct Trace {
    std::vector<State> states;
    TraceStatus status = TraceStatus::terminated;
    std::size_t steps_taken = 0;
};

/// Runs from s0 until termination or until `budget` steps have been taken.
inline Trace run_trace(const Program& p, const State& s0, std::size_t budget) {
    Trace t;
    t.states.push_back(s0);
    State s = s0;
    ControlPoint pc = initial_control(p);
    while (!pc.done() && t.steps_taken < budget) {
        try {
            detail::step_in_place(s, pc);
        } catch (const detail::EvalFailure& f) {
            throw RuntimeError(f.kind, t.steps_taken + 1);
        }
        ++t.steps_taken;
        t.states.push_back(s);
    }
    t.status = pc.done() ? TraceStatus::terminated : TraceStatus::budget_exhausted;
    return t;
}

/// Outcome of a run: the final state, divergence within the budget, or a runtime error.
struct Outcome {
    struct Final {
        State state;
        std::size_t steps = 0;
        bool operator==(const Final&) const = default;
    };
    struct Diverged {
        bool operator==(const Diverged&) const = default;
    };
    struct Failed {
        RuntimeErrorKind kind;
        std::size_t step = 0;
        bool operator==(const Failed&) const = default;
    };
    std::variant<Final, Diverged, Failed> value;

    bool is_final() const { return std::holds_alternative<Final>(value); }
    const State& state() const { return std::get<Final>(value).state; }
    bool operator==(const Outcome&) const = default;
};

/// Observations of one run at a sorted list of points.
struct Observation {
    enum class Status { ok, inconclusive, failed };
    Status status = Status::ok;
    std::vector<State> states;  // one per requested point when status == ok
    RuntimeErrorKind error = RuntimeErrorKind::mod_by_zero;
    std::size_t error_step = 0;
    std::size_t steps = 0;
};

/// Runs s0 just far enough to record the state at every point in `points` (sorted ascending).
/// A numeric point past termination sees the frozen final state.
inline Observation observe(const Program& p, const State& s0, const std::vector<ObsPoint>& points, std::size_t budget) {
    Observation out;
    State s = s0;
    ControlPoint pc = initial_control(p);
    std::size_t taken = 0;
    for (const auto& pt : points) {
        std::size_t target = pt.is_end() ? std::numeric_limits<std::size_t>::max() : pt.step();
        while (!pc.done() && taken < target) {
            if (taken >= budget) {
                out.status = Observation::Status::inconclusive;
                out.steps = taken;
                out.states.clear();
                return out;
            }
            try {
                detail::step_in_place(s, pc);
            } catch (const detail::EvalFailure& f) {
                out.status = Observation::Status::failed;
                out.error = f.kind;
                out.error_step = taken + 1;
                out.steps = taken;
                out.states.clear();
                return out;
            }
            ++taken;
        }
        out.states.push_back(s);
    }
    out.steps = taken;
    return out;
}

/// The state after exactly j steps, frozen at the final state for runs that end sooner.
/// Absent when the budget runs out before step j.
inline std::optional<State> post_j(const Program& p, std::size_t j, const State& s0, std::size_t budget) {
    auto obs = observe(p, s0, {ObsPoint::at(j)}, budget);
    if (obs.status == Observation::Status::failed) throw RuntimeError(obs.error, obs.error_step);
    if (obs.status == Observation::Status::inconclusive) return std::nullopt;
    return obs.states.front();
}

inline Outcome post_plus(const Program& p, const State& s0, std::size_t budget) {
    auto obs = observe(p, s0, {ObsPoint::end()}, budget);
    switch (obs.status) {
    case Observation::Status::ok: return Outcome{Outcome::Final{obs.states.front(), obs.steps}};
    case Observation::Status::inconclusive: return Outcome{Outcome::Diverged{}};
    case Observation::Status::failed: return Outcome{Outcome::Failed{obs.error, obs.error_step}};
    }
    return Outcome{Outcome::Diverged{}};
}

/// State at an observation point; throws Inconclusive on budget exhaustion and RuntimeError on failure.
inline State post_at(const Program& p, ObsPoint pt, const State& s0, std::size_t budget) {
    auto obs = observe(p, s0, {pt}, budget);
    if (obs.status == Observation::Status::failed) throw RuntimeError(obs.error, obs.error_step);
    if (obs.status == Observation::Status::inconclusive)
        throw Inconclusive("budget of " + std::to_string(budget) + " steps exhausted before point " + pt.str());
    return obs.states.front();
}

/// Additive lift of post at a point to a set of states.
inline std::set<State> lift_post(const Program& p, ObsPoint pt, const std::set<State>& S, std::size_t budget) {
    std::set<State> out;
    for (const auto& s : S) out.insert(post_at(p, pt, s, budget));
    return out;
}

inline std::set<State> lift_post_j(const Program& p, std::size_t j, const std::set<State>& S, std::size_t budget) {
    return lift_post(p, ObsPoint::at(j), S, budget);
}

// ---------------------------------------------------------------------------
// Finite input spaces.

/// The finite set of initial states: the product of per-variable ranges, first variable slowest.
class InputSpace {
  public:
    InputSpace() = default;
    explicit InputSpace(std::vector<lang::Range> ranges) : ranges_(std::move(ranges)) {
        size_ = 1;
        for (const auto& r : ranges_) {
            if (r.lo > r.hi) throw std::invalid_argument("InputSpace: empty range");
            size_ *= r.size();
        }
    }

    /// Declared ranges, with `fallback` for undeclared ones.
    static InputSpace for_program(const Program& p, lang::Range fallback) {
        std::vector<lang::Range> rs;
        for (const auto& d : p.decls) rs.push_back(d.input_range.value_or(fallback));
        return InputSpace(std::move(rs));
    }

    std::size_t size() const { return size_; }
    std::size_t arity() const { return ranges_.size(); }
    const std::vector<lang::Range>& ranges() const { return ranges_; }
    const lang::Range& range(std::size_t slot) const { return ranges_[slot]; }

    State state_at(std::size_t index) const {
        State s(ranges_.size());
        for (std::size_t k = ranges_.size(); k-- > 0;) {
            std::size_t n = ranges_[k].size();
            s[k] = ranges_[k].lo + static_cast<Value>(index % n);
            index /= n;
        }
        return s;
    }

    std::optional<std::size_t> index_of(const State& s) const {
        if (s.size() != ranges_.size()) return std::nullopt;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < ranges_.size(); ++k) {
            if (!ranges_[k].contains(s[k])) return std::nullopt;
            idx = idx * ranges_[k].size() + static_cast<std::size_t>(s[k] - ranges_[k].lo);
        }
        return idx;
    }

    bool contains(const State& s) const { return index_of(s).has_value(); }

    std::vector<State> states() const {
        std::vector<State> out;
        out.reserve(size_);
        for (std::size_t i = 0; i < size_; ++i) out.push_back(state_at(i));
        return out;
    }

    /// Values a single slot ranges over.
    std::vector<Value> values(std::size_t slot) const {
        std::vector<Value> out;
        for (Value v = ranges_[slot].lo; v <= ranges_[slot].hi; ++v) out.push_back(v);
        return out;
    }

  private:
    std::vector<lang::Range> ranges_;
    std::size_t size_ = 1;
};

/// Restriction of a state to a list of slots.
inline std::vector<Value> project(const State& s, const std::vector<std::size_t>& slots) {
    std::vector<Value> out;
    out.reserve(slots.size());
    for (auto k : slots) out.push_back(s[k]);
    return out;
}

/// Finite pre-image: the initial states whose state at `pt` lies in T. Errors and divergence are skipped
/// unless `strict`, in which case divergence raises Inconclusive.
inline std::set<State> preimage(const Program& p, ObsPoint pt, const std::set<State>& T, const InputSpace& space,
                                std::size_t budget, bool strict = true) {
    std::set<State> out;
    for (std::size_t i = 0; i < space.size(); ++i) {
        State s = space.state_at(i);
        auto obs = observe(p, s, {pt}, budget);
        if (obs.status == Observation::Status::inconclusive) {
            if (strict)
                throw Inconclusive("budget of " + std::to_string(budget) + " steps exhausted before point " + pt.str());
            continue;
        }
        if (obs.status == Observation::Status::failed) continue;
        if (T.count(obs.states.front())) out.insert(std::move(s));
    }
    return out;
}

inline std::set<State> preimage_j(const Program& p, std::size_t j, const std::set<State>& T, const InputSpace& space,
                                  std::size_t budget) {
    return preimage(p, ObsPoint::at(j), T, space, budget);
}

}  // namespace ani::semantics
