// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ani/domains.hpp"
#include "ani/lang.hpp"
#include "ani/policy.hpp"
#include "ani/semantics.hpp"

namespace ani::checkers {

using domains::AbstractElement;
using domains::Point;
using domains::Uco;
using lang::Mode;
using lang::Program;
using lang::Value;
using semantics::InputSpace;
using semantics::ObsPoint;
using semantics::State;

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

enum class Status { holds, violated, inconclusive };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::holds: return "holds";
    case Status::violated: return "violated";
    case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

struct Witness {
    ObsPoint point;
    State s1, s2;
    std::string obs1, obs2;
    std::string reason;
    std::size_t i = 0, j = 0;  // positions of s1, s2 in input order
};

struct Verdict {
    Status status = Status::holds;
    std::vector<Witness> witnesses;
    std::size_t pairs_checked = 0;
    std::vector<std::string> runtime_errors;
    std::size_t failed_inputs = 0;
    std::size_t diverged_inputs = 0;
};

struct Options {
    std::size_t budget = 10000;
    std::size_t max_witnesses = 10;
};

/// Value interning: equal values get equal small ids.
template <class T>
class Interner {
  public:
    std::size_t id(const T& v) {
        auto [it, fresh] = ids_.try_emplace(v, values_.size());
        if (fresh) values_.push_back(&it->first);
        return it->second;
    }
    const T& value(std::size_t id) const { return *values_[id]; }
    std::size_t size() const { return values_.size(); }

  private:
    std::map<T, std::size_t> ids_;
    std::vector<const T*> values_;
};

inline std::string render_state(const Program& p, const State& s, const std::vector<std::size_t>& slots) {
    std::string out;
    for (std::size_t k = 0; k < slots.size(); ++k)
        out += (k ? ", " : "") + p.decls[slots[k]].name + "=" + std::to_string(s[slots[k]]);
    return out;
}

inline std::string render_state(const Program& p, const State& s) { return render_state(p, s, lang::all_slots(p)); }

// ---------------------------------------------------------------------------
// Executions of every initial state, recorded at a fixed list of points.

class RunTable {
  public:
    RunTable(const Program& p, const InputSpace& space, std::vector<ObsPoint> points, std::size_t budget)
        : prog_(&p), space_(space), points_(std::move(points)), budget_(budget) {
        std::sort(points_.begin(), points_.end());
        points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
        obs_.reserve(space_.size());
        for (std::size_t i = 0; i < space_.size(); ++i)
            obs_.push_back(semantics::observe(p, space_.state_at(i), points_, budget));
        out_slots_ = p.observable_outputs();
    }

    const Program& program() const { return *prog_; }
    const InputSpace& space() const { return space_; }
    std::size_t size() const { return obs_.size(); }
    std::size_t budget() const { return budget_; }
    const std::vector<ObsPoint>& points() const { return points_; }

    std::size_t point_index(ObsPoint pt) const {
        auto it = std::lower_bound(points_.begin(), points_.end(), pt);
        if (it == points_.end() || *it != pt) throw std::out_of_range("point not recorded: " + pt.str());
        return static_cast<std::size_t>(it - points_.begin());
    }

    bool ok(std::size_t i) const { return obs_[i].status == semantics::Observation::Status::ok; }
    bool failed(std::size_t i) const { return obs_[i].status == semantics::Observation::Status::failed; }
    bool diverged(std::size_t i) const { return obs_[i].status == semantics::Observation::Status::inconclusive; }
    const semantics::Observation& observation(std::size_t i) const { return obs_[i]; }

    const State& state(std::size_t i, std::size_t k) const { return obs_[i].states[k]; }
    Point output(std::size_t i, std::size_t k) const { return semantics::project(obs_[i].states[k], out_slots_); }
    const std::vector<std::size_t>& output_slots() const { return out_slots_; }

  private:
    const Program* prog_;
    InputSpace space_;
    std::vector<ObsPoint> points_;
    std::size_t budget_;
    std::vector<semantics::Observation> obs_;
    std::vector<std::size_t> out_slots_;
};

// ---------------------------------------------------------------------------
// Lifting an input to the concretization of its abstraction, within the input space.

/// Enumerates ext(d(s|slots)) ∩ space with the remaining variables fixed to their values in s.
class Lifter {
  public:
    Lifter(const Uco& d, std::vector<std::size_t> slots, const InputSpace& space)
        : dom_(d), slots_(std::move(slots)), space_(space) {
        if (dom_.arity() != slots_.size()) throw domains::DomainError("lift: domain arity does not match variables");
    }

    std::vector<std::size_t> lift(const State& s) {
        Point sub = semantics::project(s, slots_);
        auto elem = dom_.apply_one(sub);
        auto it = cache_.find(elem);
        if (it == cache_.end()) it = cache_.emplace(elem, combos(elem)).first;
        std::vector<std::size_t> out;
        State t = s;
        for (const auto& combo : it->second) {
            for (std::size_t k = 0; k < slots_.size(); ++k) t[slots_[k]] = combo[k];
            out.push_back(*space_.index_of(t));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    bool is_identity() const { return dom_.is_identity(); }

  private:
    const Uco& dom_;
    std::vector<std::size_t> slots_;
    const InputSpace& space_;
    std::map<AbstractElement, std::vector<Point>> cache_;

    // All value tuples over slots_ inside the closed set of elem.
    std::vector<Point> combos(const AbstractElement& elem) const {
        const std::size_t n = slots_.size();
        std::vector<std::vector<Value>> per_pos(n);
        std::vector<bool> covered(n, false);
        std::vector<std::vector<Point>> groups;             // allowed sub-tuples per multi-position component
        std::vector<std::vector<std::size_t>> group_pos;    // their positions
        const auto& comps = dom_.components();
        for (std::size_t k = 0; k < comps.size(); ++k) {
            const auto& pos = comps[k].positions;
            for (auto q : pos) covered[q] = true;
            if (pos.size() == 1) {
                for (auto v : space_.values(slots_[pos[0]]))
                    if (dom_.component_contains(k, elem.parts[k], {v})) per_pos[pos[0]].push_back(v);
                continue;
            }
            std::vector<Point> allowed;
            Point cur(pos.size());
            std::function<void(std::size_t)> rec = [&](std::size_t d) {
                if (d == pos.size()) {
                    if (dom_.component_contains(k, elem.parts[k], cur)) allowed.push_back(cur);
                    return;
                }
                for (auto v : space_.values(slots_[pos[d]])) {
                    cur[d] = v;
                    rec(d + 1);
                }
            };
            rec(0);
            groups.push_back(std::move(allowed));
            group_pos.push_back(pos);
        }
        for (std::size_t q = 0; q < n; ++q)
            if (!covered[q]) per_pos[q] = space_.values(slots_[q]);

        std::vector<Point> out;
        Point cur(n);
        std::vector<bool> in_group(n, false);
        for (const auto& gp : group_pos)
            for (auto q : gp) in_group[q] = true;
        std::function<void(std::size_t)> singles = [&](std::size_t q) {
            if (q == n) {
                out.push_back(cur);
                return;
            }
            if (in_group[q]) return singles(q + 1);
            for (auto v : per_pos[q]) {
                cur[q] = v;
                singles(q + 1);
            }
        };
        std::function<void(std::size_t)> multi = [&](std::size_t g) {
            if (g == groups.size()) return singles(0);
            for (const auto& sub : groups[g]) {
                for (std::size_t d = 0; d < group_pos[g].size(); ++d) cur[group_pos[g][d]] = sub[d];
                multi(g + 1);
            }
        };
        multi(0);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Grouped pair comparison.

namespace detail {

/// Marks inputs the comparison must skip and records why.
inline void note_invalid(const RunTable& run, std::size_t i, Verdict& v, std::size_t max_notes) {
    if (run.failed(i)) {
        ++v.failed_inputs;
        if (v.runtime_errors.size() < max_notes) {
            const auto& o = run.observation(i);
            v.runtime_errors.push_back(std::string("runtime_error ") + semantics::to_string(o.error) + " at step " +
                                       std::to_string(o.error_step) + " from " +
                                       render_state(run.program(), run.space().state_at(i)));
        }
    } else if (run.diverged(i)) {
        ++v.diverged_inputs;
    }
}

/// For every group of equal keys, reports pairs whose observations differ. Entries equal to npos
/// are skipped. Witnesses for the whole verdict are the smallest by (point, i, j).
template <class Render>
void compare_grouped(const std::vector<std::size_t>& key, const std::vector<std::size_t>& obs, ObsPoint pt,
                     const RunTable& run, Render render, const std::string& reason, Verdict& v, std::size_t k_max) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < key.size(); ++i)
        if (key[i] != npos && obs[i] != npos) groups[key[i]].push_back(i);
    std::vector<Witness> found;
    const std::size_t cap = std::max<std::size_t>(k_max, 1);
    for (const auto& [k, members] : groups) {
        (void)k;
        const std::size_t m = members.size();
        v.pairs_checked += m * (m - 1) / 2;
        std::map<std::size_t, std::size_t> after;
        for (auto i : members) ++after[obs[i]];
        std::size_t remaining = m, taken = 0;
        for (std::size_t a = 0; a < m && taken < cap; ++a) {
            std::size_t i = members[a];
            --after[obs[i]];
            --remaining;
            if (remaining == after[obs[i]]) continue;
            for (std::size_t b = a + 1; b < m && taken < cap; ++b) {
                std::size_t j = members[b];
                if (obs[j] == obs[i]) continue;
                Witness w;
                w.point = pt;
                w.i = i;
                w.j = j;
                w.s1 = run.space().state_at(i);
                w.s2 = run.space().state_at(j);
                w.obs1 = render(obs[i]);
                w.obs2 = render(obs[j]);
                w.reason = reason;
                found.push_back(std::move(w));
                ++taken;
            }
        }
    }
    v.witnesses.insert(v.witnesses.end(), found.begin(), found.end());
}

inline void finish(Verdict& v, std::size_t k_max) {
    std::sort(v.witnesses.begin(), v.witnesses.end(), [](const Witness& a, const Witness& b) {
        if (a.point != b.point) return a.point < b.point;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    const bool violated = !v.witnesses.empty();
    if (v.witnesses.size() > k_max) v.witnesses.resize(k_max);
    if (violated)
        v.status = Status::violated;
    else if (v.diverged_inputs > 0)
        v.status = Status::inconclusive;
    else
        v.status = Status::holds;
}

inline std::string render_point(const Program& p, const std::vector<std::size_t>& slots, const Point& x) {
    std::string out;
    for (std::size_t k = 0; k < slots.size(); ++k)
        out += (k ? ", " : "") + p.decls[slots[k]].name + "=" + std::to_string(x[k]);
    return out.empty() ? "()" : out;
}

inline std::string render_set(const Program& p, const std::vector<std::size_t>& slots, const std::set<Point>& xs) {
    std::string out = "{";
    bool first = true;
    for (const auto& x : xs) {
        out += (first ? "(" : ", (") + render_point(p, slots, x) + ")";
        first = false;
    }
    return out + "}";
}

/// Keys by the abstraction of the input restricted to `slots`.
inline std::vector<std::size_t> abstract_keys(const RunTable& run, const Uco& d, const std::vector<std::size_t>& slots,
                                             Interner<AbstractElement>& ids) {
    std::vector<std::size_t> key(run.size());
    for (std::size_t i = 0; i < run.size(); ++i)
        key[i] = ids.id(d.apply_one(semantics::project(run.space().state_at(i), slots)));
    return key;
}

inline std::vector<std::size_t> concrete_keys(const RunTable& run, const std::vector<std::size_t>& slots) {
    Interner<Point> ids;
    std::vector<std::size_t> key(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) key[i] = ids.id(semantics::project(run.space().state_at(i), slots));
    return key;
}

/// Observable outputs of every lifted input at point index k, or nullopt when a member failed or diverged.
inline std::optional<std::set<Point>> lifted_outputs(const RunTable& run, const std::vector<std::size_t>& members,
                                                     std::size_t k) {
    std::set<Point> outs;
    for (auto t : members) {
        if (!run.ok(t)) return std::nullopt;
        outs.insert(run.output(t, k));
    }
    return outs;
}

/// Observation of each input: rho applied to the outputs of its lift (or its own output when no lift).
/// Inputs whose lift meets a failed or diverged run get npos; those runs are counted separately.
inline std::vector<std::size_t> lifted_observations(const RunTable& run, std::size_t k, Lifter* lifter, const Uco& rho,
                                                    Interner<AbstractElement>& ids) {
    std::vector<std::size_t> obs(run.size(), npos);
    for (std::size_t i = 0; i < run.size(); ++i) {
        std::vector<std::size_t> members = lifter ? lifter->lift(run.space().state_at(i)) : std::vector<std::size_t>{i};
        auto outs = lifted_outputs(run, members, k);
        if (outs) obs[i] = ids.id(rho.apply(*outs));
    }
    return obs;
}

inline void count_invalid(const RunTable& run, Verdict& v, std::size_t notes) {
    for (std::size_t i = 0; i < run.size(); ++i)
        if (!run.ok(i)) note_invalid(run, i, v, notes);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standard and trace-based non-interference.

inline Verdict check_trace_ni(const Program& p, const std::vector<ObsPoint>& points, const InputSpace& space,
                              const Options& opt = {}) {
    RunTable run(p, space, points, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto key = detail::concrete_keys(run, p.observable_inputs());
    for (std::size_t k = 0; k < run.points().size(); ++k) {
        Interner<Point> ids;
        std::vector<std::size_t> obs(run.size(), npos);
        for (std::size_t i = 0; i < run.size(); ++i)
            if (run.ok(i)) obs[i] = ids.id(run.output(i, k));
        auto render = [&](std::size_t id) { return detail::render_point(p, run.output_slots(), ids.value(id)); };
        detail::compare_grouped(key, obs, run.points()[k], run, render, "observable outputs differ", v,
                                opt.max_witnesses);
    }
    detail::finish(v, opt.max_witnesses);
    return v;
}

inline Verdict check_ni(const Program& p, const InputSpace& space, const Options& opt = {}) {
    return check_trace_ni(p, {ObsPoint::end()}, space, opt);
}

/// Narrow abstract non-interference: runs selected by phiL on observable inputs, outputs observed through rho.
inline Verdict check_nani(const Program& p, const Uco& phiL, const Uco& rho, const InputSpace& space,
                          const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    Interner<AbstractElement> kid, oid;
    auto key = detail::abstract_keys(run, phiL, p.observable_inputs(), kid);
    auto obs = detail::lifted_observations(run, 0, nullptr, rho, oid);
    auto render = [&](std::size_t id) { return rho.render(oid.value(id)); };
    detail::compare_grouped(key, obs, ObsPoint::end(), run, render, "output abstractions differ", v, opt.max_witnesses);
    detail::finish(v, opt.max_witnesses);
    return v;
}

/// Trace-based abstract non-interference; eta acts on whole states, rho on observable outputs.
inline Verdict check_trace_ani(const Program& p, const std::vector<ObsPoint>& points, const Uco& eta, const Uco& rho,
                               const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, points, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto key = detail::concrete_keys(run, p.observable_inputs());
    Lifter lifter(eta, lang::all_slots(p), space);
    for (std::size_t k = 0; k < run.points().size(); ++k) {
        Interner<AbstractElement> oid;
        auto obs = detail::lifted_observations(run, k, eta.is_identity() ? nullptr : &lifter, rho, oid);
        auto render = [&](std::size_t id) { return rho.render(oid.value(id)); };
        detail::compare_grouped(key, obs, run.points()[k], run, render, "output abstractions differ", v,
                                opt.max_witnesses);
    }
    detail::finish(v, opt.max_witnesses);
    return v;
}

namespace detail {

inline Verdict ani_with_keys(const Program& p, const Uco& etaL, const Uco& rho, const InputSpace& space,
                             const Options& opt, bool abstract_selection) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    Verdict v;
    count_invalid(run, v, opt.max_witnesses);
    Interner<AbstractElement> kid, oid;
    auto low = p.observable_inputs();
    auto key = abstract_selection ? abstract_keys(run, etaL, low, kid) : concrete_keys(run, low);
    Lifter lifter(etaL, low, space);
    auto obs = lifted_observations(run, 0, etaL.is_identity() ? nullptr : &lifter, rho, oid);
    auto render = [&](std::size_t id) { return rho.render(oid.value(id)); };
    compare_grouped(key, obs, ObsPoint::end(), run, render, "abstract output observations differ", v,
                    opt.max_witnesses);
    finish(v, opt.max_witnesses);
    return v;
}

}  // namespace detail

/// Abstract non-interference: runs agreeing on observable inputs, executed on the etaL-lift of their
/// observable part, observed through rho.
inline Verdict check_ani(const Program& p, const Uco& etaL, const Uco& rho, const InputSpace& space,
                         const Options& opt = {}) {
    return detail::ani_with_keys(p, etaL, rho, space, opt, false);
}

/// Whether selecting pairs by concrete or by abstracted observable input gives the same status.
inline bool check_ani_equiv_formulations(const Program& p, const Uco& etaL, const Uco& rho, const InputSpace& space,
                                         const Options& opt = {}) {
    return detail::ani_with_keys(p, etaL, rho, space, opt, false).status ==
           detail::ani_with_keys(p, etaL, rho, space, opt, true).status;
}

/// Declassification by blocking: internal inputs range over their etaH block; output sets compared.
inline Verdict check_bdni(const Program& p, const Uco& etaH, const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto key = detail::concrete_keys(run, p.observable_inputs());
    Lifter lifter(etaH, p.internal_inputs(), space);
    auto id = domains::identity(run.output_slots().size());
    Interner<AbstractElement> oid;
    auto obs = detail::lifted_observations(run, 0, &lifter, id, oid);
    auto render = [&](std::size_t i) {
        return detail::render_set(p, run.output_slots(), oid.value(i).parts.empty() ? std::set<Point>{}
                                                                                    : oid.value(i).parts[0].exact);
    };
    detail::compare_grouped(key, obs, ObsPoint::end(), run, render, "output sets differ", v, opt.max_witnesses);
    detail::finish(v, opt.max_witnesses);
    return v;
}

/// Declassification by allowing: only runs whose internal inputs share the phiH abstraction are compared.
inline Verdict check_adni(const Program& p, const Uco& phiH, const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto low = detail::concrete_keys(run, p.observable_inputs());
    Interner<AbstractElement> hid;
    auto high = detail::abstract_keys(run, phiH, p.internal_inputs(), hid);
    Interner<std::pair<std::size_t, std::size_t>> kid;
    std::vector<std::size_t> key(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) key[i] = kid.id({low[i], high[i]});
    Interner<Point> ids;
    std::vector<std::size_t> obs(run.size(), npos);
    for (std::size_t i = 0; i < run.size(); ++i)
        if (run.ok(i)) obs[i] = ids.id(run.output(i, 0));
    auto render = [&](std::size_t id) { return detail::render_point(p, run.output_slots(), ids.value(id)); };
    detail::compare_grouped(key, obs, ObsPoint::end(), run, render, "observable outputs differ", v, opt.max_witnesses);
    detail::finish(v, opt.max_witnesses);
    return v;
}

/// Declassified abstract non-interference: phi selects pairs, eta lifts inputs, rho observes outputs.
inline Verdict check_dani(const Program& p, const Uco& phi, const Uco& eta, const Uco& rho, const InputSpace& space,
                          const Options& opt = {}) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto all = lang::all_slots(p);
    Interner<AbstractElement> kid, oid;
    auto key = detail::abstract_keys(run, phi, all, kid);
    Lifter lifter(eta, all, space);
    auto obs = detail::lifted_observations(run, 0, eta.is_identity() ? nullptr : &lifter, rho, oid);
    auto render = [&](std::size_t id) { return rho.render(oid.value(id)); };
    detail::compare_grouped(key, obs, ObsPoint::end(), run, render, "abstract output observations differ", v,
                            opt.max_witnesses);
    detail::finish(v, opt.max_witnesses);
    return v;
}

/// Selection keys of trace-based declassified NI at every point (in sorted point order). In incremental
/// mode the key at j combines the protections of every observed point up to j, which identifies inputs
/// exactly when their closures under the meet of those protections coincide.
inline std::vector<std::vector<std::size_t>> trace_dni_keys(const Program& p, const std::vector<ObsPoint>& points,
                                                            const std::map<ObsPoint, Uco>& phi_map, const Uco& default_phi,
                                                            Mode mode, const InputSpace& space) {
    std::vector<ObsPoint> pts(points);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto all = lang::all_slots(p);
    std::vector<std::vector<std::size_t>> local;
    for (const auto& pt : pts) {
        auto it = phi_map.find(pt);
        const Uco& d = it == phi_map.end() ? default_phi : it->second;
        Interner<AbstractElement> ids;
        std::vector<std::size_t> key(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) key[i] = ids.id(d.apply_one(space.state_at(i)));
        local.push_back(std::move(key));
    }
    if (mode == Mode::localized) return local;
    std::vector<std::vector<std::size_t>> acc;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        Interner<std::vector<std::size_t>> ids;
        std::vector<std::size_t> key(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            std::vector<std::size_t> tuple;
            for (std::size_t q = 0; q <= k; ++q) tuple.push_back(local[q][i]);
            key[i] = ids.id(tuple);
        }
        acc.push_back(std::move(key));
    }
    return acc;
}

inline Verdict check_trace_dni(const Program& p, const std::vector<ObsPoint>& points,
                               const std::map<ObsPoint, Uco>& phi_map, const Uco& default_phi, Mode mode,
                               const InputSpace& space, const Options& opt = {}) {
    RunTable run(p, space, points, opt.budget);
    Verdict v;
    detail::count_invalid(run, v, opt.max_witnesses);
    auto keys = trace_dni_keys(p, run.points(), phi_map, default_phi, mode, space);
    for (std::size_t k = 0; k < run.points().size(); ++k) {
        Interner<Point> ids;
        std::vector<std::size_t> obs(run.size(), npos);
        for (std::size_t i = 0; i < run.size(); ++i)
            if (run.ok(i)) obs[i] = ids.id(run.output(i, k));
        auto render = [&](std::size_t id) { return detail::render_point(p, run.output_slots(), ids.value(id)); };
        detail::compare_grouped(keys[k], obs, run.points()[k], run, render, "observable outputs differ", v,
                                opt.max_witnesses);
    }
    detail::finish(v, opt.max_witnesses);
    return v;
}

}  // namespace ani::checkers
