// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
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

namespace ani::derive {

using checkers::Interner;
using checkers::Options;
using checkers::RunTable;
using checkers::Status;
using domains::AbstractElement;
using domains::MooreFamily;
using domains::Point;
using domains::Subset;
using domains::Uco;
using lang::Mode;
using lang::Program;
using lang::Value;
using semantics::InputSpace;
using semantics::ObsPoint;
using semantics::State;

// ---------------------------------------------------------------------------
// Indistinguishable outputs and the most concrete harmless observer.

struct UndistFamily {
    std::vector<Point> universe;          // reachable observable outputs, sorted
    std::vector<std::set<Point>> blocks;  // distinct blocks, sorted
    std::size_t excluded = 0;             // inputs dropped for divergence or runtime errors
    bool inconclusive = false;
};

/// One block per class of observable inputs: the observable outputs reachable from that class as
/// internal inputs vary. Classes are delta-classes, or single observable inputs when `narrow`.
inline UndistFamily undist_sets(const Program& p, const Uco& delta, const InputSpace& space, const Options& opt = {},
                                bool narrow = false) {
    RunTable run(p, space, {ObsPoint::end()}, opt.budget);
    UndistFamily out;
    auto low = p.observable_inputs();
    Interner<AbstractElement> aid;
    auto key = narrow ? checkers::detail::concrete_keys(run, low) : checkers::detail::abstract_keys(run, delta, low, aid);
    std::map<std::size_t, std::set<Point>> by_class;
    std::set<Point> reach;
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (!run.ok(i)) {
            ++out.excluded;
            out.inconclusive = out.inconclusive || run.diverged(i);
            continue;
        }
        auto o = run.output(i, 0);
        by_class[key[i]].insert(o);
        reach.insert(o);
    }
    std::set<std::set<Point>> blocks;
    for (auto& [k, b] : by_class) blocks.insert(std::move(b));
    out.blocks.assign(blocks.begin(), blocks.end());
    out.universe.assign(reach.begin(), reach.end());
    return out;
}

/// A derived observer on observable outputs together with its closed sets on the reachable universe.
struct Observer {
    Uco uco;
    std::vector<Point> universe;
    std::vector<std::set<Point>> atoms;  // least closed sets of single outputs, when the family is partitioning
    std::vector<std::set<Point>> family; // closed sets, listed when small enough
    bool literal = false;
};

namespace detail {

// Connected components of the overlap graph of the blocks.
inline std::vector<std::set<Point>> components(const UndistFamily& u) {
    std::map<Point, std::size_t> parent_of;
    std::vector<std::size_t> parent;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& y : u.universe) {
        parent_of[y] = parent.size();
        parent.push_back(parent.size());
    }
    for (const auto& b : u.blocks) {
        if (b.empty()) continue;
        auto r = find(parent_of.at(*b.begin()));
        for (const auto& y : b) parent[find(parent_of.at(y))] = r;
    }
    std::map<std::size_t, std::set<Point>> comps;
    for (const auto& y : u.universe) comps[find(parent_of.at(y))].insert(y);
    std::vector<std::set<Point>> out;
    for (auto& [r, c] : comps) out.push_back(std::move(c));
    std::sort(out.begin(), out.end());
    return out;
}

// Every union of the atoms; the empty union only when there are at least two atoms.
inline std::vector<std::set<Point>> unions_of_atoms(const std::vector<std::set<Point>>& atoms) {
    if (atoms.size() > 20) throw std::length_error("too many atoms to list every union");
    std::set<std::set<Point>> fam;
    for (std::size_t mask = 0; mask < (std::size_t{1} << atoms.size()); ++mask) {
        if (mask == 0 && atoms.size() < 2) continue;
        std::set<Point> s;
        for (std::size_t a = 0; a < atoms.size(); ++a)
            if (mask >> a & 1U) s.insert(atoms[a].begin(), atoms[a].end());
        fam.insert(std::move(s));
    }
    return {fam.begin(), fam.end()};
}

inline std::size_t arity_of(const UndistFamily& u, const Program& p) {
    return u.universe.empty() ? p.observable_outputs().size() : u.universe.front().size();
}

}  // namespace detail

inline constexpr std::size_t listed_atoms_limit = 5;

/// The most concrete observer that never splits a block: its closed sets are the sets X with
/// X ∩ Z ≠ ∅ ⇒ Z ⊆ X for every block Z. With `literal`, the sets satisfying
/// (∃Z. Z ⊆ X) ⇒ (∀W. W ⊆ X) are taken instead and closed under intersection.
inline Observer harmless_observer(const Program& p, const UndistFamily& u, bool literal = false) {
    const std::size_t arity = detail::arity_of(u, p);
    Observer obs;
    obs.universe = u.universe;
    obs.literal = literal;
    if (!literal) {
        obs.atoms = detail::components(u);
        obs.uco = domains::unions_of(arity, obs.atoms, "harmless");
        if (obs.atoms.size() <= listed_atoms_limit) obs.family = detail::unions_of_atoms(obs.atoms);
        return obs;
    }
    const std::size_t n = u.universe.size();
    if (n > 16) throw std::length_error("literal observer: more than 16 reachable outputs");
    std::vector<Subset> blocks;
    for (const auto& b : u.blocks) blocks.push_back(domains::to_subset({b.begin(), b.end()}, u.universe));
    std::vector<Subset> gens;
    for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) {
        Subset x(n, m);
        bool some = false, all = true;
        for (const auto& z : blocks) {
            bool in = z.is_subset_of(x);
            some = some || in;
            all = all && in;
        }
        if (!some || all) gens.push_back(x);
    }
    auto fam = MooreFamily::closure_of(n, gens);
    std::vector<std::set<Point>> members;
    for (const auto& m : fam.members()) {
        auto pts = domains::from_subset(m, u.universe);
        members.emplace_back(pts.begin(), pts.end());
    }
    std::sort(members.begin(), members.end());
    obs.family = members;
    obs.uco = domains::explicit_family(arity, members, "harmless-literal");
    return obs;
}

/// Sets of reachable outputs that split some block: every subset when the universe has at most 12
/// outputs, otherwise single outputs, their complements and `samples` seeded random subsets.
inline std::vector<std::set<Point>> splitting_candidates(const UndistFamily& u, std::size_t samples = 64,
                                                         std::uint64_t seed = 1) {
    const std::size_t n = u.universe.size();
    std::vector<Subset> blocks;
    for (const auto& b : u.blocks) blocks.push_back(domains::to_subset({b.begin(), b.end()}, u.universe));
    auto splits = [&](const Subset& x) {
        for (const auto& z : blocks)
            if (z.intersects(x) && !z.is_subset_of(x)) return true;
        return false;
    };
    std::set<Subset> cands;
    if (n <= 12) {
        for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) cands.insert(Subset(n, m));
    } else {
        for (std::size_t y = 0; y < n; ++y) {
            Subset s(n);
            s.set(y);
            cands.insert(s);
            cands.insert(~s);
        }
        std::mt19937_64 rng(seed);
        for (std::size_t k = 0; k < samples; ++k) {
            Subset s(n);
            for (std::size_t y = 0; y < n; ++y)
                if (rng() & 1U) s.set(y);
            cands.insert(s);
        }
    }
    std::vector<std::set<Point>> out;
    for (const auto& c : cands) {
        if (!splits(c)) continue;
        auto pts = domains::from_subset(c, u.universe);
        out.emplace_back(pts.begin(), pts.end());
    }
    return out;
}

/// The observer with X added as a further closed set (re-closed under intersection).
inline Uco enlarge_observer(const Program& p, const UndistFamily& u, const Observer& obs, const std::set<Point>& extra) {
    const std::size_t arity = detail::arity_of(u, p);
    std::vector<domains::BaseProperty> bases;
    for (std::size_t i = 0; i < obs.atoms.size(); ++i) {
        auto atom = std::make_shared<const std::set<Point>>(obs.atoms[i]);
        bases.push_back({"~B" + std::to_string(i), [atom](const Point& y) { return atom->count(y) == 0; }});
    }
    auto x = std::make_shared<const std::set<Point>>(extra);
    bases.push_back({"X", [x](const Point& y) { return x->count(y) > 0; }});
    return domains::relational(arity, std::move(bases), "harmless+X");
}

struct ObserverCheck {
    Status soundness = Status::holds;  // NANI with the derived observer
    std::size_t candidates = 0;        // block-splitting enlargements tried
    std::size_t broken = 0;            // enlargements under which NANI is violated
    std::string first_surviving;       // an enlargement that did not break NANI, if any
    bool maximal() const { return broken == candidates; }
};

/// Soundness and desk-scale maximality of the harmless observer.
inline ObserverCheck check_observer(const Program& p, const Uco& delta, const InputSpace& space, const Options& opt = {},
                                    bool literal = false, std::size_t samples = 64, std::uint64_t seed = 1,
                                    std::size_t max_candidates = 512) {
    auto u = undist_sets(p, delta, space, opt);
    auto obs = harmless_observer(p, u, literal);
    ObserverCheck out;
    out.soundness = checkers::check_nani(p, delta, obs.uco, space, opt).status;
    if (literal) return out;
    auto cands = splitting_candidates(u, samples, seed);
    if (cands.size() > max_candidates) cands.resize(max_candidates);
    for (const auto& x : cands) {
        ++out.candidates;
        auto rho = enlarge_observer(p, u, obs, x);
        if (checkers::check_nani(p, delta, rho, space, opt).status == Status::violated) {
            ++out.broken;
        } else if (out.first_surviving.empty()) {
            out.first_surviving = checkers::detail::render_set(p, p.observable_outputs(), x);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Released private information.

/// A partition of internal-input tuples into atoms; its closed sets are the unions of atoms.
struct ReleaseDomain {
    std::vector<std::size_t> slots;               // internal input slots
    std::vector<std::string> names;
    std::vector<Point> universe;                  // all internal-input tuples, sorted
    std::vector<std::size_t> atom_of;             // atom index of every universe element
    std::vector<std::vector<Point>> atoms;        // ordered by least element
    std::vector<std::size_t> support;             // positions within `slots` the atoms depend on
    std::vector<std::vector<std::size_t>> class_block;  // per observable-input class: block id of every atom
    std::size_t excluded = 0;
    bool inconclusive = false;

    std::size_t atom_index(const Point& h) const {
        auto it = std::lower_bound(universe.begin(), universe.end(), h);
        if (it == universe.end() || *it != h) return checkers::npos;
        return atom_of[static_cast<std::size_t>(it - universe.begin())];
    }

    /// Atoms restricted to the support positions.
    std::vector<std::set<Point>> projected_atoms() const {
        std::vector<std::set<Point>> out(atoms.size());
        for (std::size_t a = 0; a < atoms.size(); ++a)
            for (const auto& h : atoms[a]) out[a].insert(semantics::project(h, support));
        return out;
    }

    /// Closed sets restricted to the support positions.
    std::vector<std::set<Point>> projected_family() const { return detail::unions_of_atoms(projected_atoms()); }

    /// Closed sets as subsets of the universe.
    MooreFamily family() const {
        std::vector<Subset> blocks;
        for (const auto& a : atoms) blocks.push_back(domains::to_subset(a, universe));
        auto fam = domains::unions_of_blocks(universe.size(), blocks);
        if (atoms.size() < 2) {
            std::set<Subset> ms = fam.members();
            ms.erase(Subset(universe.size()));
            if (universe.empty()) ms.insert(Subset(0));
            return MooreFamily(universe.size(), ms);
        }
        return fam;
    }

    /// The release as a domain on internal-input tuples, optionally with two atoms merged.
    Uco as_uco(std::size_t merge_a = checkers::npos, std::size_t merge_b = checkers::npos) const {
        auto self = std::make_shared<const ReleaseDomain>(*this);
        return domains::kernel(
            slots.size(),
            [self, merge_a, merge_b](const Point& h) {
                auto a = self->atom_index(h);
                if (a == checkers::npos) return Point{-1};
                if (a == merge_b) a = merge_a;
                return Point{static_cast<Value>(a)};
            },
            "released");
    }
};

namespace detail {

/// Builds the release from, for every input, the class of its observable part and the id of what is
/// observed from it. Internal tuples are identified when every class observes them alike.
inline ReleaseDomain release_from(const Program& p, const InputSpace& space, const std::vector<std::size_t>& cls,
                                  const std::vector<std::size_t>& obs) {
    ReleaseDomain r;
    r.slots = p.internal_inputs();
    r.names = p.names(r.slots);
    std::map<Point, std::map<std::size_t, std::size_t>> sig;
    std::set<std::size_t> classes;
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto h = semantics::project(space.state_at(i), r.slots);
        sig[h][cls[i]] = obs[i];
        classes.insert(cls[i]);
    }
    Interner<std::map<std::size_t, std::size_t>> ids;
    std::map<std::size_t, std::size_t> first_atom;  // signature id -> atom index, in universe order
    for (auto& [h, s] : sig) {
        r.universe.push_back(h);
        auto id = ids.id(s);
        auto [it, fresh] = first_atom.try_emplace(id, r.atoms.size());
        if (fresh) r.atoms.emplace_back();
        r.atoms[it->second].push_back(h);
        r.atom_of.push_back(it->second);
    }
    // Support: positions where changing one coordinate can change the atom.
    for (std::size_t q = 0; q < r.slots.size(); ++q) {
        std::map<Point, std::size_t> rest;
        bool depends = false;
        for (std::size_t u = 0; u < r.universe.size() && !depends; ++u) {
            Point key = r.universe[u];
            key.erase(key.begin() + static_cast<std::ptrdiff_t>(q));
            auto [it, fresh] = rest.try_emplace(key, r.atom_of[u]);
            if (!fresh && it->second != r.atom_of[u]) depends = true;
        }
        if (depends) r.support.push_back(q);
    }
    for (auto c : classes) {
        std::vector<std::size_t> block(r.atoms.size());
        Interner<std::size_t> bid;
        for (std::size_t a = 0; a < r.atoms.size(); ++a) {
            const auto& s = sig.at(r.atoms[a].front());
            block[a] = bid.id(s.at(c));
        }
        r.class_block.push_back(std::move(block));
    }
    return r;
}

}  // namespace detail

/// Released information at a point: internal inputs are split, per delta-class of observable inputs,
/// by the rho-abstraction of the observable outputs of their lifted runs; the classes are combined by
/// common refinement and closed under unions.
inline ReleaseDomain released_info(const Program& p, const Uco& delta, const Uco& rho, const InputSpace& space,
                                   const Options& opt = {}, ObsPoint at = ObsPoint::end()) {
    RunTable run(p, space, {at}, opt.budget);
    auto low = p.observable_inputs();
    Interner<AbstractElement> cid, oid;
    auto cls = checkers::detail::abstract_keys(run, delta, low, cid);
    checkers::Lifter lifter(delta, low, space);
    auto obs = checkers::detail::lifted_observations(run, 0, delta.is_identity() ? nullptr : &lifter, rho, oid);
    auto r = detail::release_from(p, space, cls, obs);
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (run.ok(i)) continue;
        ++r.excluded;
        r.inconclusive = r.inconclusive || run.diverged(i);
    }
    return r;
}

/// Released information at every observation point, for concrete observable inputs. In incremental
/// mode the observation at j is everything observed at the points up to j.
inline std::map<ObsPoint, ReleaseDomain> released_info_at(const Program& p, const std::vector<ObsPoint>& points,
                                                          const Uco& rho, Mode mode, const InputSpace& space,
                                                          const Options& opt = {}) {
    RunTable run(p, space, points, opt.budget);
    auto cls = checkers::detail::concrete_keys(run, p.observable_inputs());
    std::vector<std::vector<std::size_t>> local;
    for (std::size_t k = 0; k < run.points().size(); ++k) {
        Interner<AbstractElement> oid;
        local.push_back(checkers::detail::lifted_observations(run, k, nullptr, rho, oid));
    }
    std::size_t excluded = 0;
    bool diverged = false;
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (run.ok(i)) continue;
        ++excluded;
        diverged = diverged || run.diverged(i);
    }
    std::map<ObsPoint, ReleaseDomain> out;
    for (std::size_t k = 0; k < run.points().size(); ++k) {
        std::vector<std::size_t> obs = local[k];
        if (mode == Mode::incremental) {
            Interner<std::vector<std::size_t>> tid;
            for (std::size_t i = 0; i < run.size(); ++i) {
                std::vector<std::size_t> t;
                for (std::size_t q = 0; q <= k; ++q) t.push_back(local[q][i]);
                obs[i] = tid.id(t);
            }
        }
        auto r = detail::release_from(p, space, cls, obs);
        r.excluded = excluded;
        r.inconclusive = diverged;
        out.emplace(run.points()[k], std::move(r));
    }
    return out;
}

/// Whether every closed set of the release is closed for the declared domain on internal tuples,
/// i.e. the release is at least as abstract as the declared policy.
inline bool policy_satisfied(const ReleaseDomain& released, const Uco& declared) {
    if (declared.arity() != released.slots.size())
        throw domains::DomainError("policy_satisfied: declared domain is over a different carrier");
    const auto fam = released.family();
    for (const auto& m : fam.members())
        if (!declared.closed_on(domains::from_subset(m, released.universe), released.universe)) return false;
    return true;
}

/// The partition of internal-input tuples induced by state domains: two tuples are identified when,
/// for every observable-input valuation of the space, every domain abstracts the two states alike.
inline Uco internal_view(const Program& p, const InputSpace& space, const std::vector<const Uco*>& state_domains) {
    auto hi = p.internal_inputs();
    std::vector<Interner<AbstractElement>> ids(state_domains.size());
    std::map<Point, std::vector<std::size_t>> sig;
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto s = space.state_at(i);
        auto& v = sig[semantics::project(s, hi)];
        for (std::size_t d = 0; d < state_domains.size(); ++d) v.push_back(ids[d].id(state_domains[d]->apply_one(s)));
    }
    Interner<std::vector<std::size_t>> sid;
    auto key = std::make_shared<std::map<Point, Value>>();
    for (const auto& [h, v] : sig) (*key)[h] = static_cast<Value>(sid.id(v));
    return domains::kernel(
        hi.size(),
        [key](const Point& h) {
            auto it = key->find(h);
            return Point{it == key->end() ? Value{-1} : it->second};
        },
        "declared");
}

// ---------------------------------------------------------------------------
// Declassification policies of declassify assignments.

/// For every step at which some run executes a declassify assignment, a domain on initial states:
/// two states are identified when they agree on observable inputs and either neither executes a
/// declassify at that step or both do, with equal declassified values on their initial states.
inline std::map<ObsPoint, Uco> extract_declass_policies(const Program& p, const InputSpace& space,
                                                        const Options& opt = {}) {
    auto low = p.observable_inputs();
    std::map<std::size_t, std::shared_ptr<std::map<State, Point>>> keys;
    std::vector<std::map<std::size_t, Point>> released(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const State s0 = space.state_at(i);
        State s = s0;
        auto pc = semantics::initial_control(p);
        std::size_t taken = 0;
        while (!pc.done() && taken < opt.budget) {
            const auto* cur = pc.current();
            if (const auto* a = std::get_if<lang::Stmt::Assign>(&cur->node); a && a->declassified) {
                Point val;
                try {
                    val = {1, semantics::eval(*a->rhs, s0)};
                } catch (const semantics::detail::EvalFailure&) {
                    val = {2};
                }
                released[i][taken + 1] = std::move(val);
            }
            try {
                semantics::detail::step_in_place(s, pc);
            } catch (const semantics::detail::EvalFailure&) {
                break;
            }
            ++taken;
        }
    }
    std::set<std::size_t> steps;
    for (const auto& r : released)
        for (const auto& [j, v] : r) steps.insert(j);
    std::map<ObsPoint, Uco> out;
    for (auto j : steps) {
        auto table = std::make_shared<std::map<State, Point>>();
        for (std::size_t i = 0; i < space.size(); ++i) {
            auto s0 = space.state_at(i);
            Point k = semantics::project(s0, low);
            auto it = released[i].find(j);
            if (it == released[i].end())
                k.push_back(0);
            else
                k.insert(k.end(), it->second.begin(), it->second.end());
            (*table)[s0] = std::move(k);
        }
        out.emplace(ObsPoint::at(j), domains::kernel(
                                         p.decls.size(),
                                         [table](const Point& s) {
                                             auto it = table->find(s);
                                             return it == table->end() ? Point{-1, -1} : it->second;
                                         },
                                         "declassified@" + std::to_string(j)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Desk-scale checks of the release.

struct ReleaseCheck {
    Status sufficiency = Status::holds;  // A-DNI with the release as protection
    std::size_t merges = 0;              // two-block merges tried
    std::size_t broken = 0;              // merges under which A-DNI is violated
    std::string first_surviving;
    bool necessary() const { return broken == merges; }
};

/// Sufficiency and necessity of the release computed with identity input and output observation.
inline ReleaseCheck check_release(const Program& p, const InputSpace& space, const Options& opt = {}) {
    auto low = p.observable_inputs();
    auto id_low = domains::identity(low.size());
    auto id_out = domains::identity(p.observable_outputs().size());
    auto r = released_info(p, low.empty() ? domains::top(0) : id_low, id_out, space, opt);
    ReleaseCheck out;
    out.sufficiency = checkers::check_adni(p, r.as_uco(), space, opt).status;
    std::set<std::pair<std::size_t, std::size_t>> tried;
    for (const auto& block : r.class_block) {
        std::map<std::size_t, std::size_t> rep;  // block id -> first atom
        for (std::size_t a = 0; a < block.size(); ++a) rep.try_emplace(block[a], a);
        for (auto x = rep.begin(); x != rep.end(); ++x)
            for (auto y = std::next(x); y != rep.end(); ++y) {
                auto pr = std::minmax(x->second, y->second);
                if (!tried.insert(pr).second) continue;
                ++out.merges;
                if (checkers::check_adni(p, r.as_uco(pr.first, pr.second), space, opt).status == Status::violated)
                    ++out.broken;
                else if (out.first_surviving.empty())
                    out.first_surviving = "atoms " + std::to_string(pr.first) + " and " + std::to_string(pr.second);
            }
    }
    return out;
}

}  // namespace ani::derive
