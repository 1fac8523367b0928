// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace ani::domains {

/// A subset of a finite universe {0, ..., n-1}.
using Subset = boost::dynamic_bitset<>;

inline Subset full_subset(std::size_t n) {
    Subset s(n);
    s.set();
    return s;
}

inline Subset subset_of(std::size_t n, const std::vector<std::size_t>& members) {
    Subset s(n);
    for (auto m : members) s.set(m);
    return s;
}

inline std::vector<std::size_t> members_of(const Subset& s) {
    std::vector<std::size_t> out;
    for (auto i = s.find_first(); i != Subset::npos; i = s.find_next(i)) out.push_back(i);
    return out;
}

/// An explicit family of subsets of a finite universe, used for extensional lattice operations.
class MooreFamily {
  public:
    MooreFamily() = default;
    explicit MooreFamily(std::size_t universe) : n_(universe) {}
    MooreFamily(std::size_t universe, std::set<Subset> members) : n_(universe), members_(std::move(members)) {
        for (const auto& m : members_)
            if (m.size() != n_) throw std::invalid_argument("MooreFamily: member over a different universe");
    }

    /// The least intersection-closed family containing the generators and the full universe.
    static MooreFamily closure_of(std::size_t universe, const std::vector<Subset>& generators) {
        std::set<Subset> fam{full_subset(universe)};
        for (const auto& g : generators) {
            if (g.size() != universe) throw std::invalid_argument("MooreFamily: generator over a different universe");
            if (fam.count(g)) continue;
            std::vector<Subset> fresh;
            for (const auto& m : fam) fresh.push_back(g & m);
            fam.insert(fresh.begin(), fresh.end());
        }
        return MooreFamily(universe, std::move(fam));
    }

    std::size_t universe() const { return n_; }
    const std::set<Subset>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool contains(const Subset& s) const { return members_.count(s) > 0; }
    void insert(const Subset& s) { members_.insert(s); }

    bool has_top() const { return members_.count(full_subset(n_)) > 0; }

    bool meet_closed() const {
        for (auto a = members_.begin(); a != members_.end(); ++a)
            for (auto b = std::next(a); b != members_.end(); ++b)
                if (!members_.count(*a & *b)) return false;
        return true;
    }

    bool is_moore() const { return has_top() && meet_closed(); }

    /// Least member containing x; the union of all members when none does.
    Subset close(const Subset& x) const {
        Subset out = full_subset(n_);
        bool any = false;
        for (const auto& m : members_)
            if (x.is_subset_of(m)) {
                out &= m;
                any = true;
            }
        if (any) return out;
        Subset all(n_);
        for (const auto& m : members_) all |= m;
        return all;
    }

    /// Singleton closures, one per universe element.
    std::vector<Subset> atoms() const {
        std::vector<Subset> out;
        for (std::size_t i = 0; i < n_; ++i) {
            Subset s(n_);
            s.set(i);
            out.push_back(close(s));
        }
        return out;
    }

    bool operator==(const MooreFamily&) const = default;

  private:
    std::size_t n_ = 0;
    std::set<Subset> members_;
};

/// More concrete or equal: every member of `coarse` is a member of `fine`.
inline bool family_leq(const MooreFamily& fine, const MooreFamily& coarse) {
    for (const auto& m : coarse.members())
        if (!fine.contains(m)) return false;
    return true;
}

/// Lattice meet (most concrete common abstraction): closure of the union.
inline MooreFamily family_meet(const MooreFamily& a, const MooreFamily& b) {
    std::vector<Subset> gens(a.members().begin(), a.members().end());
    gens.insert(gens.end(), b.members().begin(), b.members().end());
    return MooreFamily::closure_of(a.universe(), gens);
}

/// Lattice join: members common to both families.
inline MooreFamily family_join(const MooreFamily& a, const MooreFamily& b) {
    std::set<Subset> common;
    for (const auto& m : a.members())
        if (b.contains(m)) common.insert(m);
    return MooreFamily(a.universe(), std::move(common));
}

/// All unions of the given pairwise-disjoint blocks (including the empty union).
inline MooreFamily unions_of_blocks(std::size_t universe, const std::vector<Subset>& blocks) {
    if (blocks.size() > 24) throw std::length_error("unions_of_blocks: too many blocks to enumerate");
    std::set<Subset> fam;
    for (std::size_t mask = 0; mask < (std::size_t{1} << blocks.size()); ++mask) {
        Subset s(universe);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            if (mask >> b & 1U) s |= blocks[b];
        fam.insert(s);
    }
    return MooreFamily(universe, std::move(fam));
}

}  // namespace ani::domains
