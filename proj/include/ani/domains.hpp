// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ani/lang.hpp"
#include "ani/moore.hpp"

namespace ani::domains {

using lang::Value;

/// A carrier element: the values of a tuple of variables.
using Point = std::vector<Value>;

/// A named decidable predicate on carrier elements.
struct BaseProperty {
    std::string name;
    std::function<bool(const Point&)> holds;
};

class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The closed set assigned to one component of a domain.
struct Part {
    std::vector<std::size_t> bases;  // containing base indices (basis components)
    std::set<Point> exact;           // closed set (identity and family components)
    auto operator<=>(const Part&) const = default;
};

/// Canonical abstract value: one part per component.
struct AbstractElement {
    std::vector<Part> parts;
    auto operator<=>(const AbstractElement&) const = default;
};

/// An upper closure operator on tuples of a fixed arity, given as a product of components over
/// disjoint position groups. Positions not covered by any component are unconstrained.
class Uco {
  public:
    struct Component {
        enum class Kind { basis, identity, family, kernel };
        Kind kind = Kind::basis;
        std::string name;
        std::vector<std::size_t> positions;
        std::vector<BaseProperty> bases;
        std::vector<std::vector<std::size_t>> implied;  // bases known to include base i
        std::vector<std::set<Point>> members;           // family components only
        std::function<Point(const Point&)> key;         // kernel components: closed sets are unions of key classes
    };

    Uco() = default;
    Uco(std::string name, std::size_t arity, std::vector<Component> comps)
        : name_(std::move(name)), arity_(arity), comps_(std::move(comps)) {
        std::vector<bool> used(arity_, false);
        for (const auto& c : comps_) {
            if (c.positions.empty()) throw DomainError("domain component without positions");
            for (auto p : c.positions) {
                if (p >= arity_ || used[p]) throw DomainError("domain components must use disjoint positions");
                used[p] = true;
            }
        }
    }

    const std::string& name() const { return name_; }
    std::size_t arity() const { return arity_; }
    const std::vector<Component>& components() const { return comps_; }

    bool is_top() const {
        for (const auto& c : comps_)
            if (c.kind != Component::Kind::basis || !c.bases.empty()) return false;
        return true;
    }

    bool is_identity() const {
        std::size_t covered = 0;
        for (const auto& c : comps_) {
            if (c.kind != Component::Kind::identity) return false;
            covered += c.positions.size();
        }
        return covered == arity_;
    }

    template <class Range>
    AbstractElement apply(const Range& xs) const {
        AbstractElement out;
        out.parts.reserve(comps_.size());
        for (const auto& c : comps_) {
            Part part;
            switch (c.kind) {
            case Component::Kind::basis:
                for (std::size_t i = 0; i < c.bases.size(); ++i) {
                    bool all = true;
                    for (const auto& x : xs) {
                        check_arity(x);
                        if (!c.bases[i].holds(restrict(x, c.positions))) {
                            all = false;
                            break;
                        }
                    }
                    if (all) part.bases.push_back(i);
                }
                break;
            case Component::Kind::identity:
                for (const auto& x : xs) {
                    check_arity(x);
                    part.exact.insert(restrict(x, c.positions));
                }
                break;
            case Component::Kind::family: {
                std::set<Point> proj;
                for (const auto& x : xs) {
                    check_arity(x);
                    proj.insert(restrict(x, c.positions));
                }
                part.exact = close_in_family(c, proj);
                break;
            }
            case Component::Kind::kernel:
                for (const auto& x : xs) {
                    check_arity(x);
                    part.exact.insert(c.key(restrict(x, c.positions)));
                }
                break;
            }
            out.parts.push_back(std::move(part));
        }
        return out;
    }

    AbstractElement apply_one(const Point& x) const { return apply(std::vector<Point>{x}); }

    /// Membership of a carrier element in the closed set denoted by `e`.
    bool contains(const AbstractElement& e, const Point& x) const {
        check_arity(x);
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            const auto& c = comps_[k];
            Point px = restrict(x, c.positions);
            if (!component_contains(k, e.parts[k], px)) return false;
        }
        return true;
    }

    /// Membership of a sub-tuple (values at component k's positions) in part `part`.
    bool component_contains(std::size_t k, const Part& part, const Point& sub) const {
        const auto& c = comps_[k];
        if (c.kind == Component::Kind::kernel) return part.exact.count(c.key(sub)) > 0;
        if (c.kind != Component::Kind::basis) return part.exact.count(sub) > 0;
        for (auto i : part.bases)
            if (!c.bases[i].holds(sub)) return false;
        return true;
    }

    /// The closed set of `e` restricted to a finite universe.
    std::vector<Point> extension(const AbstractElement& e, const std::vector<Point>& universe) const {
        std::vector<Point> out;
        for (const auto& u : universe)
            if (contains(e, u)) out.push_back(u);
        return out;
    }

    /// Componentwise order: a is below b when every part of a denotes a smaller set.
    bool leq(const AbstractElement& a, const AbstractElement& b) const {
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            const auto& pa = a.parts[k];
            const auto& pb = b.parts[k];
            if (comps_[k].kind == Component::Kind::basis) {
                if (!std::includes(pa.bases.begin(), pa.bases.end(), pb.bases.begin(), pb.bases.end())) return false;
            } else if (!std::includes(pb.exact.begin(), pb.exact.end(), pa.exact.begin(), pa.exact.end())) {
                return false;
            }
        }
        return true;
    }

    std::string render(const AbstractElement& e) const {
        if (comps_.empty()) return "top";
        std::string out;
        if (comps_.size() > 1) out += "(";
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            if (k) out += ", ";
            out += render_part(comps_[k], e.parts[k]);
        }
        if (comps_.size() > 1) out += ")";
        return out;
    }

    /// Sets generating all closed sets, restricted to a universe.
    std::vector<std::vector<Point>> generators(const std::vector<Point>& universe) const {
        std::vector<std::vector<Point>> out;
        auto cylinder = [&](const Component& c, const std::function<bool(const Point&)>& in) {
            std::vector<Point> g;
            for (const auto& u : universe)
                if (in(restrict(u, c.positions))) g.push_back(u);
            out.push_back(std::move(g));
        };
        for (const auto& c : comps_) {
            switch (c.kind) {
            case Component::Kind::basis:
                for (const auto& b : c.bases) cylinder(c, b.holds);
                break;
            case Component::Kind::identity: {
                std::set<Point> seen;
                for (const auto& u : universe) seen.insert(restrict(u, c.positions));
                for (const auto& v : seen) cylinder(c, [&](const Point& p) { return p != v; });
                break;
            }
            case Component::Kind::family:
                for (const auto& m : c.members) cylinder(c, [&](const Point& p) { return m.count(p) > 0; });
                break;
            case Component::Kind::kernel: {
                std::set<Point> keys;
                for (const auto& u : universe) keys.insert(c.key(restrict(u, c.positions)));
                for (const auto& k : keys) cylinder(c, [&](const Point& p) { return c.key(p) != k; });
                break;
            }
            }
        }
        return out;
    }

    /// Whether `xs` (a subset of `universe`) is closed once restricted to `universe`.
    bool closed_on(const std::vector<Point>& xs, const std::vector<Point>& universe) const {
        auto ext = extension(apply(xs), universe);
        std::set<Point> a(ext.begin(), ext.end()), b(xs.begin(), xs.end());
        return a == b;
    }

  private:
    std::string name_ = "top";
    std::size_t arity_ = 0;
    std::vector<Component> comps_;

    void check_arity(const Point& x) const {
        if (x.size() != arity_)
            throw DomainError("carrier mismatch: domain '" + name_ + "' expects tuples of arity " +
                              std::to_string(arity_) + ", got " + std::to_string(x.size()));
    }

    static Point restrict(const Point& x, const std::vector<std::size_t>& positions) {
        Point out;
        out.reserve(positions.size());
        for (auto p : positions) out.push_back(x[p]);
        return out;
    }

    static std::set<Point> close_in_family(const Component& c, const std::set<Point>& xs) {
        std::optional<std::set<Point>> acc;
        for (const auto& m : c.members) {
            if (!std::includes(m.begin(), m.end(), xs.begin(), xs.end())) continue;
            if (!acc) {
                acc = m;
            } else {
                std::set<Point> meet;
                std::set_intersection(acc->begin(), acc->end(), m.begin(), m.end(), std::inserter(meet, meet.end()));
                acc = std::move(meet);
            }
        }
        if (acc) return *acc;
        std::set<Point> all;
        for (const auto& m : c.members) all.insert(m.begin(), m.end());
        return all;
    }

    static std::string render_point(const Point& p) {
        if (p.size() == 1) return std::to_string(p[0]);
        std::string out = "(";
        for (std::size_t i = 0; i < p.size(); ++i) out += (i ? "," : "") + std::to_string(p[i]);
        return out + ")";
    }

    static std::string render_part(const Component& c, const Part& part) {
        if (c.kind != Component::Kind::basis) {
            std::string out = "{";
            bool first = true;
            for (const auto& p : part.exact) {
                out += (first ? "" : ",") + render_point(p);
                first = false;
            }
            return out + "}";
        }
        if (part.bases.empty()) return "top";
        for (auto i : part.bases) {
            std::vector<std::size_t> expect{i};
            if (i < c.implied.size()) expect.insert(expect.end(), c.implied[i].begin(), c.implied[i].end());
            std::sort(expect.begin(), expect.end());
            if (expect == part.bases) return c.bases[i].name;
        }
        if (part.bases.size() == c.bases.size() && c.bases.size() > 1) return "bot";
        std::string out;
        for (std::size_t k = 0; k < part.bases.size(); ++k)
            out += (k ? "&" : "") + c.bases[part.bases[k]].name;
        return out;
    }
};

// ---------------------------------------------------------------------------
// Constructors.

inline Uco top(std::size_t arity = 1) { return Uco("top", arity, {}); }

inline Uco identity(std::size_t arity = 1) {
    if (arity == 0) return top(0);
    Uco::Component c;
    c.kind = Uco::Component::Kind::identity;
    c.name = "id";
    for (std::size_t i = 0; i < arity; ++i) c.positions.push_back(i);
    return Uco("id", arity, {std::move(c)});
}

/// A domain whose closed sets are all intersections of the given tuple predicates.
inline Uco relational(std::size_t arity, std::vector<BaseProperty> predicates, std::string name = "relational",
                      std::vector<std::vector<std::size_t>> implied = {}) {
    if (predicates.empty()) return top(arity);
    Uco::Component c;
    c.kind = Uco::Component::Kind::basis;
    c.name = name;
    for (std::size_t i = 0; i < arity; ++i) c.positions.push_back(i);
    c.bases = std::move(predicates);
    c.implied = std::move(implied);
    return Uco(std::move(name), arity, {std::move(c)});
}

inline Uco sign() {
    return relational(1,
                      {{"0", [](const Point& p) { return p[0] == 0; }},
                       {"+", [](const Point& p) { return p[0] > 0; }},
                       {"-", [](const Point& p) { return p[0] < 0; }},
                       {"0+", [](const Point& p) { return p[0] >= 0; }},
                       {"0-", [](const Point& p) { return p[0] <= 0; }}},
                      "sign", {{3, 4}, {3}, {4}, {}, {}});
}

inline Uco parity() {
    return relational(1,
                      {{"ev", [](const Point& p) { return p[0] % 2 == 0; }},
                       {"od", [](const Point& p) { return p[0] % 2 != 0; }}},
                      "par");
}

/// Residue classes modulo k, with mathematical (non-negative) residues.
inline Uco mod_k(Value k) {
    if (k <= 0) throw DomainError("mod k requires k > 0");
    std::vector<BaseProperty> bases;
    for (Value r = 0; r < k; ++r)
        bases.push_back({"=" + std::to_string(r) + " mod " + std::to_string(k), [k, r](const Point& p) {
                             Value m = p[0] % k;
                             if (m < 0) m += k;
                             return m == r;
                         }});
    return relational(1, std::move(bases), "mod " + std::to_string(k));
}

/// Split of the integers at zero: negative values and non-negative values.
inline Uco nonneg() {
    return relational(1,
                      {{"<0", [](const Point& p) { return p[0] < 0; }},
                       {">=0", [](const Point& p) { return p[0] >= 0; }}},
                      "nonneg");
}

/// Bases are the given blocks; values outside every block only reach top.
inline Uco partition(const std::vector<std::vector<Value>>& blocks) {
    std::set<Value> seen;
    std::vector<BaseProperty> bases;
    for (const auto& b : blocks) {
        if (b.empty()) throw DomainError("partition block is empty");
        std::set<Value> block(b.begin(), b.end());
        for (auto v : block)
            if (!seen.insert(v).second) throw DomainError("invalid partition: value " + std::to_string(v) +
                                                          " occurs in more than one block");
        std::string name = "{";
        bool first = true;
        for (auto v : block) {
            name += (first ? "" : ",") + std::to_string(v);
            first = false;
        }
        name += "}";
        bases.push_back({name, [block](const Point& p) { return block.count(p[0]) > 0; }});
    }
    return relational(1, std::move(bases), "partition");
}

/// Domain whose closed sets are exactly the unions of the given disjoint blocks of tuples.
inline Uco unions_of(std::size_t arity, const std::vector<std::set<Point>>& blocks, std::string name = "unions") {
    std::vector<BaseProperty> bases;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto block = std::make_shared<const std::set<Point>>(blocks[i]);
        bases.push_back({"~B" + std::to_string(i), [block](const Point& p) { return block->count(p) == 0; }});
    }
    return relational(arity, std::move(bases), std::move(name));
}

/// Closed sets are the unions of classes of equal `key`.
inline Uco kernel(std::size_t arity, std::function<Point(const Point&)> key, std::string name = "kernel") {
    Uco::Component c;
    c.kind = Uco::Component::Kind::kernel;
    c.name = name;
    for (std::size_t i = 0; i < arity; ++i) c.positions.push_back(i);
    c.key = std::move(key);
    return Uco(std::move(name), arity, {std::move(c)});
}

/// A domain given by an explicit (possibly broken) family of closed sets.
inline Uco explicit_family(std::size_t arity, std::vector<std::set<Point>> members, std::string name = "family") {
    Uco::Component c;
    c.kind = Uco::Component::Kind::family;
    c.name = name;
    for (std::size_t i = 0; i < arity; ++i) c.positions.push_back(i);
    c.members = std::move(members);
    return Uco(std::move(name), arity, {std::move(c)});
}

/// Attribute-independent product; each factor acts on its own group of positions.
inline Uco product(const std::vector<std::pair<std::vector<std::size_t>, Uco>>& factors, std::size_t arity,
                   std::string name = "") {
    std::vector<Uco::Component> comps;
    std::string label;
    for (const auto& [positions, d] : factors) {
        if (positions.size() != d.arity()) throw DomainError("product: factor arity does not match its positions");
        for (auto c : d.components()) {
            for (auto& p : c.positions) p = positions[p];
            comps.push_back(std::move(c));
        }
        label += (label.empty() ? "" : ",") + d.name();
    }
    if (name.empty()) name = "(" + label + ")";
    return Uco(std::move(name), arity, std::move(comps));
}

/// Componentwise product of single-variable domains.
inline Uco product(const std::vector<Uco>& per_position, std::string name = "") {
    std::vector<std::pair<std::vector<std::size_t>, Uco>> factors;
    for (std::size_t i = 0; i < per_position.size(); ++i) {
        if (per_position[i].arity() != 1) throw DomainError("product: components must be single-variable");
        factors.push_back({{i}, per_position[i]});
    }
    return product(factors, per_position.size(), std::move(name));
}

// ---------------------------------------------------------------------------
// Named single-variable domains as written in policy files.

struct DomainSpec {
    enum class Kind { id, top, sign, par, mod, partition, nonneg };
    Kind kind = Kind::id;
    Value k = 0;
    std::vector<std::vector<Value>> blocks;

    bool operator==(const DomainSpec&) const = default;

    std::string str() const {
        switch (kind) {
        case Kind::id: return "id";
        case Kind::top: return "top";
        case Kind::sign: return "sign";
        case Kind::par: return "par";
        case Kind::nonneg: return "nonneg";
        case Kind::mod: return "mod " + std::to_string(k);
        case Kind::partition: {
            std::string out = "partition {";
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                if (b) out += "; ";
                for (std::size_t i = 0; i < blocks[b].size(); ++i)
                    out += (i ? "," : "") + std::to_string(blocks[b][i]);
            }
            return out + "}";
        }
        }
        return "?";
    }
};

inline Uco predefined(const DomainSpec& spec) {
    switch (spec.kind) {
    case DomainSpec::Kind::id: return identity(1);
    case DomainSpec::Kind::top: return top(1);
    case DomainSpec::Kind::sign: return sign();
    case DomainSpec::Kind::par: return parity();
    case DomainSpec::Kind::mod: return mod_k(spec.k);
    case DomainSpec::Kind::partition: return partition(spec.blocks);
    case DomainSpec::Kind::nonneg: return nonneg();
    }
    throw DomainError("unknown domain");
}

inline Uco predefined(const std::string& name, Value param = 0) {
    DomainSpec s;
    if (name == "id") s.kind = DomainSpec::Kind::id;
    else if (name == "top") s.kind = DomainSpec::Kind::top;
    else if (name == "sign") s.kind = DomainSpec::Kind::sign;
    else if (name == "par") s.kind = DomainSpec::Kind::par;
    else if (name == "nonneg") s.kind = DomainSpec::Kind::nonneg;
    else if (name == "mod") {
        s.kind = DomainSpec::Kind::mod;
        s.k = param;
    } else
        throw DomainError("unknown domain '" + name + "'");
    return predefined(s);
}

// ---------------------------------------------------------------------------
// Extensional comparisons on finite universes.

/// d1 is at least as precise as d2 on the universe: every closed set of d2 is closed for d1.
inline bool domain_leq(const Uco& d1, const Uco& d2, const std::vector<Point>& universe) {
    if (d1.arity() != d2.arity()) throw DomainError("domain_leq: carrier mismatch");
    for (const auto& g : d2.generators(universe))
        if (!d1.closed_on(g, universe)) return false;
    return true;
}

/// Indices of universe elements in a list of points.
inline Subset to_subset(const std::vector<Point>& xs, const std::vector<Point>& universe) {
    Subset s(universe.size());
    for (const auto& x : xs) {
        auto it = std::lower_bound(universe.begin(), universe.end(), x);
        if (it == universe.end() || *it != x) throw DomainError("point outside universe");
        s.set(static_cast<std::size_t>(it - universe.begin()));
    }
    return s;
}

inline std::vector<Point> from_subset(const Subset& s, const std::vector<Point>& universe) {
    std::vector<Point> out;
    for (auto i : members_of(s)) out.push_back(universe[i]);
    return out;
}

/// Closed sets of a domain on a small sorted universe, by exhaustive closure.
inline MooreFamily fixpoints_on(const Uco& d, const std::vector<Point>& universe) {
    std::vector<Subset> gens;
    for (const auto& g : d.generators(universe)) gens.push_back(to_subset(g, universe));
    return MooreFamily::closure_of(universe.size(), gens);
}

inline std::vector<Point> int_universe(Value lo, Value hi) {
    std::vector<Point> out;
    for (Value v = lo; v <= hi; ++v) out.push_back({v});
    return out;
}

struct LawReport {
    std::vector<std::string> violations;
    std::size_t checks = 0;
    bool ok() const { return violations.empty(); }
};

/// Verifies the closure-operator laws on a finite sorted universe: all singletons, `samples` random
/// nested pairs (every subset when the universe has at most 9 elements), and meet-closure of the
/// resulting closed sets.
inline LawReport check_uco_laws(const Uco& d, std::vector<Point> universe, std::size_t samples, std::uint64_t seed) {
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    LawReport rep;
    const std::size_t n = universe.size();
    auto note = [&](const std::string& law, const Subset& x) {
        if (rep.violations.size() >= 32) return;
        std::ostringstream os;
        os << law << " fails on {";
        bool first = true;
        for (auto i : members_of(x)) {
            os << (first ? "" : ", ");
            first = false;
            const auto& p = universe[i];
            if (p.size() == 1) {
                os << p[0];
            } else {
                os << '(';
                for (std::size_t k = 0; k < p.size(); ++k) os << (k ? "," : "") << p[k];
                os << ')';
            }
        }
        os << "}";
        rep.violations.push_back(os.str());
    };
    auto close = [&](const Subset& x) { return to_subset(d.extension(d.apply(from_subset(x, universe)), universe), universe); };

    std::vector<Subset> xs;
    std::vector<std::pair<Subset, Subset>> pairs;
    if (n <= 9) {
        for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) {
            Subset s(n, m);
            xs.push_back(s);
        }
        for (const auto& y : xs)
            for (const auto& x : xs)
                if (x.is_subset_of(y)) pairs.push_back({x, y});
    } else {
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            Subset s(n);
            s.set(i);
            xs.push_back(s);
        }
        xs.push_back(Subset(n));
        xs.push_back(full_subset(n));
        for (std::size_t k = 0; k < samples; ++k) {
            Subset y(n), x(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (rng() % 2) {
                    y.set(i);
                    if (rng() % 2) x.set(i);
                }
            }
            xs.push_back(x);
            xs.push_back(y);
            pairs.push_back({x, y});
        }
    }

    std::set<Subset> closed;
    for (const auto& x : xs) {
        ++rep.checks;
        auto pts = from_subset(x, universe);
        auto e = d.apply(pts);
        auto cx = to_subset(d.extension(e, universe), universe);
        if (!x.is_subset_of(cx)) note("extensivity", x);
        auto e2 = d.apply(from_subset(cx, universe));
        if (to_subset(d.extension(e2, universe), universe) != cx) note("idempotence", x);
        closed.insert(cx);
    }
    for (const auto& [x, y] : pairs) {
        ++rep.checks;
        if (!close(x).is_subset_of(close(y)) || !d.leq(d.apply(from_subset(x, universe)), d.apply(from_subset(y, universe))))
            note("monotonicity", x);
    }
    if (!closed.count(full_subset(n)) || close(full_subset(n)) != full_subset(n)) note("top is not closed:", full_subset(n));
    for (auto a = closed.begin(); a != closed.end(); ++a)
        for (auto b = std::next(a); b != closed.end(); ++b) {
            ++rep.checks;
            Subset m = *a & *b;
            if (close(m) != m) note("meet-closure", m);
        }
    return rep;
}

}  // namespace ani::domains
