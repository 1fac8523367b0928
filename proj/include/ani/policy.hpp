// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ani/domains.hpp"
#include "ani/lang.hpp"
#include "ani/parser.hpp"
#include "ani/semantics.hpp"

namespace ani::lang {

using semantics::ObsPoint;

enum class Mode { incremental, localized };

inline const char* to_string(Mode m) { return m == Mode::incremental ? "incremental" : "localized"; }

/// A domain assignment over variables: a default for all of them plus per-variable overrides.
struct VarDomains {
    std::optional<domains::DomainSpec> all;
    std::map<std::string, domains::DomainSpec> per_var;

    bool empty() const { return !all && per_var.empty(); }
    bool operator==(const VarDomains&) const = default;

    std::optional<domains::DomainSpec> lookup(const std::string& var) const {
        if (auto it = per_var.find(var); it != per_var.end()) return it->second;
        return all;
    }

    std::string str() const {
        if (per_var.empty()) return all ? all->str() : "default";
        std::string out;
        if (all) out = all->str() + " except ";
        bool first = true;
        for (const auto& [v, d] : per_var) {
            out += (first ? "" : ", ") + v + ":" + d.str();
            first = false;
        }
        return out;
    }
};

/// The three policy dimensions: observation points and mode, input/output observation, protection.
struct Policy {
    std::vector<ObsPoint> points{ObsPoint::end()};
    VarDomains eta;
    VarDomains rho;
    VarDomains phi;
    std::map<ObsPoint, VarDomains> phi_at;
    Mode mode = Mode::incremental;
    std::optional<Range> default_range;

    bool operator==(const Policy&) const = default;

    domains::DomainSpec eta_for(const std::string& var) const {
        return eta.lookup(var).value_or(domains::DomainSpec{domains::DomainSpec::Kind::id, 0, {}});
    }
    domains::DomainSpec rho_for(const std::string& var) const {
        return rho.lookup(var).value_or(domains::DomainSpec{domains::DomainSpec::Kind::id, 0, {}});
    }
    /// Protection of a variable, at a point when given; unlisted internal inputs default to top.
    domains::DomainSpec phi_for(const std::string& var, VarClass input_class,
                                std::optional<ObsPoint> at = std::nullopt) const {
        if (at) {
            if (auto it = phi_at.find(*at); it != phi_at.end())
                if (auto d = it->second.lookup(var)) return *d;
        }
        if (auto d = phi.lookup(var)) return *d;
        using K = domains::DomainSpec::Kind;
        return domains::DomainSpec{input_class == VarClass::internal ? K::top : K::id, 0, {}};
    }

    std::string summary() const {
        std::string out = "observe at ";
        for (std::size_t i = 0; i < points.size(); ++i) out += (i ? "," : "") + points[i].str();
        out += "; eta = " + (eta.empty() ? std::string("id") : eta.str());
        out += "; rho = " + (rho.empty() ? std::string("id") : rho.str());
        out += "; phi = " + (phi.empty() ? std::string("top on internal, id on observable") : phi.str());
        for (const auto& [pt, d] : phi_at) out += "; phi at " + pt.str() + " = " + d.str();
        out += std::string("; mode = ") + to_string(mode);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Domains over variable lists.

/// Product over `slots`, one factor per variable, chosen by `pick`.
template <class Pick>
domains::Uco domain_over(const Program& p, const std::vector<std::size_t>& slots, Pick pick, std::string name = "") {
    std::vector<domains::Uco> factors;
    for (auto s : slots) factors.push_back(domains::predefined(pick(p.decls[s])));
    return domains::product(factors, std::move(name));
}

inline domains::Uco eta_domain(const Program& p, const Policy& pol, const std::vector<std::size_t>& slots) {
    return domain_over(p, slots, [&](const VarDecl& d) { return pol.eta_for(d.name); }, "eta");
}

inline domains::Uco rho_domain(const Program& p, const Policy& pol, const std::vector<std::size_t>& slots) {
    return domain_over(p, slots, [&](const VarDecl& d) { return pol.rho_for(d.name); }, "rho");
}

inline domains::Uco phi_domain(const Program& p, const Policy& pol, const std::vector<std::size_t>& slots,
                               std::optional<ObsPoint> at = std::nullopt) {
    return domain_over(p, slots, [&](const VarDecl& d) { return pol.phi_for(d.name, d.input_class, at); },
                       at ? "phi@" + at->str() : std::string("phi"));
}

inline std::vector<std::size_t> all_slots(const Program& p) {
    std::vector<std::size_t> out(p.decls.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

// ---------------------------------------------------------------------------
// Policy file parser.

namespace detail {

class PolicyParser {
  public:
    PolicyParser(std::string_view text, const Program& p, std::size_t budget)
        : cur_(tokenize(text)), prog_(p), budget_(budget) {}

    Policy run() {
        while (!cur_.at_end()) {
            if (cur_.accept(";")) continue;
            statement();
            if (!cur_.at_end()) cur_.expect(";");
        }
        for (const auto& [pt, d] : pol_.phi_at) {
            (void)d;
            if (std::find(pol_.points.begin(), pol_.points.end(), pt) == pol_.points.end())
                throw ParseError(ParseErrorKind::protection_outside_points, phi_at_line_[pt], phi_at_col_[pt],
                                 "phi given at point " + pt.str() + ", which is not observed");
        }
        return std::move(pol_);
    }

  private:
    Cursor cur_;
    const Program& prog_;
    std::size_t budget_;
    Policy pol_;
    std::map<ObsPoint, std::size_t> phi_at_line_, phi_at_col_;

    void statement() {
        const Token& t = cur_.peek();
        if (t.kind != Tok::ident) cur_.fail("expected policy statement but found " + Cursor::describe(t));
        if (t.text == "observe") {
            cur_.next();
            cur_.expect("at");
            pol_.points = point_list({});
        } else if (t.text == "O") {
            cur_.next();
            cur_.expect("=");
            cur_.expect("{");
            pol_.points = point_list({"}"});
            cur_.expect("}");
        } else if (t.text == "eta") {
            cur_.next();
            cur_.expect("=");
            pol_.eta = var_domains();
        } else if (t.text == "rho") {
            cur_.next();
            cur_.expect("=");
            pol_.rho = var_domains();
        } else if (t.text == "phi") {
            cur_.next();
            if (cur_.accept("at")) {
                const Token at = cur_.peek();
                ObsPoint pt = point();
                phi_at_line_[pt] = at.line;
                phi_at_col_[pt] = at.column;
                cur_.expect("=");
                pol_.phi_at[pt] = var_domains();
            } else {
                cur_.expect("=");
                pol_.phi = var_domains();
            }
        } else if (t.text == "mode") {
            cur_.next();
            cur_.expect("=");
            if (cur_.accept("incremental"))
                pol_.mode = Mode::incremental;
            else if (cur_.accept("localized"))
                pol_.mode = Mode::localized;
            else
                cur_.fail("expected 'incremental' or 'localized'");
        } else if (t.text == "default_range") {
            cur_.next();
            cur_.expect("=");
            cur_.expect("[");
            Range r;
            r.lo = signed_int();
            cur_.expect("..");
            r.hi = signed_int();
            cur_.expect("]");
            if (r.lo > r.hi) cur_.fail("empty default range");
            pol_.default_range = r;
        } else {
            cur_.fail("unknown policy statement '" + t.text + "'");
        }
    }

    Value signed_int() {
        bool neg = cur_.accept("-");
        const auto& t = cur_.peek();
        if (t.kind != Tok::integer) cur_.fail("expected integer but found " + Cursor::describe(t));
        Value v = cur_.next().value;
        return neg ? -v : v;
    }

    ObsPoint point() {
        if (cur_.accept("end")) return ObsPoint::end();
        const auto& t = cur_.peek();
        if (t.kind != Tok::integer) cur_.fail("expected observation point but found " + Cursor::describe(t));
        if (static_cast<std::size_t>(t.value) > budget_)
            cur_.fail("point " + t.text + " exceeds the step budget of " + std::to_string(budget_),
                      ParseErrorKind::point_beyond_budget);
        return ObsPoint::at(static_cast<std::size_t>(cur_.next().value));
    }

    std::vector<ObsPoint> point_list(std::initializer_list<std::string_view> closers) {
        std::set<ObsPoint> pts;
        for (;;) {
            pts.insert(point());
            if (!cur_.accept(",")) break;
            bool closing = false;
            for (auto c : closers) closing = closing || cur_.is(c);
            if (closing) break;
        }
        return {pts.begin(), pts.end()};
    }

    domains::DomainSpec domain() {
        using K = domains::DomainSpec::Kind;
        const Token& t = cur_.peek();
        domains::DomainSpec d;
        if (t.kind != Tok::ident) cur_.fail("expected domain but found " + Cursor::describe(t));
        if (cur_.accept("id")) {
            d.kind = K::id;
        } else if (cur_.accept("top")) {
            d.kind = K::top;
        } else if (cur_.accept("sign")) {
            d.kind = K::sign;
        } else if (cur_.accept("par")) {
            d.kind = K::par;
        } else if (cur_.accept("nonneg")) {
            d.kind = K::nonneg;
        } else if (cur_.accept("mod")) {
            d.kind = K::mod;
            const auto& k = cur_.peek();
            if (k.kind != Tok::integer || k.value <= 0) cur_.fail("mod expects a positive integer");
            d.k = cur_.next().value;
        } else if (cur_.accept("partition")) {
            d.kind = K::partition;
            cur_.expect("{");
            for (;;) {
                std::vector<Value> block{signed_int()};
                while (cur_.accept(",")) block.push_back(signed_int());
                d.blocks.push_back(std::move(block));
                if (!cur_.accept(";")) break;
                if (cur_.is("}")) break;
            }
            const Token close = cur_.peek();
            cur_.expect("}");
            try {
                domains::predefined(d);
            } catch (const domains::DomainError& e) {
                throw ParseError(ParseErrorKind::unknown_domain, close.line, close.column, e.what());
            }
        } else {
            cur_.fail("unknown domain '" + t.text + "'", ParseErrorKind::unknown_domain);
        }
        return d;
    }

    VarDomains var_domains() {
        VarDomains out;
        if (cur_.peek().kind == Tok::ident && cur_.peek(1).kind == Tok::symbol && cur_.peek(1).text == ":") {
            for (;;) {
                const Token v = cur_.next();
                if (!prog_.slot_of(v.text))
                    throw ParseError(ParseErrorKind::undeclared_variable, v.line, v.column,
                                     "policy names undeclared variable '" + v.text + "'");
                cur_.expect(":");
                out.per_var[v.text] = domain();
                if (!cur_.accept(",")) break;
            }
        } else {
            out.all = domain();
        }
        return out;
    }
};

}  // namespace detail

/// Parses policy text against a program. Points beyond `budget` are rejected.
inline Policy parse_policy(std::string_view text, const Program& p, std::size_t budget = 10000) {
    return detail::PolicyParser(text, p, budget).run();
}

}  // namespace ani::lang
