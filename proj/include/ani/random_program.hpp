// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ani/domains.hpp"
#include "ani/lang.hpp"
#include "ani/parser.hpp"

namespace ani::random {

struct GeneratorOptions {
    std::size_t max_statements = 6;
    lang::Value max_hi = 3;          // ranges are [0..r] with r in 1..max_hi
    std::size_t max_internal = 2;
    std::size_t max_observable = 2;
    bool loops = true;
};

/// Seeded generator of small well-formed programs, produced as source text and parsed.
class ProgramGenerator {
  public:
    explicit ProgramGenerator(std::uint64_t seed, GeneratorOptions opt = {}) : rng_(seed), opt_(opt) {}

    std::string source() {
        vars_.clear();
        std::string out;
        std::size_t nh = 1 + pick(opt_.max_internal);
        std::size_t nl = 1 + pick(opt_.max_observable);
        for (std::size_t i = 0; i < nh; ++i) declare(out, "h" + std::to_string(i + 1), "internal");
        for (std::size_t i = 0; i < nl; ++i) declare(out, "l" + std::to_string(i + 1), "observable");
        std::size_t budget = 1 + pick(opt_.max_statements);
        out += "begin\n" + seq(budget, 1) + "\nend\n";
        return out;
    }

    lang::Program program() { return lang::parse_program(source(), "random"); }

    /// A domain name for a single variable, drawn from id, par, sign, mod 2 and top.
    domains::DomainSpec domain() {
        using K = domains::DomainSpec::Kind;
        switch (pick(5)) {
        case 0: return {K::id, 0, {}};
        case 1: return {K::par, 0, {}};
        case 2: return {K::sign, 0, {}};
        case 3: return {K::mod, 2, {}};
        default: return {K::top, 0, {}};
        }
    }

    std::size_t pick(std::size_t n) { return n == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
    GeneratorOptions opt_;
    std::vector<std::string> vars_;

    void declare(std::string& out, const std::string& name, const char* cls) {
        lang::Value hi = 1 + static_cast<lang::Value>(pick(static_cast<std::size_t>(opt_.max_hi)));
        out += "var " + name + " : " + cls + " in [0.." + std::to_string(hi) + "];\n";
        vars_.push_back(name);
    }

    std::string var() { return vars_[pick(vars_.size())]; }

    std::string leaf() { return pick(3) == 0 ? std::to_string(pick(4)) : var(); }

    std::string expr(int depth) {
        if (depth == 0 || pick(3) == 0) return leaf();
        switch (pick(6)) {
        case 0: return expr(depth - 1) + " + " + expr(depth - 1);
        case 1: return expr(depth - 1) + " - " + leaf();
        case 2: return leaf() + " * " + leaf();
        case 3: return "(" + expr(depth - 1) + ") mod " + std::to_string(2 + pick(2));
        case 4: return "abs(" + expr(depth - 1) + ")";
        default: return leaf() + " mod " + leaf();
        }
    }

    std::string guard() {
        static const char* ops[] = {" < ", " <= ", " == ", " != "};
        std::string g = expr(1) + ops[pick(4)] + expr(1);
        return pick(4) == 0 ? "not (" + g + ")" : g;
    }

    std::string indent(int level) { return std::string(static_cast<std::size_t>(level) * 2, ' '); }

    // A sequence using exactly `budget` labeled statements.
    std::string seq(std::size_t budget, int level) {
        std::string out;
        bool first = true;
        while (budget > 0) {
            std::size_t used = 1;
            std::string s;
            auto r = pick(10);
            if (r < 2 && budget >= 3) {
                std::size_t inner = budget - 1;
                std::size_t a = 1 + pick(inner - 1);
                std::size_t b = 1 + pick(inner - a);
                s = "if " + guard() + " then {\n" + seq(a, level + 1) + "\n" + indent(level) + "} else {\n" +
                    seq(b, level + 1) + "\n" + indent(level) + "}";
                used = 1 + a + b;
            } else if (r == 2 && opt_.loops && budget >= 2) {
                // Counting loops terminate on non-negative counters.
                std::string c = var();
                s = "while 0 < " + c + " do {\n" + indent(level + 1) + c + " := " + c + " - 1";
                used = 2;
                if (budget >= 3 && pick(2) == 0) {
                    s += ";\n" + indent(level + 1) + var() + " := " + expr(1);
                    used = 3;
                }
                s += "\n" + indent(level) + "}";
            } else if (r == 3) {
                s = "skip";
            } else {
                s = var() + " := " + expr(2);
            }
            budget -= used;
            out += (first ? "" : ";\n") + indent(level) + s;
            first = false;
        }
        return out;
    }
};

}  // namespace ani::random
