// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "ani/ani.hpp"
#include "ani/selftest.hpp"
#include "oracle.hpp"

using namespace ani;
using domains::Point;
using domains::Uco;

namespace {

using Set = std::set<Point>;

Set ints(std::initializer_list<lang::Value> vs) {
    Set s;
    for (auto v : vs) s.insert({v});
    return s;
}

Set where(lang::Value lo, lang::Value hi, const std::function<bool(lang::Value)>& pred) {
    Set s;
    for (auto v = lo; v <= hi; ++v)
        if (pred(v)) s.insert({v});
    return s;
}

/// Smallest member of a hand-written family containing X (the family must be meet-closed).
Set least_above(const std::vector<Set>& family, const Set& x) {
    std::optional<Set> best;
    for (const auto& m : family)
        if (std::includes(m.begin(), m.end(), x.begin(), x.end()) && (!best || m.size() < best->size())) best = m;
    return *best;
}

void expect_closures(const Uco& d, const std::vector<Set>& family, const std::vector<Point>& u) {
    const std::size_t n = u.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Set x;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) x.insert(u[i]);
        auto ext = d.extension(d.apply(x), u);
        EXPECT_EQ(Set(ext.begin(), ext.end()), least_above(family, x)) << d.name() << " mask " << mask;
    }
}

}  // namespace

TEST(Domains, SignClosuresMatchHandWrittenFamily) {
    auto u = domains::int_universe(-4, 4);
    auto all = where(-4, 4, [](auto) { return true; });
    std::vector<Set> fam{{},
                         all,
                         ints({0}),
                         where(-4, 4, [](auto v) { return v > 0; }),
                         where(-4, 4, [](auto v) { return v < 0; }),
                         where(-4, 4, [](auto v) { return v >= 0; }),
                         where(-4, 4, [](auto v) { return v <= 0; })};
    expect_closures(domains::sign(), fam, u);
}

TEST(Domains, ParityModAndNonnegClosures) {
    auto u = domains::int_universe(-4, 4);
    auto all = where(-4, 4, [](auto) { return true; });
    expect_closures(domains::parity(), {{}, all, where(-4, 4, [](auto v) { return v % 2 == 0; }),
                                        where(-4, 4, [](auto v) { return v % 2 != 0; })},
                    u);
    std::vector<Set> mod3{{}, all};
    for (lang::Value r = 0; r < 3; ++r) mod3.push_back(where(-4, 4, [r](auto v) { return oracle::floor_mod(v, 3) == r; }));
    expect_closures(domains::mod_k(3), mod3, u);
    expect_closures(domains::nonneg(), {{}, all, where(-4, 4, [](auto v) { return v < 0; }),
                                        where(-4, 4, [](auto v) { return v >= 0; })},
                    u);
    expect_closures(domains::top(1), {all}, u);
}

TEST(Domains, IdentityIsExact) {
    auto u = domains::int_universe(-2, 2);
    auto id = domains::identity(1);
    for (std::size_t mask = 0; mask < 32; ++mask) {
        std::vector<Point> x;
        for (std::size_t i = 0; i < 5; ++i)
            if (mask >> i & 1) x.push_back(u[i]);
        EXPECT_EQ(id.extension(id.apply(x), u), x);
    }
    EXPECT_TRUE(id.is_identity());
    EXPECT_TRUE(domains::top(2).is_top());
}

TEST(Domains, ModThreeOfOneAndFour) {
    auto d = domains::predefined("mod", 3);
    auto ext = d.extension(d.apply(std::vector<Point>{{1}, {4}}), domains::int_universe(-6, 6));
    EXPECT_EQ(Set(ext.begin(), ext.end()), ints({-5, -2, 1, 4}));
}

TEST(Domains, PartitionValidation) {
    EXPECT_THROW(domains::partition({{1, 2}, {2, 3}}), domains::DomainError);
    EXPECT_THROW(domains::partition({{}}), domains::DomainError);
    auto d = domains::partition({{0, 1}, {2}});
    auto u = domains::int_universe(0, 3);
    auto ext = d.extension(d.apply(std::vector<Point>{{3}}), u);
    EXPECT_EQ(ext.size(), 4u);  // values outside every block reach top
}

TEST(Domains, ProductActsPerPosition) {
    auto d = domains::product({domains::sign(), domains::parity()});
    auto u = selftest::pair_universe(-2, 2);
    auto ext = d.extension(d.apply(std::vector<Point>{{1, 2}, {2, 0}}), u);
    for (const auto& p : ext) {
        EXPECT_GT(p[0], 0);
        EXPECT_EQ(p[1] % 2, 0);
    }
    EXPECT_EQ(ext.size(), 2u * 3u);
    EXPECT_EQ(d.name(), "(sign,par)");
}

TEST(Domains, KernelClosedSetsAreUnionsOfClasses) {
    auto d = domains::kernel(1, [](const Point& p) { return Point{p[0] / 2}; });
    auto u = domains::int_universe(0, 5);
    auto ext = d.extension(d.apply(std::vector<Point>{{1}, {4}}), u);
    EXPECT_EQ(Set(ext.begin(), ext.end()), ints({0, 1, 4, 5}));
    auto fam = domains::fixpoints_on(d, u);
    EXPECT_EQ(fam.size(), 8u);
}

TEST(Domains, OrderOnDomains) {
    auto u = domains::int_universe(-4, 4);
    EXPECT_TRUE(domains::domain_leq(domains::identity(1), domains::sign(), u));
    EXPECT_TRUE(domains::domain_leq(domains::sign(), domains::nonneg(), u));
    EXPECT_FALSE(domains::domain_leq(domains::nonneg(), domains::sign(), u));
    // closed sets are meets of bases only, so {even} is not a mod 4 closed set
    EXPECT_FALSE(domains::domain_leq(domains::mod_k(4), domains::parity(), u));
    EXPECT_TRUE(domains::domain_leq(domains::identity(1), domains::mod_k(4), u));
    EXPECT_TRUE(domains::domain_leq(domains::parity(), domains::top(1), u));
    auto s = domains::sign();
    EXPECT_TRUE(s.leq(s.apply_one({1}), s.apply(std::vector<Point>{{1}, {0}})));
    EXPECT_FALSE(s.leq(s.apply(std::vector<Point>{{1}, {0}}), s.apply_one({1})));
}

TEST(Domains, LawsHoldOnPredefinedAndRandomPartitions) {
    auto laws = selftest::law_battery(5);
    EXPECT_TRUE(laws.failures.empty()) << (laws.failures.empty() ? "" : laws.failures.front());
    EXPECT_GE(laws.domains, 60u);
}

TEST(Domains, LawCheckerCatchesBrokenFamily) {
    auto u = domains::int_universe(0, 2);
    // members miss 2, so closing {2} is not extensive
    auto bad = domains::explicit_family(1, {{{0}}, {{1}}});
    auto rep = domains::check_uco_laws(bad, u, 16, 1);
    EXPECT_FALSE(rep.ok());
}

TEST(Domains, MooreFamilyOperations) {
    using domains::Subset;
    auto gens = std::vector<Subset>{Subset(4, 0b0011), Subset(4, 0b0110)};
    auto f = domains::MooreFamily::closure_of(4, gens);
    EXPECT_TRUE(f.is_moore());
    EXPECT_TRUE(f.contains(Subset(4, 0b0010)));
    EXPECT_EQ(f.close(Subset(4, 0b0001)), Subset(4, 0b0011));
    EXPECT_EQ(f.close(Subset(4, 0b1000)), Subset(4, 0b1111));
    auto g = domains::MooreFamily::closure_of(4, {Subset(4, 0b0011)});
    EXPECT_TRUE(domains::family_leq(f, g));
    EXPECT_FALSE(domains::family_leq(g, f));
}
