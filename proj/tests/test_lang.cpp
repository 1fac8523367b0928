// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ani/ani.hpp"
#include "ani/random_program.hpp"

using namespace ani;
using lang::ParseError;
using lang::ParseErrorKind;

namespace {

lang::Program parse(const std::string& text) { return lang::parse_program(text); }

ParseErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no ParseError thrown";
    return ParseErrorKind::syntax;
}

std::vector<std::size_t> labels(const lang::Program& p) {
    std::vector<std::size_t> out;
    std::function<void(const lang::StmtPtr&)> walk = [&](const lang::StmtPtr& s) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, lang::Stmt::Seq>) {
                    for (const auto& i : n.items) walk(i);
                } else {
                    out.push_back(n.label);
                    if constexpr (std::is_same_v<T, lang::Stmt::If>) {
                        walk(n.then_branch);
                        walk(n.else_branch);
                    } else if constexpr (std::is_same_v<T, lang::Stmt::While>) {
                        walk(n.body);
                    }
                }
            },
            s->node);
    };
    walk(p.body);
    return out;
}

}  // namespace

TEST(Parser, RunningExampleLabelsInTextualOrder) {
    auto p = lang::parse_program(fixtures::running.program, "running");
    EXPECT_EQ(p.points, 6u);
    EXPECT_EQ(labels(p), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    EXPECT_EQ(p.internal_inputs(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(p.observable_outputs(), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(p.decls[1].input_range, (lang::Range{-4, 4}));
}

TEST(Parser, NestedStatementsAreLabelledDepthFirst) {
    auto p = parse(
        "var h : internal; var l : observable;\n"
        "begin if h < 0 then { l := 1; l := 2 } else { skip }; while 0 < h do { h := h - 1 } end");
    EXPECT_EQ(p.points, 6u);
    EXPECT_EQ(labels(p), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    EXPECT_TRUE(lang::well_formed(p).empty());
}

TEST(Parser, SplitClassesAndDefaultRange) {
    auto p = parse("var x : internal / observable; var y : observable in [0..3]; begin y := x end");
    EXPECT_EQ(p.decls[0].input_class, lang::VarClass::internal);
    EXPECT_EQ(p.decls[0].output_class, lang::VarClass::observable);
    EXPECT_FALSE(p.decls[0].input_range.has_value());
    EXPECT_EQ(p.observable_outputs(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(p.observable_inputs(), (std::vector<std::size_t>{1}));
}

TEST(Parser, PrinterRoundTrip) {
    for (const auto* f : fixtures::all()) {
        auto p = lang::parse_program(f->program, f->name);
        auto again = lang::parse_program(lang::to_string(p), f->name);
        EXPECT_EQ(p, again) << f->name;
    }
    random::ProgramGenerator g(11);
    for (int i = 0; i < 50; ++i) {
        auto p = g.program();
        EXPECT_EQ(p, lang::parse_program(lang::to_string(p), p.name)) << lang::to_string(p);
    }
}

TEST(Parser, Errors) {
    EXPECT_EQ(kind_of([] { parse("var l : observable; begin l := x end"); }), ParseErrorKind::undeclared_variable);
    EXPECT_EQ(kind_of([] { parse("var l : observable; var l : internal; begin skip end"); }),
              ParseErrorKind::duplicate_declaration);
    EXPECT_EQ(kind_of([] { parse("var h : internal; begin h := declassify(h) end"); }),
              ParseErrorKind::declassify_target);
    EXPECT_EQ(kind_of([] { parse("var l : observable; begin l := end"); }), ParseErrorKind::syntax);
    EXPECT_EQ(kind_of([] { parse("var l : observable in [3..1]; begin skip end"); }), ParseErrorKind::syntax);
}

TEST(Parser, ErrorPositions) {
    try {
        parse("var l : observable;\nbegin\n  l := l + ;\nend");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 12u);
    }
}

TEST(Policy, Statements) {
    auto p = lang::parse_program(fixtures::running.program);
    auto pol = lang::parse_policy(
        "observe at end, 4, 3;\neta = id;\nrho = l1: sign, l2: par;\nphi = h2: mod 3;\nphi at 3 = top;\n"
        "mode = localized;\ndefault_range = [0..2];",
        p);
    EXPECT_EQ(pol.points, (std::vector<semantics::ObsPoint>{semantics::ObsPoint::at(3), semantics::ObsPoint::at(4),
                                                            semantics::ObsPoint::end()}));
    EXPECT_EQ(pol.rho_for("l1").kind, domains::DomainSpec::Kind::sign);
    EXPECT_EQ(pol.rho_for("l2").kind, domains::DomainSpec::Kind::par);
    EXPECT_EQ(pol.rho_for("h1").kind, domains::DomainSpec::Kind::id);
    EXPECT_EQ(pol.phi_for("h2", lang::VarClass::internal).str(), "mod 3");
    EXPECT_EQ(pol.phi_for("h1", lang::VarClass::internal).kind, domains::DomainSpec::Kind::top);
    EXPECT_EQ(pol.phi_for("l1", lang::VarClass::observable).kind, domains::DomainSpec::Kind::id);
    EXPECT_EQ(pol.phi_for("h2", lang::VarClass::internal, semantics::ObsPoint::at(3)).kind,
              domains::DomainSpec::Kind::top);
    EXPECT_EQ(pol.mode, lang::Mode::localized);
    EXPECT_EQ(pol.default_range, (lang::Range{0, 2}));
}

TEST(Policy, SetSugarAndEmptyText) {
    auto p = lang::parse_program(fixtures::running.program);
    auto a = lang::parse_policy("O={3,4,end}", p);
    auto b = lang::parse_policy("observe at 3, 4, end;", p);
    EXPECT_EQ(a.points, b.points);
    auto d = lang::parse_policy("", p);
    EXPECT_EQ(d.points, (std::vector<semantics::ObsPoint>{semantics::ObsPoint::end()}));
}

TEST(Policy, Errors) {
    auto p = lang::parse_program(fixtures::running.program);
    EXPECT_EQ(kind_of([&] { lang::parse_policy("rho = fancy;", p); }), ParseErrorKind::unknown_domain);
    EXPECT_EQ(kind_of([&] { lang::parse_policy("rho = q: par;", p); }), ParseErrorKind::undeclared_variable);
    EXPECT_EQ(kind_of([&] { lang::parse_policy("observe at 3; phi at 4 = top;", p); }),
              ParseErrorKind::protection_outside_points);
    EXPECT_EQ(kind_of([&] { lang::parse_policy("observe at 20;", p, 10); }), ParseErrorKind::point_beyond_budget);
    EXPECT_EQ(kind_of([&] { lang::parse_policy("rho = partition {1,2; 2,3};", p); }),
              ParseErrorKind::unknown_domain);
}
