// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ani/lang.hpp"

namespace ani::lang {

enum class ParseErrorKind {
    syntax,
    duplicate_declaration,
    undeclared_variable,
    declassify_target,
    ill_formed,
    unknown_domain,
    point_beyond_budget,
    protection_outside_points
};

inline const char* to_string(ParseErrorKind k) {
    switch (k) {
    case ParseErrorKind::syntax: return "syntax error";
    case ParseErrorKind::duplicate_declaration: return "duplicate declaration";
    case ParseErrorKind::undeclared_variable: return "undeclared variable";
    case ParseErrorKind::declassify_target: return "declassify target not observable";
    case ParseErrorKind::ill_formed: return "ill-formed program";
    case ParseErrorKind::unknown_domain: return "unknown domain";
    case ParseErrorKind::point_beyond_budget: return "observation point exceeds budget";
    case ParseErrorKind::protection_outside_points: return "protection given for a point outside the observation set";
    }
    return "error";
}

class ParseError : public std::runtime_error {
  public:
    ParseError(ParseErrorKind kind, std::size_t line, std::size_t column, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + to_string(kind) + ": " +
                             msg),
          kind_(kind), line_(line), column_(column) {}
    ParseErrorKind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    ParseErrorKind kind_;
    std::size_t line_;
    std::size_t column_;
};

namespace detail {

enum class Tok { ident, integer, symbol, eof };

struct Token {
    Tok kind = Tok::eof;
    std::string text;
    Value value = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Splits text into identifiers, integer literals and punctuation; `#` starts a line comment.
inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    static const char* const symbols[] = {":=", "..", "==", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]",
                                          ";",  ":",  ",",  "/",  "+",  "-",  "*", "<", ">", "=", "|"};
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            t.kind = Tok::ident;
            t.text = std::string(text.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            t.kind = Tok::integer;
            t.text = std::string(text.substr(i, j - i));
            auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, t.value);
            if (ec != std::errc{})
                throw ParseError(ParseErrorKind::syntax, line, col, "integer literal out of range: " + t.text);
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        bool matched = false;
        for (const char* sym : symbols) {
            std::string_view s(sym);
            if (text.substr(i, s.size()) == s) {
                t.kind = Tok::symbol;
                t.text = std::string(s);
                advance(s.size());
                out.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (!matched) throw ParseError(ParseErrorKind::syntax, line, col, std::string("unexpected character '") + c + "'");
    }
    Token eof;
    eof.kind = Tok::eof;
    eof.line = line;
    eof.column = col;
    out.push_back(eof);
    return out;
}

/// Shared token cursor used by the program and policy parsers.
class Cursor {
  public:
    explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[k];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool at_end() const { return peek().kind == Tok::eof; }
    bool is(std::string_view text) const {
        const auto& t = peek();
        return (t.kind == Tok::symbol || t.kind == Tok::ident) && t.text == text;
    }
    bool accept(std::string_view text) {
        if (!is(text)) return false;
        next();
        return true;
    }
    const Token& expect(std::string_view text) {
        if (!is(text)) fail("expected '" + std::string(text) + "' but found " + describe(peek()));
        return next();
    }
    std::size_t mark() const { return pos_; }
    void reset(std::size_t m) { pos_ = m; }

    [[noreturn]] void fail(const std::string& msg, ParseErrorKind kind = ParseErrorKind::syntax) const {
        throw ParseError(kind, peek().line, peek().column, msg);
    }

    static std::string describe(const Token& t) {
        if (t.kind == Tok::eof) return "end of input";
        return "'" + t.text + "'";
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

inline bool is_keyword(std::string_view s) {
    static const char* const words[] = {"var",   "internal", "observable", "in",  "begin", "end",
                                        "skip",  "if",       "then",       "else", "while", "do",
                                        "declassify", "mod", "abs",        "and", "or",    "not",
                                        "true",  "false"};
    for (const char* w : words)
        if (s == w) return true;
    return false;
}

class ProgramParser {
  public:
    ProgramParser(std::string_view text, std::string name) : cur_(tokenize(text)) { prog_.name = std::move(name); }

    Program run() {
        while (cur_.is("var")) decl();
        cur_.expect("begin");
        prog_.body = stmtseq({"end"});
        cur_.expect("end");
        if (!cur_.at_end()) cur_.fail("trailing input after 'end': " + Cursor::describe(cur_.peek()));
        prog_.points = next_label_;
        return std::move(prog_);
    }

  private:
    Cursor cur_;
    Program prog_;
    std::size_t next_label_ = 0;

    std::string ident(const char* what) {
        const auto& t = cur_.peek();
        if (t.kind != Tok::ident || is_keyword(t.text))
            cur_.fail(std::string("expected ") + what + " but found " + Cursor::describe(t));
        return cur_.next().text;
    }

    VarClass var_class() {
        if (cur_.accept("internal")) return VarClass::internal;
        if (cur_.accept("observable")) return VarClass::observable;
        cur_.fail("expected 'internal' or 'observable' but found " + Cursor::describe(cur_.peek()));
    }

    Value signed_int() {
        bool neg = cur_.accept("-");
        const auto& t = cur_.peek();
        if (t.kind != Tok::integer) cur_.fail("expected integer but found " + Cursor::describe(t));
        Value v = cur_.next().value;
        return neg ? -v : v;
    }

    void decl() {
        cur_.expect("var");
        const Token at = cur_.peek();
        VarDecl d;
        d.name = ident("variable name");
        if (prog_.slot_of(d.name))
            throw ParseError(ParseErrorKind::duplicate_declaration, at.line, at.column,
                             "variable '" + d.name + "' declared twice");
        cur_.expect(":");
        d.input_class = var_class();
        d.output_class = cur_.accept("/") ? var_class() : d.input_class;
        if (cur_.accept("in")) {
            cur_.expect("[");
            Range r;
            r.lo = signed_int();
            cur_.expect("..");
            r.hi = signed_int();
            cur_.expect("]");
            if (r.lo > r.hi) cur_.fail("empty range for '" + d.name + "'");
            d.input_range = r;
        }
        cur_.expect(";");
        prog_.decls.push_back(std::move(d));
    }

    std::size_t resolve(const Token& t) {
        auto slot = prog_.slot_of(t.text);
        if (!slot)
            throw ParseError(ParseErrorKind::undeclared_variable, t.line, t.column,
                             "variable '" + t.text + "' is not declared");
        return *slot;
    }

    StmtPtr stmtseq(std::initializer_list<std::string_view> closers) {
        Stmt::Seq seq;
        seq.items.push_back(stmt());
        while (cur_.accept(";")) {
            bool closing = false;
            for (auto c : closers) closing = closing || cur_.is(c);
            if (closing) break;
            seq.items.push_back(stmt());
        }
        return StmtPtr{Stmt{std::move(seq)}};
    }

    StmtPtr stmt() {
        std::size_t label = next_label_++;
        if (cur_.accept("skip")) return StmtPtr{Stmt{Stmt::Skip{label}}};
        if (cur_.accept("if")) {
            auto guard = bexpr();
            cur_.expect("then");
            cur_.expect("{");
            auto then_branch = stmtseq({"}"});
            cur_.expect("}");
            cur_.expect("else");
            cur_.expect("{");
            auto else_branch = stmtseq({"}"});
            cur_.expect("}");
            return StmtPtr{Stmt{Stmt::If{label, std::move(guard), std::move(then_branch), std::move(else_branch)}}};
        }
        if (cur_.accept("while")) {
            auto guard = bexpr();
            cur_.expect("do");
            cur_.expect("{");
            auto body = stmtseq({"}"});
            cur_.expect("}");
            return StmtPtr{Stmt{Stmt::While{label, std::move(guard), std::move(body)}}};
        }
        const Token target = cur_.peek();
        std::string name = ident("statement");
        std::size_t slot = resolve(target);
        cur_.expect(":=");
        bool declassified = false;
        ExprPtr rhs;
        if (cur_.accept("declassify")) {
            declassified = true;
            if (prog_.decls[slot].output_class != VarClass::observable)
                throw ParseError(ParseErrorKind::declassify_target, target.line, target.column,
                                 "declassify assigned to '" + name + "', which is not an observable output");
            cur_.expect("(");
            rhs = expr();
            cur_.expect(")");
        } else {
            rhs = expr();
        }
        return StmtPtr{Stmt{Stmt::Assign{label, std::move(name), slot, std::move(rhs), declassified}}};
    }

    ExprPtr expr() {
        auto lhs = term();
        for (;;) {
            if (cur_.accept("+"))
                lhs = build::binary(BinaryOp::add, lhs, term());
            else if (cur_.accept("-"))
                lhs = build::binary(BinaryOp::sub, lhs, term());
            else
                return lhs;
        }
    }

    ExprPtr term() {
        auto lhs = factor();
        for (;;) {
            if (cur_.accept("*"))
                lhs = build::binary(BinaryOp::mul, lhs, factor());
            else if (cur_.accept("mod"))
                lhs = build::binary(BinaryOp::mod, lhs, factor());
            else
                return lhs;
        }
    }

    ExprPtr factor() {
        const auto& t = cur_.peek();
        if (cur_.is("-")) {
            cur_.next();
            if (cur_.peek().kind == Tok::integer) return build::num(-cur_.next().value);
            return build::unary(UnaryOp::neg, factor());
        }
        if (cur_.accept("abs")) {
            cur_.expect("(");
            auto e = expr();
            cur_.expect(")");
            return build::unary(UnaryOp::abs, e);
        }
        if (cur_.accept("(")) {
            auto e = expr();
            cur_.expect(")");
            return e;
        }
        if (t.kind == Tok::integer) return build::num(cur_.next().value);
        if (t.kind == Tok::ident && !is_keyword(t.text)) {
            const Token v = cur_.next();
            return build::var(v.text, resolve(v));
        }
        cur_.fail("expected expression but found " + Cursor::describe(t));
    }

    BExprPtr bexpr() {
        auto lhs = bterm();
        while (cur_.accept("or")) lhs = build::logic(LogicOp::or_, lhs, bterm());
        return lhs;
    }

    BExprPtr bterm() {
        auto lhs = bfactor();
        while (cur_.accept("and")) lhs = build::logic(LogicOp::and_, lhs, bfactor());
        return lhs;
    }

    BExprPtr bfactor() {
        if (cur_.accept("not")) return build::negate(bfactor());
        if (cur_.accept("true")) return build::truth(true);
        if (cur_.accept("false")) return build::truth(false);
        if (cur_.is("(")) {
            // A parenthesis may open either an arithmetic operand or a nested condition.
            std::size_t m = cur_.mark();
            try {
                return comparison();
            } catch (const ParseError&) {
                cur_.reset(m);
            }
            cur_.expect("(");
            auto b = bexpr();
            cur_.expect(")");
            return b;
        }
        return comparison();
    }

    BExprPtr comparison() {
        auto lhs = expr();
        const auto& t = cur_.peek();
        if (cur_.accept("=") || cur_.accept("==")) return build::compare(CompareOp::eq, lhs, expr());
        if (cur_.accept("!=")) return build::compare(CompareOp::neq, lhs, expr());
        if (cur_.accept("<=")) return build::compare(CompareOp::le, lhs, expr());
        if (cur_.accept("<")) return build::compare(CompareOp::lt, lhs, expr());
        if (cur_.accept(">=")) return build::compare(CompareOp::le, expr(), lhs);
        if (cur_.accept(">")) return build::compare(CompareOp::lt, expr(), lhs);
        cur_.fail("expected comparison operator but found " + Cursor::describe(t));
    }
};

}  // namespace detail

/// Parses a program file; throws ParseError on syntax errors or violated invariants.
inline Program parse_program(std::string_view text, std::string name = "main") {
    Program p = detail::ProgramParser(text, std::move(name)).run();
    auto diags = well_formed(p);
    if (!diags.empty()) throw ParseError(ParseErrorKind::ill_formed, 0, 0, diags.front().message);
    return p;
}

}  // namespace ani::lang
