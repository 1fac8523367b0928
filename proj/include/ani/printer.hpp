// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <string>

#include "ani/lang.hpp"

namespace ani::lang {

namespace detail {

inline int precedence(const Expr& e) {
    if (const auto* b = std::get_if<Expr::Binary>(&e.node))
        return (b->op == BinaryOp::add || b->op == BinaryOp::sub) ? 1 : 2;
    if (std::holds_alternative<Expr::Unary>(e.node)) return 3;
    if (const auto* c = std::get_if<Expr::Const>(&e.node)) return c->value < 0 ? 3 : 4;
    return 4;
}

inline void print_expr(std::ostream& os, const Expr& e, int min_prec) {
    bool parens = precedence(e) < min_prec;
    if (parens) os << '(';
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Const>) {
                os << n.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                os << n.name;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                if (n.op == UnaryOp::abs) {
                    os << "abs(";
                    print_expr(os, *n.arg, 0);
                    os << ')';
                } else {
                    os << '-';
                    bool literal = std::holds_alternative<Expr::Const>(n.arg->node);
                    if (literal) os << '(';
                    print_expr(os, *n.arg, literal ? 0 : 3);
                    if (literal) os << ')';
                }
            } else {
                int p = (n.op == BinaryOp::add || n.op == BinaryOp::sub) ? 1 : 2;
                print_expr(os, *n.lhs, p);
                switch (n.op) {
                case BinaryOp::add: os << " + "; break;
                case BinaryOp::sub: os << " - "; break;
                case BinaryOp::mul: os << " * "; break;
                case BinaryOp::mod: os << " mod "; break;
                }
                print_expr(os, *n.rhs, p + 1);
            }
        },
        e.node);
    if (parens) os << ')';
}

inline int precedence(const BExpr& b) {
    if (const auto* l = std::get_if<BExpr::Logic>(&b.node)) return l->op == LogicOp::or_ ? 1 : 2;
    return 3;
}

inline void print_bexpr(std::ostream& os, const BExpr& b, int min_prec) {
    bool parens = precedence(b) < min_prec;
    if (parens) os << '(';
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BExpr::Const>) {
                os << (n.value ? "true" : "false");
            } else if constexpr (std::is_same_v<T, BExpr::Compare>) {
                print_expr(os, *n.lhs, 0);
                switch (n.op) {
                case CompareOp::eq: os << " = "; break;
                case CompareOp::neq: os << " != "; break;
                case CompareOp::lt: os << " < "; break;
                case CompareOp::le: os << " <= "; break;
                }
                print_expr(os, *n.rhs, 0);
            } else if constexpr (std::is_same_v<T, BExpr::Not>) {
                os << "not ";
                bool compound = !std::holds_alternative<BExpr::Const>(n.arg->node);
                if (compound) os << '(';
                print_bexpr(os, *n.arg, 0);
                if (compound) os << ')';
            } else {
                int p = n.op == LogicOp::or_ ? 1 : 2;
                print_bexpr(os, *n.lhs, p);
                os << (n.op == LogicOp::or_ ? " or " : " and ");
                print_bexpr(os, *n.rhs, p + 1);
            }
        },
        b.node);
    if (parens) os << ')';
}

inline void indent(std::ostream& os, int depth) {
    for (int i = 0; i < depth; ++i) os << "  ";
}

inline void print_stmt(std::ostream& os, const Stmt& s, int depth);

inline void print_block(std::ostream& os, const Stmt& s, int depth) {
    if (const auto* seq = std::get_if<Stmt::Seq>(&s.node)) {
        for (std::size_t i = 0; i < seq->items.size(); ++i) {
            print_stmt(os, *seq->items[i], depth);
            os << (i + 1 < seq->items.size() ? ";\n" : "\n");
        }
    } else {
        print_stmt(os, s, depth);
        os << '\n';
    }
}

inline void print_stmt(std::ostream& os, const Stmt& s, int depth) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Stmt::Skip>) {
                indent(os, depth);
                os << "skip";
            } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                indent(os, depth);
                os << n.target << " := ";
                if (n.declassified) os << "declassify(";
                print_expr(os, *n.rhs, 0);
                if (n.declassified) os << ')';
            } else if constexpr (std::is_same_v<T, Stmt::Seq>) {
                for (std::size_t i = 0; i < n.items.size(); ++i) {
                    print_stmt(os, *n.items[i], depth);
                    if (i + 1 < n.items.size()) os << ";\n";
                }
            } else if constexpr (std::is_same_v<T, Stmt::If>) {
                indent(os, depth);
                os << "if ";
                print_bexpr(os, *n.guard, 0);
                os << " then {\n";
                print_block(os, *n.then_branch, depth + 1);
                indent(os, depth);
                os << "} else {\n";
                print_block(os, *n.else_branch, depth + 1);
                indent(os, depth);
                os << '}';
            } else {
                indent(os, depth);
                os << "while ";
                print_bexpr(os, *n.guard, 0);
                os << " do {\n";
                print_block(os, *n.body, depth + 1);
                indent(os, depth);
                os << '}';
            }
        },
        s.node);
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    detail::print_expr(os, e, 0);
    return os.str();
}

inline std::string to_string(const BExpr& b) {
    std::ostringstream os;
    detail::print_bexpr(os, b, 0);
    return os.str();
}

/// Pretty-prints a program in the concrete syntax accepted by parse_program.
inline std::string to_string(const Program& p) {
    std::ostringstream os;
    for (const auto& d : p.decls) {
        os << "var " << d.name << " : " << to_string(d.input_class);
        if (d.output_class != d.input_class) os << " / " << to_string(d.output_class);
        if (d.input_range) os << " in [" << d.input_range->lo << ".." << d.input_range->hi << ']';
        os << ";\n";
    }
    os << "begin\n";
    if (p.body) detail::print_block(os, *p.body, 1);
    os << "end\n";
    return os.str();
}

}  // namespace ani::lang
