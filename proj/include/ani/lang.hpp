// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace ani::lang {

using Value = std::int64_t;

enum class VarClass { internal, observable };

inline const char* to_string(VarClass c) { return c == VarClass::internal ? "internal" : "observable"; }

/// Inclusive integer interval.
struct Range {
    Value lo = 0;
    Value hi = 0;
    std::size_t size() const { return static_cast<std::size_t>(hi - lo) + 1; }
    bool contains(Value v) const { return lo <= v && v <= hi; }
    bool operator==(const Range&) const = default;
};

struct VarDecl {
    std::string name;
    VarClass input_class = VarClass::internal;
    VarClass output_class = VarClass::internal;
    std::optional<Range> input_range;
    bool operator==(const VarDecl&) const = default;
};

/// Shared immutable node pointer with deep equality.
template <class T>
class Node {
  public:
    Node() = default;
    explicit Node(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}
    const T& operator*() const { return *ptr_; }
    const T* operator->() const { return ptr_.get(); }
    const T* get() const { return ptr_.get(); }
    explicit operator bool() const { return static_cast<bool>(ptr_); }
    friend bool operator==(const Node& a, const Node& b) {
        if (a.ptr_ == b.ptr_) return true;
        if (!a.ptr_ || !b.ptr_) return false;
        return *a.ptr_ == *b.ptr_;
    }

  private:
    std::shared_ptr<const T> ptr_;
};

enum class UnaryOp { neg, abs };
enum class BinaryOp { add, sub, mul, mod };
enum class CompareOp { eq, neq, lt, le };
enum class LogicOp { and_, or_ };

struct Expr {
    struct Const {
        Value value = 0;
        bool operator==(const Const&) const = default;
    };
    struct Var {
        std::string name;
        std::size_t slot = 0;  // index into Program::decls
        bool operator==(const Var&) const = default;
    };
    struct Unary {
        UnaryOp op;
        Node<Expr> arg;
        bool operator==(const Unary&) const = default;
    };
    struct Binary {
        BinaryOp op;
        Node<Expr> lhs;
        Node<Expr> rhs;
        bool operator==(const Binary&) const = default;
    };
    std::variant<Const, Var, Unary, Binary> node;
    bool operator==(const Expr&) const = default;
};
using ExprPtr = Node<Expr>;

struct BExpr {
    struct Const {
        bool value = true;
        bool operator==(const Const&) const = default;
    };
    struct Compare {
        CompareOp op;
        ExprPtr lhs;
        ExprPtr rhs;
        bool operator==(const Compare&) const = default;
    };
    struct Not {
        Node<BExpr> arg;
        bool operator==(const Not&) const = default;
    };
    struct Logic {
        LogicOp op;
        Node<BExpr> lhs;
        Node<BExpr> rhs;
        bool operator==(const Logic&) const = default;
    };
    std::variant<Const, Compare, Not, Logic> node;
    bool operator==(const BExpr&) const = default;
};
using BExprPtr = Node<BExpr>;

struct Stmt {
    struct Skip {
        std::size_t label = 0;
        bool operator==(const Skip&) const = default;
    };
    struct Assign {
        std::size_t label = 0;
        std::string target;
        std::size_t slot = 0;
        ExprPtr rhs;
        bool declassified = false;
        bool operator==(const Assign&) const = default;
    };
    // Sequences are not statements of their own and carry no label.
    struct Seq {
        std::vector<Node<Stmt>> items;
        bool operator==(const Seq&) const = default;
    };
    struct If {
        std::size_t label = 0;
        BExprPtr guard;
        Node<Stmt> then_branch;
        Node<Stmt> else_branch;
        bool operator==(const If&) const = default;
    };
    struct While {
        std::size_t label = 0;
        BExprPtr guard;
        Node<Stmt> body;
        bool operator==(const While&) const = default;
    };
    std::variant<Skip, Assign, Seq, If, While> node;
    bool operator==(const Stmt&) const = default;
};
using StmtPtr = Node<Stmt>;

struct Program {
    std::string name = "main";
    std::vector<VarDecl> decls;
    StmtPtr body;
    std::size_t points = 0;

    std::optional<std::size_t> slot_of(const std::string& var) const {
        for (std::size_t i = 0; i < decls.size(); ++i)
            if (decls[i].name == var) return i;
        return std::nullopt;
    }
    std::vector<std::size_t> slots(VarClass c, bool input) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < decls.size(); ++i)
            if ((input ? decls[i].input_class : decls[i].output_class) == c) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> observable_inputs() const { return slots(VarClass::observable, true); }
    std::vector<std::size_t> internal_inputs() const { return slots(VarClass::internal, true); }
    std::vector<std::size_t> observable_outputs() const { return slots(VarClass::observable, false); }
    std::vector<std::string> names(const std::vector<std::size_t>& slots) const {
        std::vector<std::string> out;
        out.reserve(slots.size());
        for (auto s : slots) out.push_back(decls[s].name);
        return out;
    }

    bool operator==(const Program&) const = default;
};

// Construction helpers, mostly for tests and the random program generator.
namespace build {

inline ExprPtr num(Value v) { return ExprPtr{Expr{Expr::Const{v}}}; }
inline ExprPtr var(std::string name, std::size_t slot) { return ExprPtr{Expr{Expr::Var{std::move(name), slot}}}; }
inline ExprPtr unary(UnaryOp op, ExprPtr e) { return ExprPtr{Expr{Expr::Unary{op, std::move(e)}}}; }
inline ExprPtr binary(BinaryOp op, ExprPtr a, ExprPtr b) {
    return ExprPtr{Expr{Expr::Binary{op, std::move(a), std::move(b)}}};
}
inline BExprPtr truth(bool v) { return BExprPtr{BExpr{BExpr::Const{v}}}; }
inline BExprPtr compare(CompareOp op, ExprPtr a, ExprPtr b) {
    return BExprPtr{BExpr{BExpr::Compare{op, std::move(a), std::move(b)}}};
}
inline BExprPtr negate(BExprPtr b) { return BExprPtr{BExpr{BExpr::Not{std::move(b)}}}; }
inline BExprPtr logic(LogicOp op, BExprPtr a, BExprPtr b) {
    return BExprPtr{BExpr{BExpr::Logic{op, std::move(a), std::move(b)}}};
}

}  // namespace build

/// A well-formedness problem found in a Program.
struct Diagnostic {
    std::string message;
    std::optional<std::size_t> label;
};

namespace detail {

struct WellFormedWalker {
    const Program& program;
    std::vector<Diagnostic>& out;
    std::size_t next_label = 0;

    void expect_label(std::size_t label) {
        if (label != next_label)
            out.push_back({"statement label " + std::to_string(label) + " out of textual order (expected " +
                               std::to_string(next_label) + ")",
                           label});
        ++next_label;
    }

    void check_var(const std::string& name, std::size_t slot, std::optional<std::size_t> label) {
        auto found = program.slot_of(name);
        if (!found)
            out.push_back({"undeclared variable '" + name + "'", label});
        else if (*found != slot)
            out.push_back({"variable '" + name + "' bound to wrong slot", label});
    }

    void expr(const ExprPtr& e, std::optional<std::size_t> label) {
        if (!e) {
            out.push_back({"missing expression", label});
            return;
        }
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Expr::Var>) {
                    check_var(n.name, n.slot, label);
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    expr(n.arg, label);
                } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                    expr(n.lhs, label);
                    expr(n.rhs, label);
                }
            },
            e->node);
    }

    void bexpr(const BExprPtr& b, std::optional<std::size_t> label) {
        if (!b) {
            out.push_back({"missing guard", label});
            return;
        }
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, BExpr::Compare>) {
                    expr(n.lhs, label);
                    expr(n.rhs, label);
                } else if constexpr (std::is_same_v<T, BExpr::Not>) {
                    bexpr(n.arg, label);
                } else if constexpr (std::is_same_v<T, BExpr::Logic>) {
                    bexpr(n.lhs, label);
                    bexpr(n.rhs, label);
                }
            },
            b->node);
    }

    void stmt(const StmtPtr& s) {
        if (!s) {
            out.push_back({"missing statement", std::nullopt});
            return;
        }
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Stmt::Skip>) {
                    expect_label(n.label);
                } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    expect_label(n.label);
                    check_var(n.target, n.slot, n.label);
                    expr(n.rhs, n.label);
                    if (n.declassified) {
                        auto slot = program.slot_of(n.target);
                        if (slot && program.decls[*slot].output_class != VarClass::observable)
                            out.push_back({"declassify assigned to '" + n.target +
                                               "', which is not an observable output",
                                           n.label});
                    }
                } else if constexpr (std::is_same_v<T, Stmt::Seq>) {
                    for (const auto& item : n.items) stmt(item);
                } else if constexpr (std::is_same_v<T, Stmt::If>) {
                    expect_label(n.label);
                    bexpr(n.guard, n.label);
                    stmt(n.then_branch);
                    stmt(n.else_branch);
                } else {
                    expect_label(n.label);
                    bexpr(n.guard, n.label);
                    stmt(n.body);
                }
            },
            s->node);
    }
};

}  // namespace detail

/// Checks every Program invariant; an empty result means the program is well formed.
inline std::vector<Diagnostic> well_formed(const Program& p) {
    std::vector<Diagnostic> out;
    for (std::size_t i = 0; i < p.decls.size(); ++i) {
        const auto& d = p.decls[i];
        for (std::size_t j = 0; j < i; ++j)
            if (p.decls[j].name == d.name) out.push_back({"duplicate declaration of '" + d.name + "'", std::nullopt});
        if (d.input_range && d.input_range->lo > d.input_range->hi)
            out.push_back({"empty input range for '" + d.name + "'", std::nullopt});
    }
    detail::WellFormedWalker walker{p, out};
    walker.stmt(p.body);
    if (walker.next_label != p.points)
        out.push_back({"program declares " + std::to_string(p.points) + " points but has " +
                           std::to_string(walker.next_label) + " statements",
                       std::nullopt});
    return out;
}

/// Number of syntactic (labeled) statements in a body.
inline std::size_t count_statements(const StmtPtr& s) {
    if (!s) return 0;
    return std::visit(
        [](const auto& n) -> std::size_t {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Stmt::Seq>) {
                std::size_t total = 0;
                for (const auto& item : n.items) total += count_statements(item);
                return total;
            } else if constexpr (std::is_same_v<T, Stmt::If>) {
                return 1 + count_statements(n.then_branch) + count_statements(n.else_branch);
            } else if constexpr (std::is_same_v<T, Stmt::While>) {
                return 1 + count_statements(n.body);
            } else {
                return 1;
            }
        },
        s->node);
}

}  // namespace ani::lang
