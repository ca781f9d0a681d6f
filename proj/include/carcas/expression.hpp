#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "carcas/rng.hpp"

namespace carcas {

// Selection-policy expressions over the terminals Q(s,a), N(s), N(s,a)
// and numeric constants, with protected arithmetic. Expressions are
// immutable values; mutation returns a new tree.

inline constexpr int kMaxExprDepth = 8;  // root counts as depth 1
inline constexpr double kProtectedEps = 0.001;

// Constant pool used when mutation introduces or redraws a constant.
inline constexpr double kConstantPool[] = {0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0};
inline constexpr int kConstantPoolSize = 8;

enum class ExprOp : std::uint8_t { Add, Sub, Mul, Div, Log, Sqrt };
enum class ExprLeaf : std::uint8_t { QSa, NS, NSa, Const };

inline constexpr int op_arity(ExprOp op) {
    return (op == ExprOp::Log || op == ExprOp::Sqrt) ? 1 : 2;
}

struct ExprNode {
    bool leaf = true;
    ExprOp op = ExprOp::Add;
    ExprLeaf terminal = ExprLeaf::QSa;
    double value = 0.0;       // Const only
    std::int16_t child0 = -1;
    std::int16_t child1 = -1;
};

struct SelectionContext {
    double q_sa = 0.0;
    double n_s = 1.0;
    double n_sa = 1.0;
};

class Expression {
public:
    std::vector<ExprNode> nodes;  // nodes[0] is the root
    bool empty() const { return nodes.empty(); }
    int node_count() const { return static_cast<int>(nodes.size()); }
    int depth() const { return depth_below(0); }

    int depth_below(int idx) const {
        const ExprNode& n = nodes[static_cast<std::size_t>(idx)];
        if (n.leaf) return 1;
        int d = depth_below(n.child0);
        if (op_arity(n.op) == 2) d = std::max(d, depth_below(n.child1));
        return d + 1;
    }
};

inline double protected_div(double a, double b) {
    return std::fabs(b) < kProtectedEps ? 1.0 : a / b;
}
inline double protected_log(double a) { return std::log(std::max(std::fabs(a), kProtectedEps)); }
inline double protected_sqrt(double a) { return std::sqrt(std::fabs(a)); }

namespace detail {

// Values are clamped at every node so that deep product chains cannot
// overflow to infinity; evaluate() stays total over finite contexts.
inline constexpr double kValueClamp = 1e100;

inline double clampv(double v) {
    if (v > kValueClamp) return kValueClamp;
    if (v < -kValueClamp) return -kValueClamp;
    return v;
}

inline double eval_node(const Expression& e, int idx, const SelectionContext& ctx) {
    const ExprNode& n = e.nodes[static_cast<std::size_t>(idx)];
    if (n.leaf) {
        switch (n.terminal) {
            case ExprLeaf::QSa: return ctx.q_sa;
            case ExprLeaf::NS: return ctx.n_s;
            case ExprLeaf::NSa: return ctx.n_sa;
            case ExprLeaf::Const: return n.value;
        }
    }
    const double a = eval_node(e, n.child0, ctx);
    switch (n.op) {
        case ExprOp::Add: return clampv(a + eval_node(e, n.child1, ctx));
        case ExprOp::Sub: return clampv(a - eval_node(e, n.child1, ctx));
        case ExprOp::Mul: return clampv(a * eval_node(e, n.child1, ctx));
        case ExprOp::Div: return clampv(protected_div(a, eval_node(e, n.child1, ctx)));
        case ExprOp::Log: return clampv(protected_log(a));
        case ExprOp::Sqrt: return clampv(protected_sqrt(a));
    }
    return 0.0;
}

}  // namespace detail

inline double evaluate(const Expression& e, const SelectionContext& ctx) {
    return detail::eval_node(e, 0, ctx);
}

namespace detail {

struct Builder {
    Expression e;
    int leaf(ExprLeaf t, double v = 0.0) {
        ExprNode n;
        n.leaf = true;
        n.terminal = t;
        n.value = v;
        e.nodes.push_back(n);
        return static_cast<int>(e.nodes.size() - 1);
    }
    int op1(ExprOp op, int c0) {
        ExprNode n;
        n.leaf = false;
        n.op = op;
        n.child0 = static_cast<std::int16_t>(c0);
        e.nodes.push_back(n);
        return static_cast<int>(e.nodes.size() - 1);
    }
    int op2(ExprOp op, int c0, int c1) {
        ExprNode n;
        n.leaf = false;
        n.op = op;
        n.child0 = static_cast<std::int16_t>(c0);
        n.child1 = static_cast<std::int16_t>(c1);
        e.nodes.push_back(n);
        return static_cast<int>(e.nodes.size() - 1);
    }
};

// Appends a deep copy of `src`'s subtree at `idx` to builder, returning
// the new index.
inline int append_subtree(Builder& b, const Expression& src, int idx) {
    const ExprNode& n = src.nodes[static_cast<std::size_t>(idx)];
    if (n.leaf) return b.leaf(n.terminal, n.value);
    const int c0 = append_subtree(b, src, n.child0);
    if (op_arity(n.op) == 1) return b.op1(n.op, c0);
    const int c1 = append_subtree(b, src, n.child1);
    return b.op2(n.op, c0, c1);
}

}  // namespace detail

// The canonical UCT individual: Q(s,a) + (2*K) * sqrt((2*ln N(s)) / N(s,a)).
inline Expression seeded_uct(double k) {
    if (!std::isfinite(k)) throw std::invalid_argument("seeded_uct: k must be finite");
    Expression e;
    e.nodes.resize(13);
    auto set_op = [&](int i, ExprOp op, int c0, int c1) {
        e.nodes[static_cast<std::size_t>(i)] =
            ExprNode{false, op, ExprLeaf::QSa, 0.0, static_cast<std::int16_t>(c0),
                     static_cast<std::int16_t>(c1)};
    };
    auto set_leaf = [&](int i, ExprLeaf t, double v = 0.0) {
        e.nodes[static_cast<std::size_t>(i)] = ExprNode{true, ExprOp::Add, t, v, -1, -1};
    };
    set_op(0, ExprOp::Add, 1, 2);       // q + rest
    set_leaf(1, ExprLeaf::QSa);
    set_op(2, ExprOp::Mul, 3, 6);       // (2*K) * sqrt(...)
    set_op(3, ExprOp::Mul, 4, 5);       // 2*K
    set_leaf(4, ExprLeaf::Const, 2.0);
    set_leaf(5, ExprLeaf::Const, k);
    set_op(6, ExprOp::Sqrt, 7, -1);
    set_op(7, ExprOp::Div, 8, 12);      // (2*ln N(s)) / N(s,a)
    set_op(8, ExprOp::Mul, 9, 10);      // 2*ln N(s)
    set_leaf(9, ExprLeaf::Const, 2.0);
    set_op(10, ExprOp::Log, 11, -1);
    set_leaf(11, ExprLeaf::NS);
    set_leaf(12, ExprLeaf::NSa);
    return e;
}

inline int node_count(const Expression& e) { return e.node_count(); }

inline std::string serialize(const Expression& e) {
    std::ostringstream out;
    auto emit = [&](auto&& self, int idx) -> void {
        const ExprNode& n = e.nodes[static_cast<std::size_t>(idx)];
        if (n.leaf) {
            switch (n.terminal) {
                case ExprLeaf::QSa: out << "Q_sa"; return;
                case ExprLeaf::NS: out << "N_s"; return;
                case ExprLeaf::NSa: out << "N_sa"; return;
                case ExprLeaf::Const: {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.17g", n.value);
                    out << buf;
                    return;
                }
            }
        }
        const char* name = nullptr;
        switch (n.op) {
            case ExprOp::Add: name = "+"; break;
            case ExprOp::Sub: name = "-"; break;
            case ExprOp::Mul: name = "*"; break;
            case ExprOp::Div: name = "/"; break;
            case ExprOp::Log: name = "log"; break;
            case ExprOp::Sqrt: name = "sqrt"; break;
        }
        out << "(" << name << " ";
        self(self, n.child0);
        if (op_arity(n.op) == 2) {
            out << " ";
            self(self, n.child1);
        }
        out << ")";
    };
    emit(emit, 0);
    return out.str();
}

namespace detail {

struct ExprTokenizer {
    std::string_view text;
    std::size_t pos = 0;
    std::string next() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos >= text.size()) return {};
        if (text[pos] == '(' || text[pos] == ')') return std::string(1, text[pos++]);
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')') {
            ++pos;
        }
        return std::string(text.substr(start, pos - start));
    }
};

inline int parse_expr(Builder& b, ExprTokenizer& tz, int depth) {
    if (depth > kMaxExprDepth) throw std::runtime_error("expression: depth exceeds limit");
    const std::string tok = tz.next();
    if (tok.empty()) throw std::runtime_error("expression: unexpected end of input");
    if (tok == ")") throw std::runtime_error("expression: unexpected ')'");
    if (tok != "(") {
        if (tok == "Q_sa") return b.leaf(ExprLeaf::QSa);
        if (tok == "N_s") return b.leaf(ExprLeaf::NS);
        if (tok == "N_sa") return b.leaf(ExprLeaf::NSa);
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::runtime_error("");
            return b.leaf(ExprLeaf::Const, v);
        } catch (...) {
            throw std::runtime_error("expression: unknown terminal '" + tok + "'");
        }
    }
    const std::string op = tz.next();
    ExprOp eop;
    if (op == "+") eop = ExprOp::Add;
    else if (op == "-") eop = ExprOp::Sub;
    else if (op == "*") eop = ExprOp::Mul;
    else if (op == "/") eop = ExprOp::Div;
    else if (op == "log") eop = ExprOp::Log;
    else if (op == "sqrt") eop = ExprOp::Sqrt;
    else throw std::runtime_error("expression: unknown operator '" + op + "'");
    const int c0 = parse_expr(b, tz, depth + 1);
    int c1 = -1;
    if (op_arity(eop) == 2) c1 = parse_expr(b, tz, depth + 1);
    const std::string close = tz.next();
    if (close != ")") {
        throw std::runtime_error("expression: operator '" + op + "' has wrong arity");
    }
    return op_arity(eop) == 1 ? b.op1(eop, c0) : b.op2(eop, c0, c1);
}

}  // namespace detail

// Parses the prefix text format produced by serialize(). Rejects arity
// violations and trees deeper than the depth limit.
inline Expression parse_expression(std::string_view text) {
    detail::ExprTokenizer tz{text};
    detail::Builder b;
    // Parse into a scratch builder, then rebuild with the root at 0.
    const int root = detail::parse_expr(b, tz, 1);
    const std::string trailing = tz.next();
    if (!trailing.empty()) throw std::runtime_error("expression: trailing input");
    detail::Builder out;
    detail::append_subtree(out, b.e, root);
    // append_subtree appends children before parents; re-root by moving
    // the final node (the subtree root) to index 0.
    Expression reordered;
    std::vector<int> order;
    auto emit = [&](auto&& self, int idx) -> int {
        const ExprNode& n = out.e.nodes[static_cast<std::size_t>(idx)];
        const int mine = static_cast<int>(reordered.nodes.size());
        reordered.nodes.push_back(n);
        if (!n.leaf) {
            const int c0 = self(self, n.child0);
            reordered.nodes[static_cast<std::size_t>(mine)].child0 = static_cast<std::int16_t>(c0);
            if (op_arity(n.op) == 2) {
                const int c1 = self(self, n.child1);
                reordered.nodes[static_cast<std::size_t>(mine)].child1 =
                    static_cast<std::int16_t>(c1);
            }
        }
        return mine;
    };
    emit(emit, static_cast<int>(out.e.nodes.size()) - 1);
    if (reordered.depth() > kMaxExprDepth) {
        throw std::runtime_error("expression: depth exceeds limit");
    }
    return reordered;
}

struct MutationInfo {
    bool picked_internal = false;
    int point = 0;  // node index in the parent tree
};

namespace detail {

// Grow method: uniform over all symbols above the depth floor, terminal
// forced at the limit. Constants draw from the mutation constant pool.
inline int grow_random(Builder& b, Rng& rng, int depth, int max_depth) {
    const bool must_terminal = depth >= max_depth;
    const int pick = must_terminal ? rng.uniform_int(4) : rng.uniform_int(10);
    if (pick < 4) {
        switch (pick) {
            case 0: return b.leaf(ExprLeaf::QSa);
            case 1: return b.leaf(ExprLeaf::NS);
            case 2: return b.leaf(ExprLeaf::NSa);
            default:
                return b.leaf(ExprLeaf::Const, kConstantPool[rng.uniform_int(kConstantPoolSize)]);
        }
    }
    const ExprOp op = static_cast<ExprOp>(pick - 4);
    const int c0 = grow_random(b, rng, depth + 1, max_depth);
    if (op_arity(op) == 1) return b.op1(op, c0);
    const int c1 = grow_random(b, rng, depth + 1, max_depth);
    return b.op2(op, c0, c1);
}

inline void collect_depths(const Expression& e, int idx, int depth, std::vector<int>& out) {
    out[static_cast<std::size_t>(idx)] = depth;
    const ExprNode& n = e.nodes[static_cast<std::size_t>(idx)];
    if (n.leaf) return;
    collect_depths(e, n.child0, depth + 1, out);
    if (op_arity(n.op) == 2) collect_depths(e, n.child1, depth + 1, out);
}

// Rebuilds `src` with the subtree at `point` replaced by `replacement`.
inline int rebuild_replacing(Builder& b, const Expression& src, int idx, int point,
                             const Expression& replacement) {
    if (idx == point) return append_subtree(b, replacement, 0);
    const ExprNode& n = src.nodes[static_cast<std::size_t>(idx)];
    if (n.leaf) return b.leaf(n.terminal, n.value);
    const int c0 = rebuild_replacing(b, src, n.child0, point, replacement);
    if (op_arity(n.op) == 1) return b.op1(n.op, c0);
    const int c1 = rebuild_replacing(b, src, n.child1, point, replacement);
    return b.op2(n.op, c0, c1);
}

inline Expression reroot(const Expression& scratch, int root) {
    Expression out;
    auto emit = [&](auto&& self, int idx) -> int {
        const ExprNode& n = scratch.nodes[static_cast<std::size_t>(idx)];
        const int mine = static_cast<int>(out.nodes.size());
        out.nodes.push_back(n);
        if (!n.leaf) {
            const int c0 = self(self, n.child0);
            out.nodes[static_cast<std::size_t>(mine)].child0 = static_cast<std::int16_t>(c0);
            if (op_arity(n.op) == 2) {
                const int c1 = self(self, n.child1);
                out.nodes[static_cast<std::size_t>(mine)].child1 = static_cast<std::int16_t>(c1);
            }
        }
        return mine;
    };
    emit(emit, root);
    return out;
}

}  // namespace detail

// Subtree mutation: picks an internal node with probability 0.9 (a leaf
// with 0.1, and with certainty when there are no internal nodes) and
// replaces the subtree there with a freshly grown one within the depth
// limit. A selected constant leaf is redrawn from the constant pool
// instead. Exactly one mutation per call.
inline Expression subtree_mutation(const Expression& parent, Rng& rng,
                                   MutationInfo* info = nullptr) {
    std::vector<int> internal_nodes, leaf_nodes;
    for (std::size_t i = 0; i < parent.nodes.size(); ++i) {
        (parent.nodes[i].leaf ? leaf_nodes : internal_nodes).push_back(static_cast<int>(i));
    }
    bool pick_internal = !internal_nodes.empty();
    if (pick_internal) pick_internal = rng.uniform01() < 0.9;
    const std::vector<int>& pool = pick_internal ? internal_nodes : leaf_nodes;
    const int point = pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool.size())))];
    if (info) {
        info->picked_internal = pick_internal;
        info->point = point;
    }

    const ExprNode& chosen = parent.nodes[static_cast<std::size_t>(point)];
    Expression replacement;
    if (chosen.leaf && chosen.terminal == ExprLeaf::Const) {
        detail::Builder rb;
        rb.leaf(ExprLeaf::Const, kConstantPool[rng.uniform_int(kConstantPoolSize)]);
        replacement = std::move(rb.e);
    } else {
        std::vector<int> depths(parent.nodes.size(), 0);
        detail::collect_depths(parent, 0, 1, depths);
        const int room = kMaxExprDepth - depths[static_cast<std::size_t>(point)] + 1;
        detail::Builder rb;
        const int root = detail::grow_random(rb, rng, 1, room);
        replacement = detail::reroot(rb.e, root);
    }

    detail::Builder nb;
    const int root = detail::rebuild_replacing(nb, parent, 0, point, replacement);
    return detail::reroot(nb.e, root);
}

// Structural equality.
inline bool expr_equal(const Expression& a, int ia, const Expression& b, int ib) {
    const ExprNode& na = a.nodes[static_cast<std::size_t>(ia)];
    const ExprNode& nb = b.nodes[static_cast<std::size_t>(ib)];
    if (na.leaf != nb.leaf) return false;
    if (na.leaf) {
        return na.terminal == nb.terminal &&
               (na.terminal != ExprLeaf::Const || na.value == nb.value);
    }
    if (na.op != nb.op) return false;
    if (!expr_equal(a, na.child0, b, nb.child0)) return false;
    return op_arity(na.op) == 1 || expr_equal(a, na.child1, b, nb.child1);
}

inline bool expr_equal(const Expression& a, const Expression& b) {
    return expr_equal(a, 0, b, 0);
}

// Number of maximal differing regions between two trees; subtree
// mutation yields 0 (replacement happened to regrow the same subtree)
// or 1.
inline int diff_region_count(const Expression& a, int ia, const Expression& b, int ib) {
    const ExprNode& na = a.nodes[static_cast<std::size_t>(ia)];
    const ExprNode& nb = b.nodes[static_cast<std::size_t>(ib)];
    const bool same_here = na.leaf == nb.leaf &&
                           (na.leaf ? (na.terminal == nb.terminal &&
                                       (na.terminal != ExprLeaf::Const || na.value == nb.value))
                                    : na.op == nb.op);
    if (!same_here) return 1;  // whole region differs
    if (na.leaf) return 0;
    int regions = diff_region_count(a, na.child0, b, nb.child0);
    if (op_arity(na.op) == 2) regions += diff_region_count(a, na.child1, b, nb.child1);
    return regions;
}

inline int diff_region_count(const Expression& a, const Expression& b) {
    return diff_region_count(a, 0, b, 0);
}

}  // namespace carcas
