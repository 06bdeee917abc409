#pragma once
// Symbolic scalar expressions over chart coordinates: construction, parsing,
// differentiation, conservative simplification and evaluation.

#include <divkit/errors.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace divkit {

enum class Op : std::uint8_t {
    Const,
    Var,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Bump,  // bump(t) / (1 - t^2)^power, identically zero for |t| >= 1
    Add,
    Sub,
    Mul,
    Div,
    Pow,
};

inline bool is_unary(Op op) { return op >= Op::Neg && op <= Op::Bump; }
inline bool is_binary(Op op) { return op >= Op::Add; }

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int index = -1;      // Var: coordinate slot
    int power = 0;       // Bump: denominator exponent
    std::string name;    // Var
    NodePtr lhs;         // unary argument / binary left
    NodePtr rhs;         // binary right
};

/// Immutable expression handle. Copies share structure.
///
/// Variables carry both a name and a slot index; the index addresses the
/// coordinate array passed to `eval`, the name is used by `diff` and by
/// name-keyed evaluation.
class Expr {
public:
    Expr() : Expr(0.0) {}
    Expr(double value)  // NOLINT(google-explicit-constructor)
        : node_(std::make_shared<const Node>(Node{Op::Const, value, -1, 0, {}, nullptr, nullptr})) {}

    static Expr variable(std::string name, int index) {
        return Expr(std::make_shared<const Node>(
            Node{Op::Var, 0.0, index, 0, std::move(name), nullptr, nullptr}));
    }

    /// Raw constructors: no folding. The parser uses these so that the tree mirrors the text.
    static Expr raw_unary(Op op, const Expr& arg, int power = 0) {
        return Expr(std::make_shared<const Node>(Node{op, 0.0, -1, power, {}, arg.node_, nullptr}));
    }
    static Expr raw_binary(Op op, const Expr& lhs, const Expr& rhs) {
        return Expr(std::make_shared<const Node>(Node{op, 0.0, -1, 0, {}, lhs.node_, rhs.node_}));
    }

    Op op() const { return node_->op; }
    double value() const { return node_->value; }
    int index() const { return node_->index; }
    int power() const { return node_->power; }
    const std::string& name() const { return node_->name; }
    Expr lhs() const { return Expr(node_->lhs); }
    Expr rhs() const { return Expr(node_->rhs); }
    const Node* get() const { return node_.get(); }

    bool is_constant() const { return node_->op == Op::Const; }
    bool is_constant(double v) const { return node_->op == Op::Const && node_->value == v; }

private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

// ---------------------------------------------------------------------------
// Structural queries

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    if (a.op() != b.op()) return false;
    switch (a.op()) {
        case Op::Const:
            return a.value() == b.value() || (std::isnan(a.value()) && std::isnan(b.value()));
        case Op::Var:
            return a.name() == b.name();
        default:
            break;
    }
    if (a.power() != b.power()) return false;
    if (!structurally_equal(a.lhs(), b.lhs())) return false;
    return !is_binary(a.op()) || structurally_equal(a.rhs(), b.rhs());
}

inline bool depends_on(const Expr& e, std::string_view var) {
    switch (e.op()) {
        case Op::Const:
            return false;
        case Op::Var:
            return e.name() == var;
        default:
            break;
    }
    if (depends_on(e.lhs(), var)) return true;
    return is_binary(e.op()) && depends_on(e.rhs(), var);
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e.op() == Op::Var) {
        out.insert(e.name());
    } else if (e.op() != Op::Const) {
        collect_variables(e.lhs(), out);
        if (is_binary(e.op())) collect_variables(e.rhs(), out);
    }
}

inline std::set<std::string> variables(const Expr& e) {
    std::set<std::string> out;
    collect_variables(e, out);
    return out;
}

inline std::size_t node_count(const Expr& e) {
    if (e.op() == Op::Const || e.op() == Op::Var) return 1;
    return 1 + node_count(e.lhs()) + (is_binary(e.op()) ? node_count(e.rhs()) : 0);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double bump_value(double t, int power) {
    if (!(std::abs(t) < 1.0)) return 0.0;
    const double w = 1.0 - t * t;
    return std::exp(-1.0 / w - power * std::log(w));
}

inline double apply_unary(Op op, double a, int power) {
    switch (op) {
        case Op::Neg:
            return -a;
        case Op::Sin:
            return std::sin(a);
        case Op::Cos:
            return std::cos(a);
        case Op::Exp:
            return std::exp(a);
        case Op::Log:
            if (!(a > 0.0)) throw DomainError("log of non-positive value");
            return std::log(a);
        case Op::Sqrt:
            if (a < 0.0) throw DomainError("sqrt of negative value");
            return std::sqrt(a);
        case Op::Tanh:
            return std::tanh(a);
        case Op::Bump:
            return bump_value(a, power);
        default:
            break;
    }
    throw Error("not a unary operator");
}

inline double apply_binary(Op op, double a, double b) {
    switch (op) {
        case Op::Add:
            return a + b;
        case Op::Sub:
            return a - b;
        case Op::Mul:
            return a * b;
        case Op::Div:
            if (b == 0.0) throw DomainError("division by zero");
            return a / b;
        case Op::Pow:
            if (a == 0.0 && b < 0.0) throw DomainError("zero raised to a negative power");
            if (a < 0.0 && std::trunc(b) != b) throw DomainError("negative base with non-integer exponent");
            return std::pow(a, b);
        default:
            break;
    }
    throw Error("not a binary operator");
}

template <class Lookup>
double eval_with(const Node& n, const Lookup& lookup) {
    switch (n.op) {
        case Op::Const:
            return n.value;
        case Op::Var:
            return lookup(n);
        default:
            break;
    }
    const double a = eval_with(*n.lhs, lookup);
    if (is_unary(n.op)) return apply_unary(n.op, a, n.power);
    return apply_binary(n.op, a, eval_with(*n.rhs, lookup));
}

}  // namespace detail

/// Evaluates with variables addressed by slot index.
inline double eval(const Expr& e, std::span<const double> point) {
    return detail::eval_with(*e.get(), [&](const Node& n) -> double {
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= point.size())
            throw PreconditionError("point does not assign variable '" + n.name + "'");
        return point[static_cast<std::size_t>(n.index)];
    });
}

/// Evaluates with variables addressed by name.
inline double eval(const Expr& e, const std::map<std::string, double>& point) {
    return detail::eval_with(*e.get(), [&](const Node& n) -> double {
        auto it = point.find(n.name);
        if (it == point.end()) throw PreconditionError("point does not assign variable '" + n.name + "'");
        return it->second;
    });
}

// ---------------------------------------------------------------------------
// Folding constructors. Local rewrites only: constant folding, 0/1 identities,
// double negation and x - x for syntactically identical operands.

namespace detail {
inline bool foldable(double v) { return std::isfinite(v); }
}  // namespace detail

inline Expr make_unary(Op op, const Expr& a, int power = 0) {
    if (a.is_constant()) {
        try {
            const double v = detail::apply_unary(op, a.value(), power);
            if (detail::foldable(v)) return Expr(v);
        } catch (const DomainError&) {
        }
    }
    if (op == Op::Neg && a.op() == Op::Neg) return a.lhs();
    return Expr::raw_unary(op, a, power);
}

inline Expr make_binary(Op op, const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) {
        try {
            const double v = detail::apply_binary(op, a.value(), b.value());
            if (detail::foldable(v)) return Expr(v);
        } catch (const DomainError&) {
        }
    }
    switch (op) {
        case Op::Add:
            if (a.is_constant(0.0)) return b;
            if (b.is_constant(0.0)) return a;
            if (b.op() == Op::Neg) return make_binary(Op::Sub, a, b.lhs());
            break;
        case Op::Sub:
            if (b.is_constant(0.0)) return a;
            if (a.is_constant(0.0)) return make_unary(Op::Neg, b);
            if (structurally_equal(a, b)) return Expr(0.0);
            if (b.op() == Op::Neg) return make_binary(Op::Add, a, b.lhs());
            break;
        case Op::Mul:
            if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr(0.0);
            if (a.is_constant(1.0)) return b;
            if (b.is_constant(1.0)) return a;
            if (a.is_constant(-1.0)) return make_unary(Op::Neg, b);
            if (b.is_constant(-1.0)) return make_unary(Op::Neg, a);
            break;
        case Op::Div:
            if (b.is_constant(1.0)) return a;
            if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr(0.0);
            break;
        case Op::Pow:
            if (b.is_constant(1.0)) return a;
            if (b.is_constant(0.0)) return Expr(1.0);
            if (a.is_constant(1.0)) return Expr(1.0);
            break;
        default:
            break;
    }
    return Expr::raw_binary(op, a, b);
}

inline Expr operator-(const Expr& a) { return make_unary(Op::Neg, a); }
inline Expr operator+(const Expr& a, const Expr& b) { return make_binary(Op::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return make_binary(Op::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_binary(Op::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return make_binary(Op::Div, a, b); }
inline Expr pow(const Expr& a, const Expr& b) { return make_binary(Op::Pow, a, b); }
inline Expr sin(const Expr& a) { return make_unary(Op::Sin, a); }
inline Expr cos(const Expr& a) { return make_unary(Op::Cos, a); }
inline Expr exp(const Expr& a) { return make_unary(Op::Exp, a); }
inline Expr log(const Expr& a) { return make_unary(Op::Log, a); }
inline Expr sqrt(const Expr& a) { return make_unary(Op::Sqrt, a); }
inline Expr tanh(const Expr& a) { return make_unary(Op::Tanh, a); }
inline Expr bump(const Expr& a) { return make_unary(Op::Bump, a, 0); }

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

/// Rebuilds the tree bottom-up through the folding constructors.
inline Expr simplify(const Expr& e) {
    switch (e.op()) {
        case Op::Const:
        case Op::Var:
            return e;
        default:
            break;
    }
    if (is_unary(e.op())) return make_unary(e.op(), simplify(e.lhs()), e.power());
    return make_binary(e.op(), simplify(e.lhs()), simplify(e.rhs()));
}

// ---------------------------------------------------------------------------
// Differentiation

/// Exact partial derivative with respect to the variable named `var`.
inline Expr diff(const Expr& e, std::string_view var) {
    switch (e.op()) {
        case Op::Const:
            return Expr(0.0);
        case Op::Var:
            return Expr(e.name() == var ? 1.0 : 0.0);
        default:
            break;
    }
    const Expr a = e.lhs();
    const Expr da = diff(a, var);
    switch (e.op()) {
        case Op::Neg:
            return -da;
        case Op::Sin:
            return cos(a) * da;
        case Op::Cos:
            return -(sin(a) * da);
        case Op::Exp:
            return e * da;
        case Op::Log:
            return da / a;
        case Op::Sqrt:
            return da / (Expr(2.0) * e);
        case Op::Tanh:
            return (Expr(1.0) - e * e) * da;
        case Op::Bump: {
            // d/dt [bump(t) (1-t^2)^-k] = 2k t bump_{k+1}(t) - 2t bump_{k+2}(t)
            if (da.is_constant(0.0)) return Expr(0.0);
            const int k = e.power();
            Expr core = -(Expr(2.0) * a * make_unary(Op::Bump, a, k + 2));
            if (k != 0) core = Expr(2.0 * k) * a * make_unary(Op::Bump, a, k + 1) + core;
            return core * da;
        }
        default:
            break;
    }
    const Expr b = e.rhs();
    const Expr db = diff(b, var);
    switch (e.op()) {
        case Op::Add:
            return da + db;
        case Op::Sub:
            return da - db;
        case Op::Mul:
            return da * b + a * db;
        case Op::Div:
            return (da * b - a * db) / (b * b);
        case Op::Pow:
            if (db.is_constant(0.0)) return b * pow(a, b - Expr(1.0)) * da;
            if (da.is_constant(0.0)) return e * log(a) * db;
            return e * (db * log(a) + b * da / a);
        default:
            break;
    }
    throw Error("unhandled operator in diff");
}

// ---------------------------------------------------------------------------
// Printing (round-trips through parse_expr)

namespace detail {

// Binding strength: sum < product < unary minus < power < atom.
inline int precedence(const Expr& e) {
    switch (e.op()) {
        case Op::Add:
        case Op::Sub:
            return 1;
        case Op::Mul:
        case Op::Div:
            return 2;
        case Op::Neg:
            return 3;
        case Op::Pow:
            return 4;
        case Op::Const:
            return (e.value() < 0.0 || std::signbit(e.value())) ? 3 : 5;
        case Op::Bump:
            return e.power() == 0 ? 5 : 2;
        default:
            return 5;
    }
}

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline const char* function_name(Op op) {
    switch (op) {
        case Op::Sin:
            return "sin";
        case Op::Cos:
            return "cos";
        case Op::Exp:
            return "exp";
        case Op::Log:
            return "log";
        case Op::Sqrt:
            return "sqrt";
        case Op::Tanh:
            return "tanh";
        case Op::Bump:
            return "bump";
        default:
            return "?";
    }
}

void print_to(const Expr& e, std::string& out);

inline void print_child(const Expr& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_to(child, out);
        out += ')';
    } else {
        print_to(child, out);
    }
}

inline void print_to(const Expr& e, std::string& out) {
    switch (e.op()) {
        case Op::Const:
            out += format_number(e.value());
            return;
        case Op::Var:
            out += e.name();
            return;
        case Op::Neg:
            out += '-';
            print_child(e.lhs(), 3, out);
            return;
        case Op::Bump:
            if (e.power() != 0) {
                // Derivative family member: printed through its defining quotient.
                const Expr a = e.lhs();
                const Expr q = Expr::raw_binary(
                    Op::Div, Expr::raw_unary(Op::Bump, a),
                    Expr::raw_binary(Op::Pow,
                                     Expr::raw_binary(Op::Sub, Expr(1.0), Expr::raw_binary(Op::Pow, a, Expr(2.0))),
                                     Expr(static_cast<double>(e.power()))));
                print_to(q, out);
                return;
            }
            [[fallthrough]];
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Log:
        case Op::Sqrt:
        case Op::Tanh:
            out += function_name(e.op());
            out += '(';
            print_to(e.lhs(), out);
            out += ')';
            return;
        case Op::Add:
            print_child(e.lhs(), 1, out);
            out += " + ";
            print_child(e.rhs(), 2, out);
            return;
        case Op::Sub:
            print_child(e.lhs(), 1, out);
            out += " - ";
            print_child(e.rhs(), 2, out);
            return;
        case Op::Mul:
            print_child(e.lhs(), 2, out);
            out += '*';
            print_child(e.rhs(), 3, out);
            return;
        case Op::Div:
            print_child(e.lhs(), 2, out);
            out += '/';
            print_child(e.rhs(), 3, out);
            return;
        case Op::Pow:
            print_child(e.lhs(), 5, out);
            out += '^';
            print_child(e.rhs(), 3, out);
            return;
    }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_to(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
//
//   expr   := term (("+"|"-") term)* ;
//   term   := unary (("*"|"/") unary)* ;
//   unary  := "-" unary | power ;
//   power  := atom ("^" unary)? ;
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

namespace detail {

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> vars) : text_(text), vars_(vars) {}

    Expr parse() {
        Expr e = expr();
        skip_space();
        if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        return e;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) {
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        throw ParseError(what + ", found '" + std::string(1, text_[pos_]) + "'", pos_);
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = Expr::raw_binary(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = Expr::raw_binary(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = Expr::raw_binary(Op::Mul, lhs, unary());
            else if (accept('/'))
                lhs = Expr::raw_binary(Op::Div, lhs, unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        if (accept('-')) return Expr::raw_unary(Op::Neg, unary());
        return power();
    }

    Expr power() {
        Expr base = atom();
        if (accept('^')) return Expr::raw_binary(Op::Pow, base, unary());
        return base;
    }

    Expr atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("expected operand");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))))
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            Expr inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        fail("expected operand");
    }

    Expr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
            if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
                pos_ = look;
                digits();
            }
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
        return Expr(value);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            const Op op = builtin(name);
            if (op == Op::Const) throw UnknownIdentifier(name, start);
            ++pos_;
            Expr arg = expr();
            if (!accept(')')) fail("expected ')'");
            return Expr::raw_unary(op, arg);
        }
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return Expr::variable(name, static_cast<int>(i));
        throw UnknownIdentifier(name, start);
    }

    static Op builtin(const std::string& name) {
        static const std::map<std::string, Op, std::less<>> table = {
            {"sin", Op::Sin},   {"cos", Op::Cos},   {"exp", Op::Exp},   {"log", Op::Log},
            {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh}, {"bump", Op::Bump},
        };
        auto it = table.find(name);
        return it == table.end() ? Op::Const : it->second;
    }

    std::string_view text_;
    std::span<const std::string> vars_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `text` against the coordinate names `vars`; variable slots follow the order of `vars`.
inline Expr parse_expr(std::string_view text, std::span<const std::string> vars) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError("empty expression", 0);
    if (vars.empty()) throw PreconditionError("empty variable list");
    for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j)
            if (vars[i] == vars[j]) throw PreconditionError("duplicate variable '" + vars[i] + "'");
    return detail::Parser(text, vars).parse();
}

inline Expr parse_expr(std::string_view text, std::initializer_list<std::string> vars) {
    std::vector<std::string> v(vars);
    return parse_expr(text, std::span<const std::string>(v));
}

}  // namespace divkit
