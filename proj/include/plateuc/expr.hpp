#pragma once

// Arithmetic expression evaluator for config-supplied fields.
// Grammar: + - * / ^ (right assoc), unary minus, parentheses,
// functions sin cos exp sqrt, constant pi, variables x y (aliases x1 x2).

#include <cctype>
#include <memory>
#include <vector>

#include "plateuc/common.hpp"

namespace plateuc {

namespace detail {

enum class ExprOp { num, var_x, var_y, add, sub, mul, div, pow, neg, sin, cos, exp, sqrt };

struct ExprNode {
    ExprOp op;
    double value = 0.0;
    std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

inline double eval_node(const ExprNode& n, double x, double y) {
    switch (n.op) {
        case ExprOp::num: return n.value;
        case ExprOp::var_x: return x;
        case ExprOp::var_y: return y;
        case ExprOp::add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
        case ExprOp::sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
        case ExprOp::mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
        case ExprOp::div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
        case ExprOp::pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
        case ExprOp::neg: return -eval_node(*n.a, x, y);
        case ExprOp::sin: return std::sin(eval_node(*n.a, x, y));
        case ExprOp::cos: return std::cos(eval_node(*n.a, x, y));
        case ExprOp::exp: return std::exp(eval_node(*n.a, x, y));
        case ExprOp::sqrt: return std::sqrt(eval_node(*n.a, x, y));
    }
    return 0.0;
}

class ExprParser {
  public:
    explicit ExprParser(const std::string& s) : src_(s) {}

    NodePtr parse() {
        NodePtr e = sum();
        skip_space();
        if (pos_ != src_.size())
            fail("unexpected trailing input");
        return e;
    }

  private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw invalid_parameter("expression error at position " + std::to_string(pos_) +
                                " in '" + src_ + "': " + what);
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_space();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    static NodePtr make(ExprOp op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
        auto n = std::make_shared<ExprNode>();
        n->op = op;
        n->value = v;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr sum() {
        NodePtr e = term();
        for (;;) {
            if (consume('+')) e = make(ExprOp::add, e, term());
            else if (consume('-')) e = make(ExprOp::sub, e, term());
            else return e;
        }
    }

    NodePtr term() {
        NodePtr e = unary();
        for (;;) {
            if (consume('*')) e = make(ExprOp::mul, e, unary());
            else if (consume('/')) e = make(ExprOp::div, e, unary());
            else return e;
        }
    }

    NodePtr unary() {
        if (consume('-')) return make(ExprOp::neg, unary());
        if (consume('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (consume('^'))
            return make(ExprOp::pow, base, unary());  // right associative
        return base;
    }

    NodePtr primary() {
        skip_space();
        if (pos_ >= src_.size()) fail("expected operand");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (consume('(')) {
            NodePtr e = sum();
            if (!consume(')')) fail("missing ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
                src_[pos_] == 'e' || src_[pos_] == 'E' ||
                ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
            ++pos_;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(src_.substr(start, pos_ - start), &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        if (used != pos_ - start) fail("malformed number");
        return make(ExprOp::num, nullptr, nullptr, v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "x" || name == "x1") return make(ExprOp::var_x);
        if (name == "y" || name == "x2") return make(ExprOp::var_y);
        if (name == "pi") return make(ExprOp::num, nullptr, nullptr, pi);
        ExprOp fn;
        if (name == "sin") fn = ExprOp::sin;
        else if (name == "cos") fn = ExprOp::cos;
        else if (name == "exp") fn = ExprOp::exp;
        else if (name == "sqrt") fn = ExprOp::sqrt;
        else fail("unknown identifier '" + name + "'");
        if (!consume('(')) fail("expected '(' after function name");
        NodePtr arg = sum();
        if (!consume(')')) fail("missing ')'");
        return make(fn, arg);
    }
};

}  // namespace detail

class Expression {
  public:
    Expression() = default;
    explicit Expression(const std::string& text)
        : text_(text), root_(detail::ExprParser(text).parse()) {}

    double operator()(double x, double y = 0.0) const {
        return detail::eval_node(*root_, x, y);
    }

    bool valid() const { return root_ != nullptr; }
    const std::string& text() const { return text_; }

    ScalarFunc as_field() const {
        auto r = root_;
        return [r](double x, double y) { return detail::eval_node(*r, x, y); };
    }
    Func1D as_profile() const {
        auto r = root_;
        return [r](double x) { return detail::eval_node(*r, x, 0.0); };
    }

  private:
    std::string text_;
    detail::NodePtr root_;
};

}  // namespace plateuc
