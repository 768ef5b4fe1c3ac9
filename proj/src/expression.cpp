#include "sindyrl/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <system_error>

namespace sindyrl {

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

int precedence(Expression::Kind kind) {
    using K = Expression::Kind;
    switch (kind) {
        case K::add:
        case K::sub:
            return kPrecAdd;
        case K::mul:
        case K::div:
            return kPrecMul;
        case K::neg:
            return kPrecNeg;
        case K::pow:
            return kPrecPow;
        default:
            return kPrecAtom;
    }
}

std::string format_number(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

class Parser {
public:
    Parser(std::string_view text, std::size_t state_dim, std::size_t action_dim)
        : text_(text), state_dim_(state_dim), action_dim_(action_dim) {}

    ExpressionPtr parse() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        auto e = parse_sum();
        skip_space();
        if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
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

    ExpressionPtr parse_sum() {
        auto lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = Expression::binary(Expression::Kind::add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = Expression::binary(Expression::Kind::sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    ExpressionPtr parse_product() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expression::binary(Expression::Kind::mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expression::binary(Expression::Kind::div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    ExpressionPtr parse_unary() {
        if (accept('-')) return Expression::unary(Expression::Kind::neg, parse_unary());
        return parse_power();
    }

    ExpressionPtr parse_power() {
        auto base = parse_primary();
        if (accept('^')) return Expression::binary(Expression::Kind::pow, base, parse_unary());
        return base;
    }

    ExpressionPtr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_sum();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    ExpressionPtr parse_number() {
        const std::size_t start = pos_;
        double value = 0.0;
        auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (res.ec != std::errc()) throw ParseError("malformed number", start);
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return Expression::constant(value);
    }

    ExpressionPtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        const std::string ident(text_.substr(start, pos_ - start));

        if (ident == "sin" || ident == "cos") {
            if (!accept('(')) throw ParseError("expected '(' after " + ident, pos_);
            auto arg = parse_sum();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return Expression::unary(ident == "sin" ? Expression::Kind::sin : Expression::Kind::cos, arg);
        }

        if ((ident[0] == 'x' || ident[0] == 'a') && ident.size() > 1 &&
            std::all_of(ident.begin() + 1, ident.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            std::size_t index = 0;
            std::from_chars(ident.data() + 1, ident.data() + ident.size(), index);
            const bool is_state = ident[0] == 'x';
            const std::size_t limit = is_state ? state_dim_ : action_dim_;
            if (index >= limit) {
                throw UnknownIdentifierError("unknown identifier '" + ident + "' at position " + std::to_string(start) +
                                             " (" + std::to_string(limit) + (is_state ? " state" : " action") +
                                             " variables available)");
            }
            const std::size_t slot = is_state ? index : state_dim_ + index;
            return Expression::variable(slot, variable_name(slot, state_dim_));
        }
        throw UnknownIdentifierError("unknown identifier '" + ident + "' at position " + std::to_string(start));
    }

    std::string_view text_;
    std::size_t state_dim_;
    std::size_t action_dim_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string variable_name(std::size_t slot, std::size_t state_dim) {
    return slot < state_dim ? "x" + std::to_string(slot) : "a" + std::to_string(slot - state_dim);
}

ExpressionPtr Expression::constant(double value) {
    auto e = std::shared_ptr<Expression>(new Expression());
    e->kind_ = Kind::constant;
    e->value_ = value;
    return e;
}

ExpressionPtr Expression::variable(std::size_t slot, std::string name) {
    auto e = std::shared_ptr<Expression>(new Expression());
    e->kind_ = Kind::variable;
    e->slot_ = slot;
    e->name_ = std::move(name);
    return e;
}

ExpressionPtr Expression::unary(Kind kind, ExpressionPtr arg) {
    auto e = std::shared_ptr<Expression>(new Expression());
    e->kind_ = kind;
    e->lhs_ = std::move(arg);
    return e;
}

ExpressionPtr Expression::binary(Kind kind, ExpressionPtr lhs, ExpressionPtr rhs) {
    auto e = std::shared_ptr<Expression>(new Expression());
    e->kind_ = kind;
    e->lhs_ = std::move(lhs);
    e->rhs_ = std::move(rhs);
    return e;
}

double Expression::eval(std::span<const double> input) const {
    switch (kind_) {
        case Kind::constant:
            return value_;
        case Kind::variable:
            return input[slot_];
        case Kind::neg:
            return -lhs_->eval(input);
        case Kind::add:
            return lhs_->eval(input) + rhs_->eval(input);
        case Kind::sub:
            return lhs_->eval(input) - rhs_->eval(input);
        case Kind::mul:
            return lhs_->eval(input) * rhs_->eval(input);
        case Kind::div: {
            const double den = rhs_->eval(input);
            if (den == 0.0) throw std::domain_error("division by zero in '" + to_string() + "'");
            return lhs_->eval(input) / den;
        }
        case Kind::pow: {
            const double base = lhs_->eval(input);
            const double exponent = rhs_->eval(input);
            if (exponent == 2.0) return base * base;
            return std::pow(base, exponent);
        }
        case Kind::sin:
            return std::sin(lhs_->eval(input));
        case Kind::cos:
            return std::cos(lhs_->eval(input));
    }
    return 0.0;
}

std::string Expression::to_string() const { return render(0, false); }

std::string Expression::render(int parent_precedence, bool right_operand) const {
    int prec = precedence(kind_);
    std::string out;
    switch (kind_) {
        case Kind::constant:
            out = format_number(value_);
            if (value_ < 0.0 || (value_ == 0.0 && std::signbit(value_))) prec = kPrecNeg;
            break;
        case Kind::variable:
            out = name_;
            break;
        case Kind::neg:
            out = "-" + lhs_->render(kPrecNeg, false);
            break;
        case Kind::add:
        case Kind::sub:
        case Kind::mul:
        case Kind::div: {
            const char op = kind_ == Kind::add ? '+' : kind_ == Kind::sub ? '-' : kind_ == Kind::mul ? '*' : '/';
            out = lhs_->render(prec, false) + op + rhs_->render(prec, true);
            break;
        }
        case Kind::pow:
            // Right-associative: the base needs parentheses at equal precedence.
            out = lhs_->render(prec + 1, false) + "^" + rhs_->render(kPrecNeg, false);
            break;
        case Kind::sin:
            out = "sin(" + lhs_->render(0, false) + ")";
            break;
        case Kind::cos:
            out = "cos(" + lhs_->render(0, false) + ")";
            break;
    }
    // Left-associative operators keep the tree shape by parenthesizing an
    // equal-precedence right operand.
    const bool wrap = prec < parent_precedence || (right_operand && prec == parent_precedence);
    return wrap ? "(" + out + ")" : out;
}

std::vector<std::size_t> Expression::slots() const {
    std::vector<std::size_t> out;
    collect_slots(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void Expression::collect_slots(std::vector<std::size_t>& out) const {
    if (kind_ == Kind::variable) out.push_back(slot_);
    if (lhs_) lhs_->collect_slots(out);
    if (rhs_) rhs_->collect_slots(out);
}

ExpressionPtr parse_expression(std::string_view text, std::size_t state_dim, std::size_t action_dim) {
    return Parser(text, state_dim, action_dim).parse();
}

}  // namespace sindyrl
