#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sindyrl {

class ParseError : public std::invalid_argument {
public:
    ParseError(const std::string& message, std::size_t position)
        : std::invalid_argument(message + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Raised for identifiers outside x0..x{n-1}, a0..a{k-1} or unknown functions.
class UnknownIdentifierError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Immutable expression tree over the concatenated input vector (state slots
// first, then action slots).
class Expression {
public:
    enum class Kind { constant, variable, neg, add, sub, mul, div, pow, sin, cos };

    static std::shared_ptr<const Expression> constant(double value);
    static std::shared_ptr<const Expression> variable(std::size_t slot, std::string name);
    static std::shared_ptr<const Expression> unary(Kind kind, std::shared_ptr<const Expression> arg);
    static std::shared_ptr<const Expression> binary(Kind kind, std::shared_ptr<const Expression> lhs,
                                                    std::shared_ptr<const Expression> rhs);

    // Throws std::domain_error when a denominator evaluates to exactly zero.
    double eval(std::span<const double> input) const;

    // Canonical text: minimal parentheses, no spaces, literals in shortest
    // round-trip form.
    std::string to_string() const;

    // Sorted, de-duplicated input slots read by this expression.
    std::vector<std::size_t> slots() const;

    Kind kind() const { return kind_; }

private:
    Expression() = default;
    void collect_slots(std::vector<std::size_t>& out) const;
    std::string render(int parent_precedence, bool right_operand) const;

    Kind kind_ = Kind::constant;
    double value_ = 0.0;
    std::size_t slot_ = 0;
    std::string name_;
    std::shared_ptr<const Expression> lhs_;
    std::shared_ptr<const Expression> rhs_;
};

using ExpressionPtr = std::shared_ptr<const Expression>;

// Parses `text` with variables x0..x{state_dim-1} and a0..a{action_dim-1},
// operators + - * / ^, functions sin and cos, and numeric literals.
ExpressionPtr parse_expression(std::string_view text, std::size_t state_dim, std::size_t action_dim);

std::string variable_name(std::size_t slot, std::size_t state_dim);

}  // namespace sindyrl
