#pragma once

// Scalar expression language for user-supplied coefficient functions.
// Grammar (documented in README):
//   expression := term { ('+'|'-') term }
//   term       := unary { ('*'|'/') unary }
//   unary      := '-' unary | power
//   power      := atom [ '^' unary ]          (right-associative)
//   atom       := number | name | name '(' expression ')' | '(' expression ')'
// Functions: sin cos exp tanh sqrt abs bump.  bump is the C-infinity hat
// exp(1 - 1/(1-x^2)) on |x|<1 and exactly 0 for |x|>=1.
//
// An Expr is immutable after parse; eval is reentrant.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geopulse {

double bump(double x);

// C-infinity step built from the integrated bump: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);

class Expr {
  public:
    Expr() = default;

    // Parses source against a fixed variable set. Referencing a name outside
    // `variables` fails at parse time with UnknownIdentifier.
    static Expr parse(std::string_view source, const std::vector<std::string>& variables);

    // values[i] binds variables()[i]. Domain faults (division by zero, sqrt of
    // a negative, invalid power, non-finite results) throw DomainError.
    double eval(std::span<const double> values) const;

    // Canonical fully parenthesized form; parse(print()) rebuilds the same tape.
    std::string print() const;

    const std::vector<std::string>& variables() const { return vars_; }
    bool depends_on(std::string_view name) const;
    bool empty() const { return tape_.empty(); }

  private:
    enum class Op : std::uint8_t {
        Const,
        Var,
        Add,
        Sub,
        Mul,
        Div,
        Pow,
        PowInt,  // exponent was an integer literal
        Neg,
        Sin,
        Cos,
        Exp,
        Tanh,
        Sqrt,
        Abs,
        Bump,
    };
    struct Node {
        Op op;
        int arg = 0;      // variable index
        double value = 0; // constant payload
    };

    std::vector<Node> tape_;  // postfix order
    std::vector<std::string> vars_;

    friend class ExprParser;
    void print_node(std::size_t& pos, std::string& out) const;
};

using ExprMatrix = std::vector<std::vector<Expr>>;

}  // namespace geopulse
