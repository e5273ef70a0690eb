#include "geopulse/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "geopulse/errors.hpp"

namespace geopulse {

double bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

namespace {
struct BumpTable {
    static constexpr int kCount = 4097;
    double value[kCount];
    BumpTable() {
        // cumulative integral of bump over [-1, 1], Simpson on the fine lattice
        const double h = 2.0 / (kCount - 1);
        value[0] = 0.0;
        for (int j = 1; j < kCount; ++j) {
            double a = -1.0 + (j - 1) * h, b = a + h;
            value[j] = value[j - 1] +
                       h / 6.0 * (bump(a) + 4.0 * bump(0.5 * (a + b)) + bump(b));
        }
        double total = value[kCount - 1];
        for (double& v : value) v /= total;
    }
};
const BumpTable& bump_table() {
    static const BumpTable table;
    return table;
}
}  // namespace

double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const BumpTable& tab = bump_table();
    double s = x * (BumpTable::kCount - 1);
    int i = std::min(static_cast<int>(s), BumpTable::kCount - 2);
    double t = s - i;
    // cubic Hermite with derivative = bump(2x-1)/total implied by neighbors
    int i0 = std::max(0, i - 1), i3 = std::min(BumpTable::kCount - 1, i + 2);
    double f0 = tab.value[i0], f1 = tab.value[i], f2 = tab.value[i + 1], f3 = tab.value[i3];
    double d1 = (i > 0) ? 0.5 * (f2 - f0) : f2 - f1;
    double d2 = (i + 2 < BumpTable::kCount) ? 0.5 * (f3 - f1) : f2 - f1;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f1 + (t3 - 2 * t2 + t) * d1 +
           (-2 * t3 + 3 * t2) * f2 + (t3 - t2) * d2;
}

namespace {

struct FuncEntry {
    const char* name;
    int op;  // Expr::Op value
};

}  // namespace

class ExprParser {
  public:
    ExprParser(std::string_view src, const std::vector<std::string>& vars, Expr& out)
        : src_(src), vars_(vars), out_(out) {}

    void run() {
        if (src_.empty()) throw SyntaxError("empty expression", 0);
        parse_expression();
        skip_ws();
        if (pos_ != src_.size()) throw SyntaxError("trailing input", pos_);
        int depth = 0, maxdepth = 0;
        for (const auto& node : out_.tape_) {
            if (node.op == Op::Const || node.op == Op::Var)
                ++depth;
            else if (node.op >= Op::Add && node.op <= Op::PowInt)
                --depth;
            maxdepth = std::max(maxdepth, depth);
        }
        if (maxdepth > 63) throw SyntaxError("expression too deep", 0);
        out_.vars_ = vars_;
    }

  private:
    using Op = Expr::Op;

    std::string_view src_;
    const std::vector<std::string>& vars_;
    Expr& out_;
    std::size_t pos_ = 0;

    void emit(Op op, int arg = 0, double value = 0) {
        out_.tape_.push_back({op, arg, value});
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw SyntaxError(std::string("expected '") + c + "'", pos_);
    }

    void parse_expression() {
        parse_term();
        for (;;) {
            if (accept('+')) {
                parse_term();
                emit(Op::Add);
            } else if (accept('-')) {
                parse_term();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void parse_term() {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                emit(Op::Mul);
            } else if (accept('/')) {
                parse_unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (accept('-')) {
            std::size_t mark = out_.tape_.size();
            parse_unary();
            // fold unary minus on a literal into the constant
            if (out_.tape_.size() == mark + 1 && out_.tape_.back().op == Op::Const)
                out_.tape_.back().value = -out_.tape_.back().value;
            else
                emit(Op::Neg);
            return;
        }
        parse_power();
    }

    void parse_power() {
        parse_atom();
        if (accept('^')) {
            std::size_t mark = out_.tape_.size();
            parse_unary();
            bool int_literal = out_.tape_.size() == mark + 1 &&
                               out_.tape_.back().op == Op::Const &&
                               out_.tape_.back().value ==
                                   std::nearbyint(out_.tape_.back().value) &&
                               std::abs(out_.tape_.back().value) < 1e9;
            emit(int_literal ? Op::PowInt : Op::Pow);
        }
    }

    void parse_atom() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            parse_expression();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            parse_name();
            return;
        }
        throw SyntaxError("unexpected character", pos_);
    }

    void parse_number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw SyntaxError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        emit(Op::Const, 0, v);
    }

    void parse_name() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));

        static const FuncEntry funcs[] = {
            {"sin", int(Op::Sin)},   {"cos", int(Op::Cos)},  {"exp", int(Op::Exp)},
            {"tanh", int(Op::Tanh)}, {"sqrt", int(Op::Sqrt)}, {"abs", int(Op::Abs)},
            {"bump", int(Op::Bump)},
        };
        for (const auto& f : funcs) {
            if (name == f.name) {
                if (!accept('('))
                    throw ArityMismatch("function '" + name + "' needs one argument", start);
                parse_expression();
                if (peek() == ',')
                    throw ArityMismatch("function '" + name + "' takes one argument", pos_);
                expect(')');
                emit(static_cast<Op>(f.op));
                return;
            }
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) {
                if (peek() == '(')
                    throw ArityMismatch("'" + name + "' is a variable, not a function",
                                        start);
                emit(Op::Var, static_cast<int>(i));
                return;
            }
        }
        throw UnknownIdentifier(name, start);
    }
};

Expr Expr::parse(std::string_view source, const std::vector<std::string>& variables) {
    Expr e;
    ExprParser(source, variables, e).run();
    return e;
}

bool Expr::depends_on(std::string_view name) const {
    for (const auto& node : tape_)
        if (node.op == Op::Var && vars_[node.arg] == name) return true;
    return false;
}

namespace {

[[noreturn]] void domain_fail(const char* what) { throw DomainError(what); }

double integer_power(double base, long long e) {
    if (e < 0) {
        if (base == 0.0) domain_fail("0 raised to a negative power");
        return 1.0 / integer_power(base, -e);
    }
    double acc = 1.0, b = base;
    while (e > 0) {
        if (e & 1) acc *= b;
        b *= b;
        e >>= 1;
    }
    return acc;
}

}  // namespace

double Expr::eval(std::span<const double> values) const {
    double stack[64];
    int top = -1;
    for (const auto& node : tape_) {
        switch (node.op) {
            case Op::Const:
                stack[++top] = node.value;
                break;
            case Op::Var:
                stack[++top] = values[node.arg];
                break;
            case Op::Add:
                --top;
                stack[top] += stack[top + 1];
                break;
            case Op::Sub:
                --top;
                stack[top] -= stack[top + 1];
                break;
            case Op::Mul:
                --top;
                stack[top] *= stack[top + 1];
                break;
            case Op::Div:
                --top;
                if (stack[top + 1] == 0.0) domain_fail("division by zero");
                stack[top] /= stack[top + 1];
                break;
            case Op::PowInt:
                --top;
                stack[top] =
                    integer_power(stack[top], static_cast<long long>(stack[top + 1]));
                break;
            case Op::Pow: {
                --top;
                double b = stack[top], e = stack[top + 1];
                if (b < 0.0) domain_fail("negative base with non-integer exponent");
                if (b == 0.0 && e <= 0.0) domain_fail("0 raised to a non-positive power");
                stack[top] = std::pow(b, e);
                break;
            }
            case Op::Neg:
                stack[top] = -stack[top];
                break;
            case Op::Sin:
                stack[top] = std::sin(stack[top]);
                break;
            case Op::Cos:
                stack[top] = std::cos(stack[top]);
                break;
            case Op::Exp:
                stack[top] = std::exp(stack[top]);
                break;
            case Op::Tanh:
                stack[top] = std::tanh(stack[top]);
                break;
            case Op::Sqrt:
                if (stack[top] < 0.0) domain_fail("sqrt of a negative value");
                stack[top] = std::sqrt(stack[top]);
                break;
            case Op::Abs:
                stack[top] = std::abs(stack[top]);
                break;
            case Op::Bump:
                stack[top] = bump(stack[top]);
                break;
        }
    }
    double v = stack[0];
    if (!std::isfinite(v)) domain_fail("expression produced a non-finite value");
    return v;
}

void Expr::print_node(std::size_t& pos, std::string& out) const {
    const Node& node = tape_[pos];
    --pos;
    auto binary = [&](const char* op) {
        std::string rhs, lhs;
        print_node(pos, rhs);
        print_node(pos, lhs);
        out += '(';
        out += lhs;
        out += op;
        out += rhs;
        out += ')';
    };
    auto call = [&](const char* name) {
        std::string arg;
        print_node(pos, arg);
        out += name;
        out += '(';
        out += arg;
        out += ')';
    };
    switch (node.op) {
        case Op::Const: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", node.value);
            if (node.value < 0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            break;
        }
        case Op::Var:
            out += vars_[node.arg];
            break;
        case Op::Add:
            binary(" + ");
            break;
        case Op::Sub:
            binary(" - ");
            break;
        case Op::Mul:
            binary("*");
            break;
        case Op::Div:
            binary("/");
            break;
        case Op::Pow:
        case Op::PowInt:
            binary("^");
            break;
        case Op::Neg: {
            std::string arg;
            print_node(pos, arg);
            out += "(-";
            out += arg;
            out += ')';
            break;
        }
        case Op::Sin:
            call("sin");
            break;
        case Op::Cos:
            call("cos");
            break;
        case Op::Exp:
            call("exp");
            break;
        case Op::Tanh:
            call("tanh");
            break;
        case Op::Sqrt:
            call("sqrt");
            break;
        case Op::Abs:
            call("abs");
            break;
        case Op::Bump:
            call("bump");
            break;
    }
}

std::string Expr::print() const {
    if (tape_.empty()) return "0";
    std::size_t pos = tape_.size() - 1;
    std::string out;
    print_node(pos, out);
    return out;
}

}  // namespace geopulse
