#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "symblock.hpp"

namespace varjet {

struct ParseError : std::runtime_error {
    int column;  // 1-based offset into the expression text
    ParseError(const std::string& msg, int column_)
        : std::runtime_error(msg + " at column " + std::to_string(column_)), column(column_) {}
};

struct EvalError : std::runtime_error {
    int column;  // start of the offending subexpression
    EvalError(const std::string& msg, int column_)
        : std::runtime_error(msg + " (subexpression at column " + std::to_string(column_) + ")"),
          column(column_) {}
};

using ParamMap = std::map<std::string, double>;

// Parsed expression over named variables and parameters. Grammar (documented
// in docs/grammar.ebnf): infix + - * /, right-associative ^, unary minus,
// function application for sin, cos, exp, log, sqrt, decimal literals,
// parentheses. Identifiers resolve first to variables, then to parameters.
class Expression {
public:
    Expression();
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;
    Expression(const Expression&);
    Expression& operator=(const Expression&);
    ~Expression();

    const std::vector<std::string>& variables() const { return vars_; }
    const std::set<std::string>& parameters() const { return params_used_; }
    const std::string& text() const { return text_; }

    struct Node;
    const Node& root() const { return *root_; }

private:
    friend Expression parse(const std::string&, const std::vector<std::string>&,
                            const std::set<std::string>&);

    std::unique_ptr<Node> root_;
    std::vector<std::string> vars_;
    std::set<std::string> params_used_;
    std::string text_;
};

Expression parse(const std::string& text, const std::vector<std::string>& variables,
                 const std::set<std::string>& parameter_names);

// Truncated multivariate jet at a base point: raw partial derivatives
// (not divided by i!) for every multi-index of modulus 0..K, stored order by
// order in decreasing-lex position. coefficient(0) is the value at the point.
class JetContext;

class TaylorValue {
public:
    TaylorValue() = default;
    TaylorValue(const JetContext* ctx);

    int order() const;
    int dim() const;
    double value() const { return c_.empty() ? 0.0 : c_[0]; }

    // raw partial at the basis position `rank` of order k
    double partial(int k, int rank) const;
    double partial(const MultiIndex& mi) const;

    // the lex-sifted differential F^{(k)} as a flat row
    std::vector<double> order_row(int k) const;

    const std::vector<double>& coefficients() const { return c_; }
    std::vector<double>& coefficients() { return c_; }
    const JetContext* context() const { return ctx_; }

private:
    const JetContext* ctx_ = nullptr;
    std::vector<double> c_;
};

// Shared tables for jets of a fixed (n, K): basis offsets and the Leibniz
// product table with exact binomial weights.
class JetContext {
public:
    JetContext(int n, int order);

    int dim() const { return n_; }
    int order() const { return order_; }
    int size() const { return size_; }
    int offset(int k) const { return offsets_[static_cast<std::size_t>(k)]; }
    int block_size(int k) const { return block_sizes_[static_cast<std::size_t>(k)]; }

    TaylorValue constant(double v) const;
    TaylorValue variable(int index, double base_value) const;

    TaylorValue add(const TaylorValue& a, const TaylorValue& b) const;
    TaylorValue sub(const TaylorValue& a, const TaylorValue& b) const;
    TaylorValue mul(const TaylorValue& a, const TaylorValue& b) const;
    TaylorValue scale(const TaylorValue& a, double s) const;

    // composition with a univariate outer function given by its derivatives
    // g[m] = f^(m)(a.value()), m = 0..K
    TaylorValue compose(const TaylorValue& a, std::span<const double> outer_derivs) const;

private:
    int n_, order_, size_;
    std::vector<int> offsets_;
    std::vector<int> block_sizes_;
    struct ProdEntry {
        int ia, ib, iout;
        double weight;  // C(p+q, p)
    };
    std::vector<ProdEntry> prod_table_;
};

// Evaluate an expression as a truncated jet at `point`. Throws EvalError on
// division by a zero jet value, log of a non-positive value, sqrt of a
// negative value, or a non-integer power of a non-positive base.
TaylorValue eval_taylor(const Expression& expr, std::span<const double> point,
                        const JetContext& ctx, const ParamMap& params);

double eval_scalar(const Expression& expr, std::span<const double> point, const ParamMap& params);

// Lex-sifted derivative blocks A_k = X^{(k)}(point) for a vector field given
// componentwise: A_0 is the field value as a (1,0)-column and A_k, k >= 1, is
// the (1,k)-block whose row r holds the order-k raw partials of component r.
std::vector<SymBlockD> field_blocks(const std::vector<Expression>& field,
                                    std::span<const double> point, int order,
                                    const ParamMap& params);

}  // namespace varjet
