#include "exprjet.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

namespace varjet {

// ---------------------------------------------------------------------------
// AST

enum class NodeKind { number, variable, parameter, negate, add, sub, mul, div, pow, call };

enum class FnKind { sin, cos, exp, log, sqrt };

struct Expression::Node {
    NodeKind kind;
    int column = 0;            // 1-based position in source, for diagnostics
    double number = 0.0;       // number
    int var_index = -1;        // variable
    std::string name;          // parameter / function name
    FnKind fn = FnKind::sin;   // call
    std::unique_ptr<Node> lhs, rhs;

    std::unique_ptr<Node> clone() const {
        auto n = std::make_unique<Node>();
        n->kind = kind;
        n->column = column;
        n->number = number;
        n->var_index = var_index;
        n->name = name;
        n->fn = fn;
        if (lhs) n->lhs = lhs->clone();
        if (rhs) n->rhs = rhs->clone();
        return n;
    }
};

Expression::Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;
Expression::~Expression() = default;

Expression::Expression(const Expression& o)
    : root_(o.root_ ? o.root_->clone() : nullptr),
      vars_(o.vars_),
      params_used_(o.params_used_),
      text_(o.text_) {}

Expression& Expression::operator=(const Expression& o) {
    if (this != &o) {
        root_ = o.root_ ? o.root_->clone() : nullptr;
        vars_ = o.vars_;
        params_used_ = o.params_used_;
        text_ = o.text_;
    }
    return *this;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent with the usual precedence ladder.

namespace {

struct Parser {
    const std::string& text;
    const std::vector<std::string>& vars;
    const std::set<std::string>& params;
    std::size_t pos = 0;
    std::set<std::string> used_params;

    using NodePtr = std::unique_ptr<Expression::Node>;

    int column() const { return static_cast<int>(pos) + 1; }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    NodePtr make(NodeKind kind, int col) {
        auto n = std::make_unique<Expression::Node>();
        n->kind = kind;
        n->column = col;
        return n;
    }

    NodePtr parse_expression() {
        NodePtr lhs = parse_term();
        for (;;) {
            char c = peek();
            if (c == '+' || c == '-') {
                int col = column();
                ++pos;
                NodePtr rhs = parse_term();
                NodePtr n = make(c == '+' ? NodeKind::add : NodeKind::sub, col);
                n->lhs = std::move(lhs);
                n->rhs = std::move(rhs);
                lhs = std::move(n);
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            char c = peek();
            if (c == '*' || c == '/') {
                int col = column();
                ++pos;
                NodePtr rhs = parse_unary();
                NodePtr n = make(c == '*' ? NodeKind::mul : NodeKind::div, col);
                n->lhs = std::move(lhs);
                n->rhs = std::move(rhs);
                lhs = std::move(n);
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (peek() == '-') {
            int col = column();
            ++pos;
            NodePtr n = make(NodeKind::negate, col);
            n->lhs = parse_unary();
            return n;
        }
        if (peek() == '+') {
            ++pos;
            return parse_unary();
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (peek() == '^') {
            int col = column();
            ++pos;
            // right associative; exponent may carry its own unary minus
            NodePtr expo = parse_unary_power();
            NodePtr n = make(NodeKind::pow, col);
            n->lhs = std::move(base);
            n->rhs = std::move(expo);
            return n;
        }
        return base;
    }

    NodePtr parse_unary_power() {
        if (peek() == '-') {
            int col = column();
            ++pos;
            NodePtr n = make(NodeKind::negate, col);
            n->lhs = parse_unary_power();
            return n;
        }
        return parse_power();
    }

    NodePtr parse_atom() {
        char c = peek();
        int col = column();
        if (c == '\0') throw ParseError("unexpected end of expression", col);
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expression();
            if (!consume(')')) throw ParseError("expected ')'", column());
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", col);
    }

    NodePtr parse_number() {
        skip_ws();
        int col = column();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t mark = pos;
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            } else {
                pos = mark;  // not an exponent, e.g. "2*e" where e is an identifier
            }
        }
        NodePtr n = make(NodeKind::number, col);
        try {
            n->number = std::stod(text.substr(start, pos - start));
        } catch (const std::exception&) {
            throw ParseError("malformed number", col);
        }
        return n;
    }

    NodePtr parse_identifier() {
        skip_ws();
        int col = column();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name = text.substr(start, pos - start);
        static const std::map<std::string, FnKind> functions{{"sin", FnKind::sin},
                                                             {"cos", FnKind::cos},
                                                             {"exp", FnKind::exp},
                                                             {"log", FnKind::log},
                                                             {"sqrt", FnKind::sqrt}};
        auto fit = functions.find(name);
        if (fit != functions.end()) {
            if (!consume('(')) throw ParseError("function '" + name + "' expects an argument list", column());
            NodePtr arg = parse_expression();
            if (peek() == ',') throw ParseError("function '" + name + "' takes exactly one argument", column());
            if (!consume(')')) throw ParseError("expected ')'", column());
            NodePtr n = make(NodeKind::call, col);
            n->fn = fit->second;
            n->name = name;
            n->lhs = std::move(arg);
            return n;
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i] == name) {
                NodePtr n = make(NodeKind::variable, col);
                n->var_index = static_cast<int>(i);
                return n;
            }
        }
        if (params.count(name)) {
            used_params.insert(name);
            NodePtr n = make(NodeKind::parameter, col);
            n->name = name;
            return n;
        }
        throw ParseError("unknown identifier '" + name + "'", col);
    }
};

}  // namespace

Expression parse(const std::string& text, const std::vector<std::string>& variables,
                 const std::set<std::string>& parameter_names) {
    Parser p{text, variables, parameter_names, 0, {}};
    Expression e;
    e.root_ = p.parse_expression();
    if (p.peek() != '\0') throw ParseError("trailing input", p.column());
    e.vars_ = variables;
    e.params_used_ = std::move(p.used_params);
    e.text_ = text;
    return e;
}

// ---------------------------------------------------------------------------
// Jet context and arithmetic

JetContext::JetContext(int n, int order) : n_(n), order_(order) {
    offsets_.resize(static_cast<std::size_t>(order) + 1);
    block_sizes_.resize(static_cast<std::size_t>(order) + 1);
    int off = 0;
    for (int k = 0; k <= order; ++k) {
        offsets_[static_cast<std::size_t>(k)] = off;
        block_sizes_[static_cast<std::size_t>(k)] = static_cast<int>(dim_sym(n, k));
        off += block_sizes_[static_cast<std::size_t>(k)];
    }
    size_ = off;
    // Leibniz table: d^(p+q)(fg) collects C(p+q, p) d^p f d^q g
    for (int ka = 0; ka <= order; ++ka) {
        const auto& basis_a = lex_basis(n, ka);
        for (int kb = 0; ka + kb <= order; ++kb) {
            const auto& basis_b = lex_basis(n, kb);
            for (int ia = 0; ia < static_cast<int>(basis_a.size()); ++ia) {
                for (int ib = 0; ib < static_cast<int>(basis_b.size()); ++ib) {
                    MultiIndex sum = basis_a[static_cast<std::size_t>(ia)].plus(
                        basis_b[static_cast<std::size_t>(ib)]);
                    ProdEntry e;
                    e.ia = offsets_[static_cast<std::size_t>(ka)] + ia;
                    e.ib = offsets_[static_cast<std::size_t>(kb)] + ib;
                    e.iout = offsets_[static_cast<std::size_t>(ka + kb)] + lex_rank(sum);
                    e.weight = static_cast<double>(
                        multi_binom(sum, basis_a[static_cast<std::size_t>(ia)]));
                    prod_table_.push_back(e);
                }
            }
        }
    }
}

TaylorValue::TaylorValue(const JetContext* ctx) : ctx_(ctx), c_(static_cast<std::size_t>(ctx->size()), 0.0) {}

int TaylorValue::order() const { return ctx_ ? ctx_->order() : 0; }
int TaylorValue::dim() const { return ctx_ ? ctx_->dim() : 0; }

double TaylorValue::partial(int k, int rank) const {
    return c_[static_cast<std::size_t>(ctx_->offset(k) + rank)];
}

double TaylorValue::partial(const MultiIndex& mi) const {
    return partial(mi.modulus(), lex_rank(mi));
}

std::vector<double> TaylorValue::order_row(int k) const {
    std::vector<double> row(static_cast<std::size_t>(ctx_->block_size(k)));
    for (int i = 0; i < ctx_->block_size(k); ++i)
        row[static_cast<std::size_t>(i)] = c_[static_cast<std::size_t>(ctx_->offset(k) + i)];
    return row;
}

TaylorValue JetContext::constant(double v) const {
    TaylorValue t(this);
    t.coefficients()[0] = v;
    return t;
}

TaylorValue JetContext::variable(int index, double base_value) const {
    TaylorValue t(this);
    t.coefficients()[0] = base_value;
    if (order_ >= 1) {
        MultiIndex mi(static_cast<std::size_t>(n_));
        mi[static_cast<std::size_t>(index)] = 1;
        t.coefficients()[static_cast<std::size_t>(offset(1) + lex_rank(mi))] = 1.0;
    }
    return t;
}

TaylorValue JetContext::add(const TaylorValue& a, const TaylorValue& b) const {
    TaylorValue t = a;
    for (std::size_t i = 0; i < t.coefficients().size(); ++i)
        t.coefficients()[i] += b.coefficients()[i];
    return t;
}

TaylorValue JetContext::sub(const TaylorValue& a, const TaylorValue& b) const {
    TaylorValue t = a;
    for (std::size_t i = 0; i < t.coefficients().size(); ++i)
        t.coefficients()[i] -= b.coefficients()[i];
    return t;
}

TaylorValue JetContext::scale(const TaylorValue& a, double s) const {
    TaylorValue t = a;
    for (auto& v : t.coefficients()) v *= s;
    return t;
}

TaylorValue JetContext::mul(const TaylorValue& a, const TaylorValue& b) const {
    TaylorValue t(this);
    const auto& ca = a.coefficients();
    const auto& cb = b.coefficients();
    auto& ct = t.coefficients();
    for (const auto& e : prod_table_) {
        double va = ca[static_cast<std::size_t>(e.ia)];
        if (va == 0.0) continue;
        double vb = cb[static_cast<std::size_t>(e.ib)];
        if (vb == 0.0) continue;
        ct[static_cast<std::size_t>(e.iout)] += e.weight * va * vb;
    }
    return t;
}

TaylorValue JetContext::compose(const TaylorValue& a, std::span<const double> outer) const {
    // f(u) = sum_m g_m / m! (u - u0)^m truncated at the jet order
    TaylorValue w = a;
    w.coefficients()[0] = 0.0;
    TaylorValue result = constant(outer[0]);
    TaylorValue power = constant(1.0);
    double inv_fact = 1.0;
    for (int m = 1; m <= order_; ++m) {
        power = mul(power, w);
        inv_fact /= m;
        if (outer[static_cast<std::size_t>(m)] == 0.0) continue;
        TaylorValue term = scale(power, outer[static_cast<std::size_t>(m)] * inv_fact);
        result = add(result, term);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Expression evaluation over jets

namespace {

class Evaluator {
public:
    Evaluator(const JetContext& ctx, std::span<const double> point, const ParamMap& params)
        : ctx_(ctx), point_(point), params_(params) {}

    TaylorValue eval(const Expression::Node& node) {
        switch (node.kind) {
            case NodeKind::number:
                return ctx_.constant(node.number);
            case NodeKind::variable:
                return ctx_.variable(node.var_index, point_[static_cast<std::size_t>(node.var_index)]);
            case NodeKind::parameter: {
                auto it = params_.find(node.name);
                if (it == params_.end())
                    throw EvalError("unbound parameter '" + node.name + "'", node.column);
                return ctx_.constant(it->second);
            }
            case NodeKind::negate:
                return ctx_.scale(eval(*node.lhs), -1.0);
            case NodeKind::add:
                return ctx_.add(eval(*node.lhs), eval(*node.rhs));
            case NodeKind::sub:
                return ctx_.sub(eval(*node.lhs), eval(*node.rhs));
            case NodeKind::mul:
                return ctx_.mul(eval(*node.lhs), eval(*node.rhs));
            case NodeKind::div: {
                TaylorValue num = eval(*node.lhs);
                TaylorValue den = eval(*node.rhs);
                if (den.value() == 0.0) throw EvalError("division by zero", node.column);
                return ctx_.mul(num, reciprocal(den));
            }
            case NodeKind::pow:
                return eval_pow(node);
            case NodeKind::call:
                return eval_call(node);
        }
        throw EvalError("corrupt expression tree", node.column);
    }

private:
    TaylorValue reciprocal(const TaylorValue& u) {
        int K = ctx_.order();
        std::vector<double> g(static_cast<std::size_t>(K) + 1);
        double u0 = u.value();
        double p = 1.0 / u0;
        double sign = 1.0;
        for (int m = 0; m <= K; ++m) {
            g[static_cast<std::size_t>(m)] = sign * static_cast<double>(factorial(m)) * p;
            p /= u0;
            sign = -sign;
        }
        return ctx_.compose(u, g);
    }

    TaylorValue integer_power(const TaylorValue& u, long long p, int column) {
        if (p == 0) return ctx_.constant(1.0);
        bool invert = p < 0;
        unsigned long long q = invert ? static_cast<unsigned long long>(-p) : static_cast<unsigned long long>(p);
        TaylorValue acc = ctx_.constant(1.0);
        TaylorValue base = u;
        while (q) {
            if (q & 1ull) acc = ctx_.mul(acc, base);
            q >>= 1;
            if (q) base = ctx_.mul(base, base);
        }
        if (invert) {
            if (acc.value() == 0.0) throw EvalError("zero raised to a negative power", column);
            acc = reciprocal(acc);
        }
        return acc;
    }

    TaylorValue eval_pow(const Expression::Node& node) {
        TaylorValue base = eval(*node.lhs);
        // constant exponent only: the grammar has no variable exponent use
        TaylorValue expo = eval(*node.rhs);
        for (int k = 1; k <= ctx_.order(); ++k)
            for (int i = 0; i < ctx_.block_size(k); ++i)
                if (expo.partial(k, i) != 0.0)
                    throw EvalError("exponent must not depend on variables", node.rhs->column);
        double p = expo.value();
        double rounded = std::round(p);
        if (std::abs(p - rounded) < 1e-12 && std::abs(rounded) <= 1024) {
            return integer_power(base, static_cast<long long>(rounded), node.column);
        }
        if (base.value() <= 0.0)
            throw EvalError("non-integer power of a non-positive base", node.column);
        // x^p = exp(p log x)
        TaylorValue lg = log_jet(base, node.column);
        return exp_jet(ctx_.scale(lg, p));
    }

    TaylorValue exp_jet(const TaylorValue& u) {
        int K = ctx_.order();
        std::vector<double> g(static_cast<std::size_t>(K) + 1, std::exp(u.value()));
        return ctx_.compose(u, g);
    }

    TaylorValue log_jet(const TaylorValue& u, int column) {
        if (u.value() <= 0.0) throw EvalError("log of a non-positive value", column);
        int K = ctx_.order();
        std::vector<double> g(static_cast<std::size_t>(K) + 1);
        g[0] = std::log(u.value());
        double p = 1.0 / u.value();
        double sign = 1.0;
        for (int m = 1; m <= K; ++m) {
            g[static_cast<std::size_t>(m)] = sign * static_cast<double>(factorial(m - 1)) * p;
            p /= u.value();
            sign = -sign;
        }
        return ctx_.compose(u, g);
    }

    TaylorValue eval_call(const Expression::Node& node) {
        TaylorValue u = eval(*node.lhs);
        int K = ctx_.order();
        std::vector<double> g(static_cast<std::size_t>(K) + 1);
        switch (node.fn) {
            case FnKind::sin: {
                double s = std::sin(u.value()), c = std::cos(u.value());
                const double cycle[4] = {s, c, -s, -c};
                for (int m = 0; m <= K; ++m) g[static_cast<std::size_t>(m)] = cycle[m % 4];
                break;
            }
            case FnKind::cos: {
                double s = std::sin(u.value()), c = std::cos(u.value());
                const double cycle[4] = {c, -s, -c, s};
                for (int m = 0; m <= K; ++m) g[static_cast<std::size_t>(m)] = cycle[m % 4];
                break;
            }
            case FnKind::exp:
                return exp_jet(u);
            case FnKind::log:
                return log_jet(u, node.column);
            case FnKind::sqrt: {
                if (u.value() < 0.0) throw EvalError("sqrt of a negative value", node.column);
                if (u.value() == 0.0) throw EvalError("sqrt jet at zero is singular", node.column);
                double r = std::sqrt(u.value());
                double coeff = 1.0;
                for (int m = 0; m <= K; ++m) {
                    g[static_cast<std::size_t>(m)] = coeff * r;
                    coeff *= (0.5 - m);
                    r /= u.value();
                }
                break;
            }
        }
        return ctx_.compose(u, g);
    }

    const JetContext& ctx_;
    std::span<const double> point_;
    const ParamMap& params_;
};

}  // namespace

TaylorValue eval_taylor(const Expression& expr, std::span<const double> point,
                        const JetContext& ctx, const ParamMap& params) {
    if (static_cast<int>(point.size()) != ctx.dim())
        throw std::invalid_argument("eval_taylor point dimension mismatch");
    Evaluator ev(ctx, point, params);
    return ev.eval(expr.root());
}

double eval_scalar(const Expression& expr, std::span<const double> point, const ParamMap& params) {
    JetContext ctx(static_cast<int>(point.size()), 0);
    return eval_taylor(expr, point, ctx, params).value();
}

std::vector<SymBlockD> field_blocks(const std::vector<Expression>& field,
                                    std::span<const double> point, int order,
                                    const ParamMap& params) {
    int n = static_cast<int>(field.size());
    if (static_cast<int>(point.size()) != n)
        throw std::invalid_argument("field_blocks dimension mismatch");
    JetContext ctx(n, order);
    std::vector<TaylorValue> jets;
    jets.reserve(static_cast<std::size_t>(n));
    for (const auto& component : field) jets.push_back(eval_taylor(component, point, ctx, params));

    std::vector<SymBlockD> blocks;
    blocks.reserve(static_cast<std::size_t>(order) + 1);
    SymBlockD a0(1, 0, n, n);
    for (int r = 0; r < n; ++r) a0(r, 0) = jets[static_cast<std::size_t>(r)].value();
    blocks.push_back(std::move(a0));
    for (int k = 1; k <= order; ++k) {
        SymBlockD ak(1, k, n, n);
        for (int r = 0; r < n; ++r) {
            auto row = jets[static_cast<std::size_t>(r)].order_row(k);
            for (int c = 0; c < ak.cols(); ++c) ak(r, c) = row[static_cast<std::size_t>(c)];
        }
        blocks.push_back(std::move(ak));
    }
    return blocks;
}

}  // namespace varjet
