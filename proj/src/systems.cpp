#include "systems.hpp"

#include <array>
#include <cmath>

namespace varjet {

namespace {

void apply_overrides(ParamMap& params, const ParamMap& overrides,
                     const std::vector<ParamSpec>& schema, const std::string& name) {
    for (const auto& [key, value] : overrides) {
        bool known = false;
        for (const auto& spec : schema) known = known || spec.name == key;
        if (!known) throw ConfigError("unknown parameter '" + key + "' for builtin '" + name + "'");
        params[key] = value;
    }
}

// 1-D jet of an expression of x to second order: value, d/dx, d^2/dx^2
struct Curve {
    Expression expr;
    ParamMap params;
    std::array<double, 3> jet(double x) const {
        JetContext ctx(1, 2);
        std::vector<double> pt{x};
        TaylorValue t = eval_taylor(expr, pt, ctx, params);
        return {t.partial(0, 0), t.partial(1, 0), t.partial(2, 0)};
    }
};

Curve make_curve(const std::string& text, const ParamMap& params) {
    std::set<std::string> names;
    for (const auto& [k, v] : params) names.insert(k);
    return Curve{parse(text, {"x"}, names), params};
}

const char* kDixonG3 = "(1-x)^(1/alpha-2)*(2*alpha+(alpha-2)*x-1)/(alpha-2)";
const char* kDixonG5 =
    "-(1-x)^(1/alpha-3)*(-(alpha-2)*x*((alpha-2)*(3*alpha-4)*x+alpha*(39*alpha-55)+14)"
    "+alpha*(2*(53-24*alpha)*alpha-73)+16)/((alpha-2)^2*(3*alpha-4))";

}  // namespace

SystemModel BuiltinSystem::model() const {
    SystemModel m;
    m.n = n;
    m.var_names = var_names;
    std::set<std::string> pnames;
    for (const auto& [k, v] : params) pnames.insert(k);
    for (const auto& e : field_exprs) m.field.push_back(parse(e, var_names, pnames));
    m.params = params;
    return m;
}

std::vector<JetSeed> BuiltinSystem::seeds(std::span<const double> z0, int order,
                                          bool normalize) const {
    std::vector<JetSeed> out;
    for (int row = 0; row < n; ++row) {
        if (row == pivot0) continue;
        JetSeed seed;
        seed.row = row;
        out.push_back(seed);
    }
    if (!normalize) return out;

    if (name == "dixon") {
        double alpha = params.at("alpha");
        double x0 = z0[0];
        out[0].scale = std::pow(1 - x0, 1 / alpha - 1);
        if (order >= 3) {
            std::vector<double> a3(static_cast<std::size_t>(dim_sym(2, 3)), 0.0);
            a3.back() = make_curve(kDixonG3, params).jet(x0)[0];
            out[0].anchors[3] = std::move(a3);
        }
        if (order >= 5) {
            std::vector<double> a5(static_cast<std::size_t>(dim_sym(2, 5)), 0.0);
            a5.back() = make_curve(kDixonG5, params).jet(x0)[0];
            out[0].anchors[5] = std::move(a5);
        }
    } else if (name == "sir_gamma0") {
        double beta = params.at("beta"), mu = params.at("mu"), nn = params.at("n");
        double x0 = z0[0];
        out[0].scale = 1.0 / std::sqrt(x0);  // the y-row seed
        if (order >= 3 && beta != mu) {
            std::vector<double> a3(static_cast<std::size_t>(dim_sym(3, 3)), 0.0);
            a3[static_cast<std::size_t>(lex_rank(MultiIndex{0, 3, 0}))] =
                3 * (-mu * std::pow(x0, -beta / mu) + beta - mu) / ((beta - mu) * nn * std::sqrt(x0));
            out[0].anchors[3] = std::move(a3);
        }
    } else if (name == "vanderpol") {
        out[0].scale = std::exp(z0[0]);
    }
    // sir_mu0 carries no recorded normalization
    return out;
}

int BuiltinSystem::reference_order(int seed) const {
    if (name == "dixon" && seed == 0) return 5;
    if (name == "sir_gamma0") return 3;
    return 0;
}

std::vector<std::vector<double>> BuiltinSystem::reference_rows(int seed, double x,
                                                               int order) const {
    if (order > reference_order(seed)) throw std::out_of_range("no reference jets at this order");
    std::vector<std::vector<double>> rows;
    if (name == "dixon") {
        double alpha = params.at("alpha");
        if (alpha == 2.0 || 3 * alpha == 4.0)
            throw ConfigError("dixon reference jets are singular at alpha = 2 and alpha = 4/3");
        auto e1 = make_curve("(1-x)^(1/alpha-1)", params).jet(x);
        auto e2 = make_curve("(alpha-1)/alpha*(1-x)^(1/alpha-2)", params).jet(x);
        auto e3 = make_curve("(1/alpha-2)*(1/alpha-1)*(1-x)^(1/alpha-3)", params).jet(x);
        auto g3 = make_curve(kDixonG3, params).jet(x);
        auto g5 = make_curve(kDixonG5, params).jet(x);
        if (order >= 1) rows.push_back({0.0, e1[0]});
        if (order >= 2) rows.push_back({0.0, e2[0], 0.0});
        if (order >= 3) rows.push_back({0.0, e3[0], 0.0, g3[0]});
        if (order >= 4) rows.push_back({0.0, e3[1], 0.0, g3[1], 0.0});
        if (order >= 5) rows.push_back({0.0, e3[2], 0.0, g3[2], 0.0, g5[0]});
        return rows;
    }
    if (name == "sir_gamma0") {
        double beta = params.at("beta"), mu = params.at("mu"), nn = params.at("n");
        if (seed == 0) {
            if (beta == mu) throw ConfigError("sir_gamma0 reference jets need beta != mu");
            if (order >= 1) rows.push_back({0.0, 1.0 / std::sqrt(x), 0.0});
            if (order >= 2) {
                std::vector<double> f2(static_cast<std::size_t>(dim_sym(3, 2)), 0.0);
                f2[static_cast<std::size_t>(lex_rank(MultiIndex{1, 1, 0}))] =
                    -1.0 / (2 * std::pow(x, 1.5));
                rows.push_back(std::move(f2));
            }
            if (order >= 3) {
                std::vector<double> f3(static_cast<std::size_t>(dim_sym(3, 3)), 0.0);
                f3[static_cast<std::size_t>(lex_rank(MultiIndex{2, 1, 0}))] =
                    3.0 / (4 * std::pow(x, 2.5));
                f3[static_cast<std::size_t>(lex_rank(MultiIndex{0, 3, 0}))] =
                    3 * (-mu * std::pow(x, -beta / mu) + beta - mu) /
                    ((beta - mu) * nn * std::sqrt(x));
                rows.push_back(std::move(f3));
            }
        } else {
            // g = z: the coordinate row and nothing else
            if (order >= 1) rows.push_back({0.0, 0.0, 1.0});
            for (int k = 2; k <= order; ++k)
                rows.emplace_back(static_cast<std::size_t>(dim_sym(3, k)), 0.0);
        }
        return rows;
    }
    throw std::out_of_range("no reference jets recorded");
}

std::vector<std::string> builtin_names() { return {"dixon", "sir_gamma0", "sir_mu0", "vanderpol"}; }

const std::vector<ParamSpec>& builtin_schema(const std::string& name) {
    static const std::vector<ParamSpec> dixon{{"alpha", 3.0, "alpha > 0, alpha != 1"}};
    static const std::vector<ParamSpec> sir_gamma0{{"beta", 2.0, "beta != 0"},
                                                   {"mu", 1.0, "mu != 0"},
                                                   {"n", 1.0, "n > 0"}};
    static const std::vector<ParamSpec> sir_mu0{{"gamma", 1.0, "gamma != 0"},
                                                {"n", 1.0, "n > 0"}};
    static const std::vector<ParamSpec> vanderpol{{"mu", 2.0, "fixed at 2"}};
    if (name == "dixon") return dixon;
    if (name == "sir_gamma0") return sir_gamma0;
    if (name == "sir_mu0") return sir_mu0;
    if (name == "vanderpol") return vanderpol;
    throw ConfigError("unknown builtin '" + name + "'");
}

BuiltinSystem make_builtin(const std::string& name, const ParamMap& overrides) {
    BuiltinSystem b;
    b.name = name;
    b.schema = builtin_schema(name);
    for (const auto& spec : b.schema) b.params[spec.name] = spec.default_value;
    apply_overrides(b.params, overrides, b.schema, name);

    if (name == "dixon") {
        double alpha = b.params.at("alpha");
        if (alpha <= 0.0) throw ConfigError("dixon requires alpha > 0");
        if (alpha == 1.0) throw ConfigError("dixon with alpha = 1 is explicitly solvable and not supported");
        b.n = 2;
        b.var_names = {"x", "y"};
        b.field_exprs = {"alpha*x*(1 - x*cos(y))", "-(alpha-1)*x*sin(y)"};
        b.default_state = {0.5, 0.0};
        b.default_t_end = 2.0;
        b.pivot0 = 0;
        b.closed_form_state = std::vector<double>{0.5, 1.3};
        b.closed_form_t_end = 0.5;
        double a = alpha;
        b.closed_forms.push_back(
            {"hypergeometric", [a](std::span<const double> z) {
                 double x = z[0], y = z[1];
                 double c = std::cos(y), s = std::sin(y);
                 return x * std::pow(s, a / (1 - a)) -
                        (a * c / (a - 1)) * hyp2f1(0.5, a / (2 * (a - 1)) + 1, 1.5, c * c);
             }});
        b.original_vars = {"u", "v"};
        b.untransform_exprs = {"sin(y)/x", "cos(y)/x"};
        b.original_field_exprs = {"u*v/(u^2+v^2) - alpha*u",
                                  "v^2/(u^2+v^2) - alpha*v + alpha - 1"};
    } else if (name == "sir_gamma0") {
        double beta = b.params.at("beta"), mu = b.params.at("mu"), nn = b.params.at("n");
        if (beta == 0.0 || mu == 0.0) throw ConfigError("sir_gamma0 requires beta != 0 and mu != 0");
        if (nn <= 0.0) throw ConfigError("sir_gamma0 requires n > 0");
        b.n = 3;
        b.var_names = {"x", "y", "z"};
        b.field_exprs = {"-(mu*x*(y^2*(x^(-beta/mu)+1)+n))/n", "-mu*y/2", "0"};
        b.default_state = {1.0, 0.0, 0.0};
        b.default_t_end = 1.5;
        b.pivot0 = 0;
        // y0 kept small: larger transverse data drives x into the x = 0
        // singularity of the field before the arc ends
        b.closed_form_state = std::vector<double>{1.0, 0.25, 0.3};
        b.closed_form_t_end = 1.0;
        double u = beta / mu;
        b.closed_forms.push_back(
            {"incomplete-gamma", [u, nn](std::span<const double> z) {
                 double x = z[0], y = z[1];
                 double w = u * y * y / nn;
                 double bracket = std::exp(w) * std::pow(w, u) * upper_inc_gamma(1 - u, w) +
                                  std::pow(x, u);
                 return y * std::exp(y * y / (2 * nn)) / std::pow(bracket, 1 / (2 * u));
             }});
        b.closed_forms.push_back({"coordinate", [](std::span<const double> z) { return z[2]; }});
        b.original_vars = {"S", "I", "R"};
        b.untransform_exprs = {"y^2*(x^(-beta/mu)+1)+n", "-x^(-beta/mu)*y^2", "y^2*z"};
        b.original_field_exprs = {"mu*(n-S) - beta*S*I/n", "beta*S*I/n - I*mu", "-mu*R"};
    } else if (name == "sir_mu0") {
        double gamma = b.params.at("gamma"), nn = b.params.at("n");
        if (gamma == 0.0) throw ConfigError("sir_mu0 requires gamma != 0");
        if (nn <= 0.0) throw ConfigError("sir_mu0 requires n > 0");
        b.n = 3;
        b.var_names = {"x", "y", "z"};
        b.field_exprs = {"gamma - gamma*(x-1)*x*y", "gamma*x*y^2", "-y"};
        b.default_state = {0.5, 0.0, 0.0};
        b.default_t_end = 1.5;
        b.pivot0 = 0;
        b.closed_form_state = std::vector<double>{0.5, 0.3, 0.2};
        b.closed_form_t_end = 1.5;
        double g = gamma;
        b.closed_forms.push_back({"log-sum", [](std::span<const double> z) {
                                      double x = z[0], y = z[1];
                                      return -x * y + std::log(x * y + 1) + y;
                                  }});
        b.closed_forms.push_back({"log-coordinate", [g](std::span<const double> z) {
                                      double x = z[0], y = z[1];
                                      return std::log(x * y + 1) / g + z[2];
                                  }});
        b.original_vars = {"S", "I", "R"};
        b.untransform_exprs = {"n*(1 + x*y)", "-n*y", "gamma*n*z"};
        b.original_field_exprs = {"-gamma*S*I/n", "gamma*S*I/n - gamma*I", "gamma*I"};
    } else if (name == "vanderpol") {
        double mu = b.params.at("mu");
        if (mu != 2.0)
            throw ConfigError("vanderpol: the transformed field is derived at mu = 2; other values carry no data");
        b.n = 2;
        b.var_names = {"x", "y"};
        b.field_exprs = {"-(x-1)*x^3*y^2 - 1", "(x-1)*x^2*y^3 + y"};
        b.default_state = {2.0, 0.0};
        b.default_t_end = 1.0;
        b.pivot0 = 0;
        b.original_vars = {"u", "v"};
        b.untransform_exprs = {"x*y/sqrt(2)", "(x/sqrt(2) - 1/sqrt(2))*y"};
        b.original_field_exprs = {"v", "2*(1 - u^2)*v - u"};
    } else {
        throw ConfigError("unknown builtin '" + name + "'");
    }
    return b;
}

std::vector<double> closed_form_values(const BuiltinSystem& system, std::span<const double> state) {
    std::vector<double> out;
    out.reserve(system.closed_forms.size());
    for (const auto& cf : system.closed_forms) out.push_back(cf.value(state));
    return out;
}

}  // namespace varjet
