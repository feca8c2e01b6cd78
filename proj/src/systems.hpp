#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "firstint.hpp"
#include "transport.hpp"

namespace varjet {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Gaussian hypergeometric function by power series; requires |z| < 1 and c
// not a non-positive integer. Term-ratio stopping at relative 1e-14.
double hyp2f1(double a, double b, double c, double z);

// Upper incomplete gamma Gamma(s, x), x > 0, any real s. Series / continued
// fraction split at x = s + 1, downward recurrence for s <= 0, exponential
// integral path at s = 0.
double upper_inc_gamma(double s, double x);

// Adaptive Simpson quadrature (used by the van der Pol recursion and reused
// by verification code).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12);

// One coefficient function g_k of the van der Pol series sum g_k(x) y^k / k!,
// with enough structure to drive the recursion: value and derivative.
struct VdpG {
    int k = 0;
    double x0 = 0.0;
    std::function<double(double)> value;
    std::function<double(double)> deriv;
};

// g_1 = e^x (derivative e^x); the seed of the recursion.
VdpG vdp_g1(double x0);

// g_k from g_{k-2} via the quadrature formula
//   g_k(x) = e^{kx} int_{x0}^x (k-1)k (xi-1) xi^2 e^{-k xi}
//            [(k-2) g_{k-2}(xi) - xi g'_{k-2}(xi)] d xi         (k odd >= 3);
// even k yields the zero function.
VdpG vdp_g_step(const VdpG& g_km2, int k);

// ---------------------------------------------------------------------------
// Built-in systems

struct ParamSpec {
    std::string name;
    double default_value;
    std::string constraint;  // human-readable
};

struct ClosedForm {
    std::string label;
    std::function<double(std::span<const double>)> value;  // in transformed coordinates
};

struct BuiltinSystem {
    std::string name;
    int n = 0;
    std::vector<std::string> var_names;
    std::vector<std::string> field_exprs;
    ParamMap params;
    std::vector<ParamSpec> schema;

    std::vector<double> default_state;
    double default_t0 = 0.0;
    double default_t_end = 0.0;
    int pivot0 = 0;

    // arc on which the closed forms are numerically constant (kept inside the
    // special-function domains; not the jet arc)
    std::optional<std::vector<double>> closed_form_state;
    std::optional<double> closed_form_t_end;
    std::vector<ClosedForm> closed_forms;

    // change of variables back to the original coordinates, and the original
    // field, for the chain-rule round-trip check
    std::vector<std::string> original_vars;
    std::vector<std::string> untransform_exprs;   // original coords as functions of transformed
    std::vector<std::string> original_field_exprs;

    SystemModel model() const;

    // seeds of the progressive recursion for a given initial state; when
    // normalized, the recorded scale and integration-constant anchors that
    // reproduce the worked examples are applied
    std::vector<JetSeed> seeds(std::span<const double> z0, int order, bool normalize) const;

    // recorded reference jet rows for seed `seed` at pivot coordinate x,
    // available up to reference_order(seed); empty when none are recorded
    int reference_order(int seed) const;
    std::vector<std::vector<double>> reference_rows(int seed, double x, int order) const;
};

std::vector<std::string> builtin_names();
const std::vector<ParamSpec>& builtin_schema(const std::string& name);
BuiltinSystem make_builtin(const std::string& name, const ParamMap& overrides);

// Values of every closed form along a state (transformed coordinates).
std::vector<double> closed_form_values(const BuiltinSystem& system, std::span<const double> state);

}  // namespace varjet
