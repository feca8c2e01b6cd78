#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lve.hpp"
#include "symblock.hpp"
#include "transport.hpp"

namespace varjet {

struct InfeasibleConstraintError : std::runtime_error {
    int order;
    double residual;
    InfeasibleConstraintError(int order_, double residual_)
        : std::runtime_error("integration-constant constraint infeasible at order " +
                             std::to_string(order_) + " (residual " + std::to_string(residual_) + ")"),
          order(order_),
          residual(residual_) {}
};

// F_1 = Id_n - (X0 (x) e_i^T) / X0_i; rank n-1, annihilates X0.
SymBlockD filter_degree_one(std::span<const double> x0, int pivot0);

// ---------------------------------------------------------------------------
// Scalar-row jet algebra (products, powers, reciprocals of truncated jets)

struct ScalarJet {
    int n = 0;
    int order = 0;
    double value = 0.0;                     // f^(0)
    std::vector<std::vector<double>> rows;  // rows[k-1] = f^(k), length d_{n,k}
};

ScalarJet jet_product(const ScalarJet& f, const ScalarJet& g);
ScalarJet jet_power(const ScalarJet& f, int k);
ScalarJet jet_reciprocal(const ScalarJet& f);  // requires f.value != 0

// true when `row` lies in the linear span of `basis` (infinity-norm residual
// of the least-squares projection below tol * scale)
bool row_in_span(std::span<const double> row, const std::vector<std::vector<double>>& basis,
                 double tol = 1e-8);

// Spanning set of the order-k redundancy directions: symmetric products of
// lower-order jet rows across all seeds (valuation-1 jets, so products of
// m >= 2 rows whose orders partition k). seed_rows[s][k-1] is the order-k
// row of seed s.
std::vector<std::vector<double>> product_span_rows(
    const std::vector<std::vector<std::vector<double>>>& seed_rows, int n, int k);

// ---------------------------------------------------------------------------
// Progressive jet computation (one trajectory, one augmented integration)

struct JetSeed {
    int row = 0;       // F_1 row index, 0-based, must differ from the pivot
    double scale = 1.0;
    // additive kernel-direction components of V_k(t0), keyed by order k >= 2;
    // each vector has length d_{n,k}. Components outside ker(A_0 (x) Id^{k-1})^T
    // are projected away.
    std::map<int, std::vector<double>> anchors;
};

struct AdmissibilityReport {
    std::vector<double> sample_times;
    std::vector<double> kernel_residual_max;      // per order k = 1..K, max over samples
    std::vector<double> kernel_residual_rel_max;  // residual / max(1, term scale)
    std::vector<double> dual_fd_rel_max;          // per order, max relative FD defect
    bool admissible(double kernel_tol, double fd_tol) const;
};

struct ConstancyResult {
    std::vector<double> epsilons;
    std::vector<double> drifts;  // max_t |F(t) - F(t0)| per epsilon
    double slope = 0.0;          // least-squares log-log slope
};

class JetPipeline {
public:
    JetPipeline(SystemModel model, std::span<const double> z0, double t0, double t1, int order,
                int pivot0, double rtol, double atol, std::vector<JetSeed> seeds);

    int order() const { return order_; }
    int dim() const { return session_->dim(); }
    int num_seeds() const { return static_cast<int>(seeds_.size()); }
    int pivot() const { return pivot0_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    const TransportSession& session() const { return *session_; }
    const SymBlockD& degree_one_filter() const { return f1_; }

    // jet row f_k(t) (length d_{n,k})
    std::vector<double> row_at(int seed, int k, double t) const;
    std::vector<std::vector<double>> rows_at(int seed, double t) const;
    const std::vector<double>& constant(int seed, int k) const;  // V_k(t0)
    double constraint_residual(int seed, int k) const;

    AdmissibilityReport admissibility_check(int seed, int num_samples = 10,
                                            double fd_step = 1e-5) const;

    // f0 + sum_k 1/k! f_k(t) xi^{(x)k}
    double evaluate_truncated(int seed, double t, std::span<const double> xi, double f0 = 0.0) const;

    ConstancyResult constancy_scaling(int seed, std::span<const double> direction,
                                      std::span<const double> eps_ladder, int num_samples = 33,
                                      double rtol = 1e-12, double atol = 1e-14) const;

private:
    std::vector<double> extra_at(double t) const;

    int order_;
    int pivot0_;
    double t0_, t1_;
    std::vector<JetSeed> seeds_;
    SymBlockD f1_;
    // per seed, per order k (index k-1): V_k(t0); constants_[seed][0] is V_1(t0)
    std::vector<std::vector<std::vector<double>>> constants_;
    std::vector<std::vector<double>> constraint_residuals_;  // per seed, orders 2..K
    std::vector<int> acc_offsets_;                           // accumulator layout per seed/order
    std::optional<TransportSession> session_;
};

// ---------------------------------------------------------------------------
// Quadrature-free filter blocks and the identities proven at t0

struct ConjectureReport {
    int order = 0;
    int dim = 0;
    double pivot_value = 0.0;
    std::vector<SymBlockD> filter_blocks;     // F_1 .. F_K
    std::vector<double> ukk_residual;         // per k = 1..K
    std::vector<double> hyp_residual;         // per k = 1..K
    std::vector<double> uk_route_discrepancy; // product form vs sum form, per k
    std::vector<double> uk_imag_max;          // imaginary residue of the cyclotomic route
};

// Builds U_k both ways (cyclotomic product over roots of unity, and the
// Id/F_1 power sum), the filter blocks F_k, and the residuals of the
// identities that hold at t0. a_blocks = A_0..A_{K-1} at t0.
ConjectureReport conjecture_filter(std::span<const SymBlockD> a_blocks, int pivot0, int order);

// Measured (not asserted) filtering quality away from t0: max kernel-condition
// residual over the nonzero rows of the bottom block of Phi_K Upsilon_K^{-1}(t).
std::vector<double> conjecture_away_residuals(const TransportSession& session,
                                              const ConjectureReport& report,
                                              std::span<const double> times);

}  // namespace varjet
