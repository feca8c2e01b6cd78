#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exprjet.hpp"
#include "lve.hpp"
#include "symblock.hpp"

namespace varjet {

struct IntegrationError : std::runtime_error {
    enum class Reason { step_underflow, pivot_vanished, max_steps, bad_state };
    Reason reason;
    IntegrationError(Reason reason_, const std::string& what)
        : std::runtime_error(what), reason(reason_) {}
};

// Dense output of an adaptive Dormand-Prince 5(4) integration: one 4th-order
// interpolant per accepted step, valid on [t_begin, t_end].
class DenseOutput {
public:
    struct Segment {
        double t0 = 0.0, h = 0.0;
        std::vector<double> r1, r2, r3, r4, r5;
    };

    int dim() const { return dim_; }
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }

    void eval(double t, std::span<double> out) const;
    double eval_component(double t, int component) const;
    std::vector<double> eval(double t) const;

private:
    friend DenseOutput integrate_ode(const std::function<void(double, std::span<const double>, std::span<double>)>&,
                                     std::span<const double>, double, double, double, double,
                                     const std::function<void(double, std::span<const double>)>&);
    int dim_ = 0;
    double t_begin_ = 0.0, t_end_ = 0.0;
    std::vector<Segment> segments_;
};

using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;
using AcceptHook = std::function<void(double, std::span<const double>)>;

// Adaptive embedded RK 5(4) with dense output. Throws IntegrationError on
// step-size underflow or when the accept hook throws.
DenseOutput integrate_ode(const OdeRhs& rhs, std::span<const double> y0, double t0, double t1,
                          double rtol, double atol, const AcceptHook& on_accept = {});

// A parsed autonomous vector field with bound parameters.
struct SystemModel {
    int n = 0;
    std::vector<std::string> var_names;
    std::vector<Expression> field;
    ParamMap params;

    std::vector<double> value_at(std::span<const double> z) const;
    std::vector<SymBlockD> blocks_at(std::span<const double> z, int order) const;
};

// State slices exposed to the extra-state hook at every stage evaluation.
struct StageData {
    double t;
    std::span<const double> base;
    const std::vector<SymBlockD>& a_blocks;  // A_0..A_K at base
    const std::vector<SymBlockD>& y_blocks;  // Y_1..Y_K (dst order 1 blocks)
};

struct ExtraRhs {
    int size = 0;
    std::function<void(const StageData&, std::span<const double>, std::span<double>)> rhs;
};

// One augmented integration: base solution, variational blocks Y_1..Y_K with
// principal initial data, and optional extra accumulators, all under a single
// error control. Pivot validity (X_i(phi) != 0, no sign change) is enforced
// at every accepted step when pivot0 >= 0.
class TransportSession {
public:
    TransportSession(SystemModel model, std::span<const double> z0, double t0, double t1,
                     int order, double rtol, double atol, int pivot0 = -1,
                     const ExtraRhs& extra = {});

    const SystemModel& model() const { return model_; }
    int dim() const { return model_.n; }
    int order() const { return order_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    int pivot() const { return pivot0_; }
    const DenseOutput& dense() const { return dense_; }

    std::vector<double> base_at(double t) const;
    double pivot_coordinate_at(double t) const;
    SymBlockD y_block_at(double t, int k) const;
    MatD y1_at(double t) const;
    std::vector<double> extra_at(double t) const;

    // Upsilon_K(t) assembled from the strip exponential of Y_1..Y_K
    TriangularTruncationD upsilon_at(double t) const;

    std::vector<SymBlockD> a_blocks_at(double t, int order) const;

    int base_offset() const { return 0; }
    int y_offset(int k) const { return y_offsets_[static_cast<std::size_t>(k)]; }
    int extra_offset() const { return extra_offset_; }

private:
    SystemModel model_;
    int order_;
    double t0_, t1_;
    int pivot0_;
    std::vector<int> y_offsets_;  // y_offsets_[k] for k = 1..K
    int extra_offset_ = 0;
    int state_size_ = 0;
    DenseOutput dense_;
};

// Base-only trajectory (order 0) with pivot tracking.
TransportSession integrate_base(SystemModel model, std::span<const double> z0, double t0,
                                double t1, double rtol, double atol, int pivot0 = -1);

// Quadrature along an existing trajectory: accumulates either
// integral g dt or integral g dx (x the pivot coordinate, dx = X_i dt).
enum class QuadratureVariable { time, pivot };

std::vector<double> path_quadrature(const TransportSession& traj,
                                    const std::function<std::vector<double>(double)>& integrand,
                                    int integrand_size, QuadratureVariable variable,
                                    double rtol = 1e-10, double atol = 1e-12);

}  // namespace varjet
