#include "transport.hpp"

#include <algorithm>
#include <cmath>

namespace varjet {

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the standard 4th-order dense output

namespace {

constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784,
                 A76 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double D1 = -12715105075.0 / 11282082432.0, D3 = 87487479700.0 / 32700410799.0,
                 D4 = -10690763975.0 / 1880347072.0, D5 = 701980252875.0 / 199316789632.0,
                 D6 = -1453857185.0 / 822651844.0, D7 = 69997945.0 / 29380423.0;

}  // namespace

void DenseOutput::eval(double t, std::span<double> out) const {
    if (segments_.empty()) throw std::logic_error("dense output is empty");
    double lo = std::min(t_begin_, t_end_), hi = std::max(t_begin_, t_end_);
    double tol = 1e-9 * (1.0 + hi - lo);
    if (t < lo - tol || t > hi + tol) throw std::out_of_range("dense output evaluated outside the span");
    // binary search for the segment containing t (segments in march order)
    std::size_t lo_i = 0, hi_i = segments_.size() - 1;
    bool forward = t_end_ >= t_begin_;
    while (lo_i < hi_i) {
        std::size_t mid = (lo_i + hi_i) / 2;
        double seg_end = segments_[mid].t0 + segments_[mid].h;
        bool before = forward ? (t <= seg_end) : (t >= seg_end);
        if (before)
            hi_i = mid;
        else
            lo_i = mid + 1;
    }
    const Segment& s = segments_[lo_i];
    double theta = (t - s.t0) / s.h;
    double theta1 = 1.0 - theta;
    for (int i = 0; i < dim_; ++i) {
        std::size_t ii = static_cast<std::size_t>(i);
        out[ii] = s.r1[ii] +
                  theta * (s.r2[ii] + theta1 * (s.r3[ii] + theta * (s.r4[ii] + theta1 * s.r5[ii])));
    }
}

double DenseOutput::eval_component(double t, int component) const {
    std::vector<double> buf(static_cast<std::size_t>(dim_));
    eval(t, buf);
    return buf[static_cast<std::size_t>(component)];
}

std::vector<double> DenseOutput::eval(double t) const {
    std::vector<double> buf(static_cast<std::size_t>(dim_));
    eval(t, buf);
    return buf;
}

DenseOutput integrate_ode(const OdeRhs& rhs, std::span<const double> y0, double t0, double t1,
                          double rtol, double atol, const AcceptHook& on_accept) {
    const int n = static_cast<int>(y0.size());
    DenseOutput dense;
    dense.dim_ = n;
    dense.t_begin_ = t0;
    dense.t_end_ = t1;
    if (t1 == t0) return dense;

    const double direction = t1 > t0 ? 1.0 : -1.0;
    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

    auto stage = [&](double t, const std::vector<double>& yy, std::vector<double>& out) {
        rhs(t, yy, out);
        for (double v : out)
            if (!std::isfinite(v))
                throw IntegrationError(IntegrationError::Reason::bad_state,
                                       "non-finite derivative at t = " + std::to_string(t));
    };

    stage(t0, y, k1);

    // initial step size heuristic
    double h;
    {
        double d0 = 0, d1 = 0;
        for (int i = 0; i < n; ++i) {
            double sk = atol + rtol * std::abs(y[static_cast<std::size_t>(i)]);
            d0 = std::max(d0, std::abs(y[static_cast<std::size_t>(i)]) / sk);
            d1 = std::max(d1, std::abs(k1[static_cast<std::size_t>(i)]) / sk);
        }
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, std::abs(t1 - t0));
        h *= direction;
    }

    double t = t0;
    const double hmin = 1e-14 * std::max(1.0, std::abs(t1 - t0));
    long steps = 0;
    const long max_steps = 2000000;

    while (direction * (t1 - t) > 0) {
        if (++steps > max_steps)
            throw IntegrationError(IntegrationError::Reason::max_steps, "step limit exceeded");
        if (direction * (t + h - t1) > 0) h = t1 - t;
        if (std::abs(h) < hmin)
            throw IntegrationError(IntegrationError::Reason::step_underflow,
                                   "step size underflow at t = " + std::to_string(t));

        for (int i = 0; i < n; ++i)
            ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * A21 * k1[static_cast<std::size_t>(i)];
        stage(t + C2 * h, ytmp, k2);
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            ytmp[ii] = y[ii] + h * (A31 * k1[ii] + A32 * k2[ii]);
        }
        stage(t + C3 * h, ytmp, k3);
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            ytmp[ii] = y[ii] + h * (A41 * k1[ii] + A42 * k2[ii] + A43 * k3[ii]);
        }
        stage(t + C4 * h, ytmp, k4);
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            ytmp[ii] = y[ii] + h * (A51 * k1[ii] + A52 * k2[ii] + A53 * k3[ii] + A54 * k4[ii]);
        }
        stage(t + C5 * h, ytmp, k5);
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            ytmp[ii] = y[ii] + h * (A61 * k1[ii] + A62 * k2[ii] + A63 * k3[ii] + A64 * k4[ii] + A65 * k5[ii]);
        }
        stage(t + h, ytmp, k6);
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            ynew[ii] = y[ii] + h * (A71 * k1[ii] + A73 * k3[ii] + A74 * k4[ii] + A75 * k5[ii] + A76 * k6[ii]);
        }
        stage(t + h, ynew, k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            std::size_t ii = static_cast<std::size_t>(i);
            yerr[ii] = h * (E1 * k1[ii] + E3 * k3[ii] + E4 * k4[ii] + E5 * k5[ii] + E6 * k6[ii] + E7 * k7[ii]);
            double sk = atol + rtol * std::max(std::abs(y[ii]), std::abs(ynew[ii]));
            double e = yerr[ii] / sk;
            err += e * e;
        }
        err = std::sqrt(err / n);

        if (err <= 1.0) {
            DenseOutput::Segment seg;
            seg.t0 = t;
            seg.h = h;
            seg.r1.assign(y.begin(), y.end());
            seg.r2.resize(static_cast<std::size_t>(n));
            seg.r3.resize(static_cast<std::size_t>(n));
            seg.r4.resize(static_cast<std::size_t>(n));
            seg.r5.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                std::size_t ii = static_cast<std::size_t>(i);
                double ydiff = ynew[ii] - y[ii];
                double bspl = h * k1[ii] - ydiff;
                seg.r2[ii] = ydiff;
                seg.r3[ii] = bspl;
                seg.r4[ii] = ydiff - h * k7[ii] - bspl;
                seg.r5[ii] = h * (D1 * k1[ii] + D3 * k3[ii] + D4 * k4[ii] + D5 * k5[ii] +
                                  D6 * k6[ii] + D7 * k7[ii]);
            }
            dense.segments_.push_back(std::move(seg));
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            if (on_accept) on_accept(t, y);
        }

        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, 10.0);
        h *= fac;
    }
    dense.t_end_ = t;
    return dense;
}

// ---------------------------------------------------------------------------
// System model

std::vector<double> SystemModel::value_at(std::span<const double> z) const {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = eval_scalar(field[static_cast<std::size_t>(i)], z, params);
    return v;
}

std::vector<SymBlockD> SystemModel::blocks_at(std::span<const double> z, int order) const {
    return field_blocks(field, z, order, params);
}

// ---------------------------------------------------------------------------
// Augmented variational transport

namespace {

struct Layout {
    int n = 0, order = 0;
    std::vector<int> y_offsets;
    int extra_offset = 0;
    int total = 0;
};

Layout make_layout(int n, int order, int extra) {
    Layout l;
    l.n = n;
    l.order = order;
    l.y_offsets.resize(static_cast<std::size_t>(order) + 1, 0);
    int off = n;
    for (int k = 1; k <= order; ++k) {
        l.y_offsets[static_cast<std::size_t>(k)] = off;
        off += n * static_cast<int>(dim_sym(n, k));
    }
    l.extra_offset = off;
    l.total = off + extra;
    return l;
}

std::vector<SymBlockD> unpack_y(std::span<const double> state, const Layout& l) {
    std::vector<SymBlockD> y;
    y.reserve(static_cast<std::size_t>(l.order) + 1);
    y.emplace_back(1, 0, l.n, l.n);  // unused placeholder at index 0
    for (int k = 1; k <= l.order; ++k) {
        SymBlockD b(1, k, l.n, l.n);
        int off = l.y_offsets[static_cast<std::size_t>(k)];
        for (int r = 0; r < l.n; ++r)
            for (int c = 0; c < b.cols(); ++c) b(r, c) = state[static_cast<std::size_t>(off + r * b.cols() + c)];
        y.push_back(std::move(b));
    }
    return y;
}

}  // namespace

TransportSession::TransportSession(SystemModel model, std::span<const double> z0, double t0,
                                   double t1, int order, double rtol, double atol, int pivot0,
                                   const ExtraRhs& extra)
    : model_(std::move(model)), order_(order), t0_(t0), t1_(t1), pivot0_(pivot0) {
    const int n = model_.n;
    Layout layout = make_layout(n, order, extra.size);
    y_offsets_ = layout.y_offsets;
    extra_offset_ = layout.extra_offset;
    state_size_ = layout.total;

    std::vector<double> y0(static_cast<std::size_t>(layout.total), 0.0);
    std::copy(z0.begin(), z0.end(), y0.begin());
    if (order >= 1) {
        // Y_1(t0) = Id, Y_k(t0) = 0 for k >= 2
        int off = layout.y_offsets[1];
        for (int i = 0; i < n; ++i) y0[static_cast<std::size_t>(off + i * n + i)] = 1.0;
    }

    double pivot_sign = 0.0;
    if (pivot0_ >= 0) {
        auto x0 = model_.value_at(z0);
        double p = x0[static_cast<std::size_t>(pivot0_)];
        if (p == 0.0)
            throw IntegrationError(IntegrationError::Reason::pivot_vanished,
                                   "pivot component X_" + std::to_string(pivot0_ + 1) +
                                       " vanishes at the initial state");
        pivot_sign = p > 0 ? 1.0 : -1.0;
    }

    OdeRhs rhs = [this, layout, &extra](double t, std::span<const double> state, std::span<double> dstate) {
        const int n_ = layout.n;
        std::span<const double> base = state.subspan(0, static_cast<std::size_t>(n_));
        auto a_blocks = model_.blocks_at(base, layout.order);
        // base flow
        for (int i = 0; i < n_; ++i) dstate[static_cast<std::size_t>(i)] = a_blocks[0](i, 0);
        std::vector<SymBlockD> y_blocks;
        if (layout.order >= 1) {
            y_blocks = unpack_y(state, layout);
            // strip exponential blocks Z_{j,k} of the current Y give the
            // echeloned right-hand side dY_k = sum_j A_j Z_{j,k}
            JetStripD strip;
            strip.order = layout.order;
            strip.dst_order = 1;
            strip.blocks = y_blocks;
            TriangularTruncationD z = sym_exp_strip(strip, layout.order);
            for (int k = 1; k <= layout.order; ++k) {
                MatD dy(n_, static_cast<int>(dim_sym(n_, k)));
                for (int j = 1; j <= k; ++j) dy += a_blocks[static_cast<std::size_t>(j)].entries * z.at(j, k).entries;
                int off = layout.y_offsets[static_cast<std::size_t>(k)];
                for (int r = 0; r < n_; ++r)
                    for (int c = 0; c < dy.cols(); ++c)
                        dstate[static_cast<std::size_t>(off + r * dy.cols() + c)] = dy(r, c);
            }
        }
        if (extra.size > 0) {
            StageData stage{t, base, a_blocks, y_blocks};
            extra.rhs(stage,
                      state.subspan(static_cast<std::size_t>(layout.extra_offset)),
                      dstate.subspan(static_cast<std::size_t>(layout.extra_offset)));
        }
    };

    AcceptHook hook;
    if (pivot0_ >= 0) {
        hook = [this, pivot_sign](double t, std::span<const double> state) {
            auto v = model_.value_at(state.subspan(0, static_cast<std::size_t>(model_.n)));
            double p = v[static_cast<std::size_t>(pivot0_)];
            if (p * pivot_sign <= 0.0 || std::abs(p) < 1e-300)
                throw IntegrationError(IntegrationError::Reason::pivot_vanished,
                                       "pivot component X_" + std::to_string(pivot0_ + 1) +
                                           " vanished along the trajectory at t = " + std::to_string(t));
        };
    }

    dense_ = integrate_ode(rhs, y0, t0, t1, rtol, atol, hook);
}

std::vector<double> TransportSession::base_at(double t) const {
    std::vector<double> full(static_cast<std::size_t>(dense_.dim()));
    dense_.eval(t, full);
    return std::vector<double>(full.begin(), full.begin() + model_.n);
}

double TransportSession::pivot_coordinate_at(double t) const {
    if (pivot0_ < 0) throw std::logic_error("session has no pivot");
    return dense_.eval_component(t, pivot0_);
}

SymBlockD TransportSession::y_block_at(double t, int k) const {
    if (k < 1 || k > order_) throw std::out_of_range("y_block_at order out of range");
    std::vector<double> full(static_cast<std::size_t>(dense_.dim()));
    dense_.eval(t, full);
    SymBlockD b(1, k, model_.n, model_.n);
    int off = y_offsets_[static_cast<std::size_t>(k)];
    for (int r = 0; r < model_.n; ++r)
        for (int c = 0; c < b.cols(); ++c) b(r, c) = full[static_cast<std::size_t>(off + r * b.cols() + c)];
    return b;
}

MatD TransportSession::y1_at(double t) const {
    SymBlockD b = y_block_at(t, 1);
    return b.entries;
}

std::vector<double> TransportSession::extra_at(double t) const {
    std::vector<double> full(static_cast<std::size_t>(dense_.dim()));
    dense_.eval(t, full);
    return std::vector<double>(full.begin() + extra_offset_, full.end());
}

TriangularTruncationD TransportSession::upsilon_at(double t) const {
    JetStripD strip;
    strip.order = order_;
    strip.dst_order = 1;
    strip.blocks.resize(static_cast<std::size_t>(order_) + 1);
    strip.blocks[0] = SymBlockD(1, 0, model_.n, model_.n);
    for (int k = 1; k <= order_; ++k) strip.blocks[static_cast<std::size_t>(k)] = y_block_at(t, k);
    return sym_exp_strip(strip, order_);
}

std::vector<SymBlockD> TransportSession::a_blocks_at(double t, int order) const {
    auto base = base_at(t);
    return model_.blocks_at(base, order);
}

TransportSession integrate_base(SystemModel model, std::span<const double> z0, double t0,
                                double t1, double rtol, double atol, int pivot0) {
    return TransportSession(std::move(model), z0, t0, t1, 0, rtol, atol, pivot0);
}

std::vector<double> path_quadrature(const TransportSession& traj,
                                    const std::function<std::vector<double>(double)>& integrand,
                                    int integrand_size, QuadratureVariable variable,
                                    double rtol, double atol) {
    OdeRhs rhs = [&](double t, std::span<const double>, std::span<double> d) {
        auto g = integrand(t);
        double scale = 1.0;
        if (variable == QuadratureVariable::pivot) {
            auto base = traj.base_at(t);
            auto v = traj.model().value_at(base);
            scale = v[static_cast<std::size_t>(traj.pivot())];
        }
        for (int i = 0; i < integrand_size; ++i) d[static_cast<std::size_t>(i)] = scale * g[static_cast<std::size_t>(i)];
    };
    std::vector<double> zero(static_cast<std::size_t>(integrand_size), 0.0);
    DenseOutput out = integrate_ode(rhs, zero, traj.t0(), traj.t1(), rtol, atol);
    return out.eval(traj.t1());
}

}  // namespace varjet
