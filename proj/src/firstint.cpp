#include "firstint.hpp"

#include <cmath>
#include <complex>

namespace varjet {

namespace {

template <class S>
SymBlock<S> sym_power_or_one(const SymBlock<S>& a, int r, int n) {
    if (r == 0) {
        SymBlock<S> b(0, 0, n, n);
        b(0, 0) = S(1);
        return b;
    }
    return sym_power(a, r);
}

SymBlockD block_with_identities(const SymBlockD& a, int m) {
    SymBlockD acc = a;
    for (int i = 0; i < m; ++i) acc = sym_product(acc, identity_block<double>(a.dst_dim, 1));
    return acc;
}

// y = B^T x for a SymBlock B and vector x of length rows(B)
std::vector<double> apply_transpose(const SymBlockD& b, std::span<const double> x) {
    std::vector<double> y(static_cast<std::size_t>(b.cols()), 0.0);
    for (int r = 0; r < b.rows(); ++r) {
        double v = x[static_cast<std::size_t>(r)];
        if (v == 0.0) continue;
        for (int c = 0; c < b.cols(); ++c) y[static_cast<std::size_t>(c)] += b(r, c) * v;
    }
    return y;
}

std::vector<double> apply_matrix(const MatD& m, std::span<const double> x) {
    std::vector<double> y(static_cast<std::size_t>(m.rows()), 0.0);
    for (int r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (int c = 0; c < m.cols(); ++c) s += m(r, c) * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = s;
    }
    return y;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

SymBlockD filter_degree_one(std::span<const double> x0, int pivot0) {
    int n = static_cast<int>(x0.size());
    double xp = x0[static_cast<std::size_t>(pivot0)];
    if (xp == 0.0) throw std::invalid_argument("degree-one filter needs a nonzero pivot component");
    SymBlockD f(1, 1, n, n);
    f.entries = MatD::identity(n);
    for (int r = 0; r < n; ++r) f(r, pivot0) -= x0[static_cast<std::size_t>(r)] / xp;
    return f;
}

// ---------------------------------------------------------------------------
// Scalar-row jet algebra

ScalarJet jet_product(const ScalarJet& f, const ScalarJet& g) {
    if (f.n != g.n || f.order != g.order) throw std::invalid_argument("jet shape mismatch");
    ScalarJet h;
    h.n = f.n;
    h.order = f.order;
    h.value = f.value * g.value;
    h.rows.resize(static_cast<std::size_t>(f.order));
    auto row_block = [&](const ScalarJet& j, int k) {
        SymBlockD b(0, k, j.n, j.n);
        for (int c = 0; c < b.cols(); ++c) b(0, c) = j.rows[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(c)];
        return b;
    };
    for (int i = 1; i <= f.order; ++i) {
        std::vector<double> acc(static_cast<std::size_t>(dim_sym(f.n, i)), 0.0);
        for (int j = 0; j <= i; ++j) {
            double w = static_cast<double>(binom(i, j));
            if (j == 0) {
                for (std::size_t c = 0; c < acc.size(); ++c)
                    acc[c] += w * f.value * g.rows[static_cast<std::size_t>(i - 1)][c];
            } else if (j == i) {
                for (std::size_t c = 0; c < acc.size(); ++c)
                    acc[c] += w * g.value * f.rows[static_cast<std::size_t>(i - 1)][c];
            } else {
                SymBlockD prod = sym_product(row_block(f, j), row_block(g, i - j));
                for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += w * prod(0, static_cast<int>(c));
            }
        }
        h.rows[static_cast<std::size_t>(i - 1)] = std::move(acc);
    }
    return h;
}

ScalarJet jet_power(const ScalarJet& f, int k) {
    if (k < 1) throw std::invalid_argument("jet_power requires k >= 1");
    ScalarJet acc = f;
    for (int i = 1; i < k; ++i) acc = jet_product(acc, f);
    return acc;
}

ScalarJet jet_reciprocal(const ScalarJet& f) {
    if (f.value == 0.0) throw std::invalid_argument("jet_reciprocal of a jet with zero constant term");
    ScalarJet h;
    h.n = f.n;
    h.order = f.order;
    h.value = 1.0 / f.value;
    h.rows.resize(static_cast<std::size_t>(f.order));
    auto row_block = [&](const std::vector<double>& row, int k, int n) {
        SymBlockD b(0, k, n, n);
        for (int c = 0; c < b.cols(); ++c) b(0, c) = row[static_cast<std::size_t>(c)];
        return b;
    };
    // (f h)^{(i)} = 0 for i >= 1 gives h^{(i)} in terms of lower orders
    for (int i = 1; i <= f.order; ++i) {
        std::vector<double> acc(static_cast<std::size_t>(dim_sym(f.n, i)), 0.0);
        for (int j = 1; j <= i; ++j) {
            double w = static_cast<double>(binom(i, j));
            if (j == i) {
                for (std::size_t c = 0; c < acc.size(); ++c)
                    acc[c] += w * h.value * f.rows[static_cast<std::size_t>(i - 1)][c];
            } else {
                SymBlockD prod = sym_product(row_block(f.rows[static_cast<std::size_t>(j - 1)], j, f.n),
                                             row_block(h.rows[static_cast<std::size_t>(i - j - 1)], i - j, f.n));
                for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += w * prod(0, static_cast<int>(c));
            }
        }
        for (auto& v : acc) v = -v / f.value;
        h.rows[static_cast<std::size_t>(i - 1)] = std::move(acc);
    }
    return h;
}

bool row_in_span(std::span<const double> row, const std::vector<std::vector<double>>& basis,
                 double tol) {
    if (basis.empty()) return inf_norm(row) == 0.0;
    int m = static_cast<int>(basis.size());
    int n = static_cast<int>(row.size());
    // least squares min ||B^T c - row|| via normal equations
    MatD g(m, m);
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] *
                                              basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
            g(i, j) = s;
        }
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] *
                                          row[static_cast<std::size_t>(c)];
        rhs[static_cast<std::size_t>(i)] = s;
    }
    double shift = 1e-12 * std::max(1.0, g.max_abs());
    for (int i = 0; i < m; ++i) g(i, i) += shift;
    Lu<double> lu(g);
    auto coeff = lu.solve(rhs);
    double resid = 0.0, scale = inf_norm(row);
    for (int c = 0; c < n; ++c) {
        double s = row[static_cast<std::size_t>(c)];
        for (int i = 0; i < m; ++i)
            s -= coeff[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        resid = std::max(resid, std::abs(s));
    }
    for (const auto& b : basis) scale = std::max(scale, inf_norm(b));
    return resid <= tol * std::max(1.0, scale);
}

std::vector<std::vector<double>> product_span_rows(
    const std::vector<std::vector<std::vector<double>>>& seed_rows, int n, int k) {
    std::vector<std::vector<double>> out;
    int num_seeds = static_cast<int>(seed_rows.size());
    auto row_block = [&](int seed, int order) {
        SymBlockD b(0, order, n, n);
        const auto& row = seed_rows[static_cast<std::size_t>(seed)][static_cast<std::size_t>(order - 1)];
        for (int c = 0; c < b.cols(); ++c) b(0, c) = row[static_cast<std::size_t>(c)];
        return b;
    };
    for (int parts = 2; parts <= k; ++parts) {
        for (const auto& partition : partitions_into(k, parts)) {
            // every assignment of a seed to every part
            std::vector<int> assign(partition.size(), 0);
            for (;;) {
                SymBlockD prod = row_block(assign[0], partition[0]);
                for (std::size_t i = 1; i < partition.size(); ++i)
                    prod = sym_product(prod, row_block(assign[i], partition[i]));
                std::vector<double> row(static_cast<std::size_t>(prod.cols()));
                for (int c = 0; c < prod.cols(); ++c) row[static_cast<std::size_t>(c)] = prod(0, c);
                if (inf_norm(row) > 0.0) out.push_back(std::move(row));
                // next assignment
                std::size_t pos = 0;
                while (pos < assign.size() && ++assign[pos] == num_seeds) assign[pos++] = 0;
                if (pos == assign.size()) break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Progressive pipeline

JetPipeline::JetPipeline(SystemModel model, std::span<const double> z0, double t0, double t1,
                         int order, int pivot0, double rtol, double atol,
                         std::vector<JetSeed> seeds)
    : order_(order), pivot0_(pivot0), t0_(t0), t1_(t1), seeds_(std::move(seeds)) {
    const int n = model.n;
    if (order < 1) throw std::invalid_argument("jet order must be >= 1");
    if (pivot0 < 0 || pivot0 >= n) throw std::invalid_argument("pivot index out of range");
    for (const auto& s : seeds_)
        if (s.row == pivot0 || s.row < 0 || s.row >= n)
            throw std::invalid_argument("seed row must differ from the pivot and lie in range");

    // t0 data: A-blocks, filter, integration constants
    auto a0_blocks = model.blocks_at(z0, order);
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x0[static_cast<std::size_t>(i)] = a0_blocks[0](i, 0);
    f1_ = filter_degree_one(x0, pivot0);

    constants_.resize(seeds_.size());
    constraint_residuals_.resize(seeds_.size());
    for (std::size_t s = 0; s < seeds_.size(); ++s) {
        auto& cs = constants_[s];
        cs.resize(static_cast<std::size_t>(order));
        // V_1(t0): transposed seed row of F_1 (Y_1(t0) = Id)
        cs[0].assign(static_cast<std::size_t>(n), 0.0);
        for (int c = 0; c < n; ++c) cs[0][static_cast<std::size_t>(c)] = seeds_[s].scale * f1_(seeds_[s].row, c);

        for (int k = 2; k <= order; ++k) {
            // constraint (A_0 (x) Id^{k-1})^T V_k = -sum_{j>=1} C(k-1,j) (A_j (x) Id^{k-1-j})^T V_{k-j}
            SymBlockD m_block = block_with_identities(a0_blocks[0], k - 1);  // (k, k-1)
            MatD m = m_block.entries.transposed();                           // d_{n,k-1} x d_{n,k}
            std::vector<double> rhs(static_cast<std::size_t>(dim_sym(n, k - 1)), 0.0);
            for (int j = 1; j <= k - 1; ++j) {
                SymBlockD aj = block_with_identities(a0_blocks[static_cast<std::size_t>(j)], k - 1 - j);
                auto term = apply_transpose(aj, cs[static_cast<std::size_t>(k - j - 1)]);
                double w = static_cast<double>(binom(k - 1, j));
                for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= w * term[i];
            }
            double resid = 0.0;
            auto vk = min_norm_solve(m, rhs, &resid);
            double feas_tol = 1e-8 * std::max(1.0, inf_norm(rhs));
            constraint_residuals_[s].push_back(resid);
            if (resid > feas_tol) throw InfeasibleConstraintError(k, resid);
            auto anchor_it = seeds_[s].anchors.find(k);
            if (anchor_it != seeds_[s].anchors.end()) {
                const auto& anchor = anchor_it->second;
                if (anchor.size() != vk.size()) throw std::invalid_argument("anchor length mismatch");
                // keep only the kernel part of the anchor
                auto m_anchor = apply_matrix(m, anchor);
                auto non_kernel = min_norm_solve(m, m_anchor);
                for (std::size_t i = 0; i < vk.size(); ++i)
                    vk[i] += anchor[i] - non_kernel[i];
            }
            cs[static_cast<std::size_t>(k - 1)] = std::move(vk);
        }
    }

    // accumulator layout: for each seed, orders 2..K
    int acc_total = 0;
    acc_offsets_.assign(seeds_.size() * static_cast<std::size_t>(std::max(0, order - 1)), 0);
    for (std::size_t s = 0; s < seeds_.size(); ++s) {
        for (int k = 2; k <= order; ++k) {
            acc_offsets_[s * static_cast<std::size_t>(order - 1) + static_cast<std::size_t>(k - 2)] = acc_total;
            acc_total += static_cast<int>(dim_sym(n, k));
        }
    }

    ExtraRhs extra;
    extra.size = acc_total;
    // the hook is only used inside the TransportSession constructor below
    extra.rhs = [this, n](const StageData& stage, std::span<const double> acc, std::span<double> dacc) {
        const auto& a = stage.a_blocks;
        MatD y1(n, n);
        y1 = stage.y_blocks[1].entries;
        MatD y1inv = inverse(y1);
        SymBlockD y1_blk(1, 1, n, n), y1inv_blk(1, 1, n, n);
        y1_blk.entries = y1;
        y1inv_blk.entries = y1inv;

        // powers shared across seeds
        std::vector<MatD> xk(static_cast<std::size_t>(order_) + 1);      // X_k = (Y1^{(x)k})^T
        std::vector<MatD> xkinv(static_cast<std::size_t>(order_) + 1);   // X_k^{-1} = ((Y1^{-1})^{(x)k})^T
        {
            SymBlockD p = y1_blk, q = y1inv_blk;
            xk[1] = p.entries.transposed();
            xkinv[1] = q.entries.transposed();
            for (int k = 2; k <= order_; ++k) {
                p = sym_product(p, y1_blk);
                q = sym_product(q, y1inv_blk);
                xk[static_cast<std::size_t>(k)] = p.entries.transposed();
                xkinv[static_cast<std::size_t>(k)] = q.entries.transposed();
            }
        }
        // A_j (x) Id^{(x)m} table, j = 2..K, m = 0..K-j
        std::vector<std::vector<SymBlockD>> ajid(static_cast<std::size_t>(order_) + 1);
        for (int j = 2; j <= order_; ++j) {
            ajid[static_cast<std::size_t>(j)].push_back(a[static_cast<std::size_t>(j)]);
            for (int m = 1; m <= order_ - j; ++m)
                ajid[static_cast<std::size_t>(j)].push_back(
                    sym_product(ajid[static_cast<std::size_t>(j)][static_cast<std::size_t>(m - 1)],
                                identity_block<double>(n, 1)));
        }

        for (std::size_t s = 0; s < seeds_.size(); ++s) {
            // V_m(t) for m = 1..K-1
            std::vector<std::vector<double>> v(static_cast<std::size_t>(order_));
            {
                // V_1 = (F_1 Y_1^{-1})_{row}^T * scale
                std::vector<double> row(static_cast<std::size_t>(n), 0.0);
                for (int c = 0; c < n; ++c) {
                    double acc_v = 0.0;
                    for (int m = 0; m < n; ++m) acc_v += f1_(seeds_[s].row, m) * y1inv(m, c);
                    row[static_cast<std::size_t>(c)] = seeds_[s].scale * acc_v;
                }
                v[0] = std::move(row);
            }
            for (int m = 2; m < order_; ++m) {
                int off = acc_offsets_[s * static_cast<std::size_t>(order_ - 1) + static_cast<std::size_t>(m - 2)];
                std::vector<double> cm = constants_[s][static_cast<std::size_t>(m - 1)];
                for (int i = 0; i < static_cast<int>(dim_sym(n, m)); ++i)
                    cm[static_cast<std::size_t>(i)] += acc[static_cast<std::size_t>(off + i)];
                v[static_cast<std::size_t>(m - 1)] = apply_matrix(xkinv[static_cast<std::size_t>(m)], cm);
            }
            // dI_k = X_k b_k, b_k = -sum_{j=2}^k C(k,j) (A_j (x) Id^{k-j})^T V_{k-j+1}
            for (int k = 2; k <= order_; ++k) {
                std::vector<double> b(static_cast<std::size_t>(dim_sym(n, k)), 0.0);
                for (int j = 2; j <= k; ++j) {
                    const SymBlockD& blk = ajid[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - j)];
                    auto term = apply_transpose(blk, v[static_cast<std::size_t>(k - j)]);
                    double w = static_cast<double>(binom(k, j));
                    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= w * term[i];
                }
                auto di = apply_matrix(xk[static_cast<std::size_t>(k)], b);
                int off = acc_offsets_[s * static_cast<std::size_t>(order_ - 1) + static_cast<std::size_t>(k - 2)];
                for (std::size_t i = 0; i < di.size(); ++i) dacc[static_cast<std::size_t>(off) + i] = di[i];
            }
        }
    };

    session_.emplace(std::move(model), z0, t0, t1, order, rtol, atol, pivot0, extra);
}

std::vector<double> JetPipeline::extra_at(double t) const { return session_->extra_at(t); }

std::vector<double> JetPipeline::row_at(int seed, int k, double t) const {
    const int n = session_->dim();
    if (k < 1 || k > order_) throw std::out_of_range("jet order out of range");
    MatD y1inv = inverse(session_->y1_at(t));
    SymBlockD y1inv_blk(1, 1, n, n);
    y1inv_blk.entries = y1inv;
    if (k == 1) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int m = 0; m < n; ++m) acc += f1_(seeds_[static_cast<std::size_t>(seed)].row, m) * y1inv(m, c);
            row[static_cast<std::size_t>(c)] = seeds_[static_cast<std::size_t>(seed)].scale * acc;
        }
        return row;
    }
    auto acc = extra_at(t);
    int off = acc_offsets_[static_cast<std::size_t>(seed) * static_cast<std::size_t>(order_ - 1) +
                           static_cast<std::size_t>(k - 2)];
    std::vector<double> ck = constants_[static_cast<std::size_t>(seed)][static_cast<std::size_t>(k - 1)];
    for (int i = 0; i < static_cast<int>(dim_sym(n, k)); ++i)
        ck[static_cast<std::size_t>(i)] += acc[static_cast<std::size_t>(off + i)];
    MatD xkinv = sym_power(y1inv_blk, k).entries.transposed();
    return apply_matrix(xkinv, ck);
}

std::vector<std::vector<double>> JetPipeline::rows_at(int seed, double t) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(order_));
    for (int k = 1; k <= order_; ++k) rows.push_back(row_at(seed, k, t));
    return rows;
}

const std::vector<double>& JetPipeline::constant(int seed, int k) const {
    return constants_[static_cast<std::size_t>(seed)][static_cast<std::size_t>(k - 1)];
}

double JetPipeline::constraint_residual(int seed, int k) const {
    return constraint_residuals_[static_cast<std::size_t>(seed)][static_cast<std::size_t>(k - 2)];
}

bool AdmissibilityReport::admissible(double kernel_tol, double fd_tol) const {
    for (double r : kernel_residual_max)
        if (r > kernel_tol) return false;
    for (double r : dual_fd_rel_max)
        if (r > fd_tol) return false;
    return true;
}

AdmissibilityReport JetPipeline::admissibility_check(int seed, int num_samples, double fd_step) const {
    AdmissibilityReport rep;
    rep.kernel_residual_max.assign(static_cast<std::size_t>(order_), 0.0);
    rep.kernel_residual_rel_max.assign(static_cast<std::size_t>(order_), 0.0);
    rep.dual_fd_rel_max.assign(static_cast<std::size_t>(order_), 0.0);
    const int n = session_->dim();
    double span = t1_ - t0_;
    double margin = std::max(std::abs(fd_step) * 2, 1e-3 * std::abs(span));
    for (int i = 0; i < num_samples; ++i) {
        double t = t0_ + margin + (span - 2 * margin) * i / std::max(1, num_samples - 1);
        rep.sample_times.push_back(t);
        auto rows = rows_at(seed, t);
        auto a_blocks = session_->a_blocks_at(t, order_);
        std::vector<double> scales;
        auto kr = kernel_residual(rows, a_blocks, &scales);
        for (int k = 1; k <= order_; ++k) {
            rep.kernel_residual_max[static_cast<std::size_t>(k - 1)] =
                std::max(rep.kernel_residual_max[static_cast<std::size_t>(k - 1)],
                         kr[static_cast<std::size_t>(k - 1)]);
            double rel = kr[static_cast<std::size_t>(k - 1)] /
                         std::max(1.0, scales[static_cast<std::size_t>(k - 1)]);
            rep.kernel_residual_rel_max[static_cast<std::size_t>(k - 1)] =
                std::max(rep.kernel_residual_rel_max[static_cast<std::size_t>(k - 1)], rel);
        }

        // dual system: dV_k/dt = -sum_{s<=k} [C(k,s-1) A_{k-s+1} (x) Id^{s-1}]^T V_s
        auto rows_p = rows_at(seed, t + fd_step);
        auto rows_m = rows_at(seed, t - fd_step);
        for (int k = 1; k <= order_; ++k) {
            std::vector<double> fd(static_cast<std::size_t>(dim_sym(n, k)));
            for (std::size_t c = 0; c < fd.size(); ++c)
                fd[c] = (rows_p[static_cast<std::size_t>(k - 1)][c] - rows_m[static_cast<std::size_t>(k - 1)][c]) /
                        (2 * fd_step);
            std::vector<double> rhs(static_cast<std::size_t>(dim_sym(n, k)), 0.0);
            for (int s = 1; s <= k; ++s) {
                SymBlockD blk = block_with_identities(a_blocks[static_cast<std::size_t>(k - s + 1)], s - 1);
                auto term = apply_transpose(blk, rows[static_cast<std::size_t>(s - 1)]);
                double w = static_cast<double>(binom(k, s - 1));
                for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= w * term[i];
            }
            double scale = std::max({inf_norm(fd), inf_norm(rhs), 1e-12});
            double defect = 0.0;
            for (std::size_t i = 0; i < fd.size(); ++i) defect = std::max(defect, std::abs(fd[i] - rhs[i]));
            rep.dual_fd_rel_max[static_cast<std::size_t>(k - 1)] =
                std::max(rep.dual_fd_rel_max[static_cast<std::size_t>(k - 1)], defect / scale);
        }
    }
    return rep;
}

double JetPipeline::evaluate_truncated(int seed, double t, std::span<const double> xi, double f0) const {
    double acc = f0;
    double inv_fact = 1.0;
    for (int k = 1; k <= order_; ++k) {
        inv_fact /= k;
        auto row = row_at(seed, k, t);
        auto pw = sym_vector_power(xi, k);
        double dot = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) dot += row[i] * pw[i];
        acc += inv_fact * dot;
    }
    return acc;
}

ConstancyResult JetPipeline::constancy_scaling(int seed, std::span<const double> direction,
                                               std::span<const double> eps_ladder, int num_samples,
                                               double rtol, double atol) const {
    ConstancyResult res;
    const int n = session_->dim();
    for (double eps : eps_ladder) {
        std::vector<double> z0 = session_->base_at(t0_);
        for (int i = 0; i < n; ++i) z0[static_cast<std::size_t>(i)] += eps * direction[static_cast<std::size_t>(i)];
        TransportSession pert = integrate_base(session_->model(), z0, t0_, t1_, rtol, atol);
        auto value_at = [&](double t) {
            auto zp = pert.base_at(t);
            auto zb = session_->base_at(t);
            std::vector<double> xi(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) xi[static_cast<std::size_t>(i)] = zp[static_cast<std::size_t>(i)] - zb[static_cast<std::size_t>(i)];
            return evaluate_truncated(seed, t, xi);
        };
        double v0 = value_at(t0_);
        double drift = 0.0;
        for (int i = 1; i < num_samples; ++i) {
            double t = t0_ + (t1_ - t0_) * i / (num_samples - 1);
            drift = std::max(drift, std::abs(value_at(t) - v0));
        }
        res.epsilons.push_back(eps);
        res.drifts.push_back(drift);
    }
    // least-squares slope in log-log coordinates
    int m = static_cast<int>(res.epsilons.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        double lx = std::log(res.epsilons[static_cast<std::size_t>(i)]);
        double ly = std::log(std::max(res.drifts[static_cast<std::size_t>(i)], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    res.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return res;
}

// ---------------------------------------------------------------------------
// Conjectured quadrature-free filter, with the identities proven at t0

ConjectureReport conjecture_filter(std::span<const SymBlockD> a_blocks, int pivot0, int order) {
    using Cplx = std::complex<double>;
    const int n = a_blocks[0].dst_dim;
    ConjectureReport rep;
    rep.order = order;
    rep.dim = n;

    std::vector<double> x0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x0[static_cast<std::size_t>(i)] = a_blocks[0](i, 0);
    double xp = x0[static_cast<std::size_t>(pivot0)];
    rep.pivot_value = xp;
    SymBlockD f1 = filter_degree_one(x0, pivot0);

    SymBlockC f1c(1, 1, n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f1c(i, j) = Cplx(f1(i, j), 0.0);

    SymBlockD eit(0, 1, n, n);
    eit(0, pivot0) = 1.0;

    rep.filter_blocks.push_back(f1);
    for (int k = 1; k <= order; ++k) {
        // sum form: U_k = [sum_j Id^{(x)j} (x) F1^{(x)(k-1-j)}] (x) e_i^T
        SymBlockD u_sum(k - 1, k, n, n);
        {
            SymBlockD inner(k - 1, k - 1, n, n);
            for (int j = 0; j <= k - 1; ++j) {
                SymBlockD idp = sym_power_or_one(identity_block<double>(n, 1), j, n);
                SymBlockD f1p = sym_power_or_one(f1, k - 1 - j, n);
                SymBlockD term = (j == 0) ? f1p : ((j == k - 1) ? idp : sym_product(idp, f1p));
                inner.entries += term.entries;
            }
            u_sum = sym_product(inner, eit);
        }
        // product form over the k-th roots of unity
        SymBlockD u_prod_re(k - 1, k, n, n);
        double imag_max = 0.0;
        {
            SymBlockC prod(0, 0, n, n);
            prod(0, 0) = Cplx(1.0, 0.0);
            for (int j = 1; j <= k - 1; ++j) {
                Cplx zeta = std::exp(Cplx(0.0, 2.0 * M_PI * j / k));
                SymBlockC factor(1, 1, n, n);
                factor.entries = MatC::identity(n);
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c) factor(r, c) -= zeta * f1c(r, c);
                prod = (j == 1) ? factor : sym_product(prod, factor);
            }
            SymBlockC eitc(0, 1, n, n);
            eitc(0, pivot0) = Cplx(1.0, 0.0);
            SymBlockC u = sym_product(prod, eitc);
            for (int r = 0; r < u.rows(); ++r)
                for (int c = 0; c < u.cols(); ++c) {
                    u_prod_re(r, c) = u(r, c).real();
                    imag_max = std::max(imag_max, std::abs(u(r, c).imag()));
                }
        }
        rep.uk_imag_max.push_back(imag_max);
        rep.uk_route_discrepancy.push_back((u_sum.entries - u_prod_re.entries).max_abs());

        // identity at t0: U_k (A_0 (x) Id^{(x)(k-1)}) = X_i Id
        SymBlockD a0id = a_blocks[0];
        for (int j = 0; j < k - 1; ++j) a0id = sym_product(a0id, identity_block<double>(n, 1));
        MatD ukk = u_sum.entries * a0id.entries;
        MatD want = MatD::identity(static_cast<int>(dim_sym(n, k - 1))) * xp;
        rep.ukk_residual.push_back((ukk - want).max_abs());

        if (k == 1) {
            // hyp at k=1 is F_1 A_0 = 0
            MatD h = f1.entries * a_blocks[0].entries;
            rep.hyp_residual.push_back(h.max_abs());
            continue;
        }

        // F_k = -(1/X_i) [sum_{j=0}^{k-2} C(k-1,j) F_{j+1} (A_{k-1-j} (x) Id^{(x)j})] U_k
        MatD s(n, static_cast<int>(dim_sym(n, k - 1)));
        for (int j = 0; j <= k - 2; ++j) {
            SymBlockD a_term = a_blocks[static_cast<std::size_t>(k - 1 - j)];
            for (int m = 0; m < j; ++m) a_term = sym_product(a_term, identity_block<double>(n, 1));
            MatD prod = rep.filter_blocks[static_cast<std::size_t>(j)].entries * a_term.entries;
            s += prod * static_cast<double>(binom(k - 1, j));
        }
        SymBlockD fk(1, k, n, n);
        fk.entries = s * u_sum.entries * (-1.0 / xp);
        rep.filter_blocks.push_back(fk);

        MatD hyp = s + fk.entries * a0id.entries;
        rep.hyp_residual.push_back(hyp.max_abs());
    }
    return rep;
}

std::vector<double> conjecture_away_residuals(const TransportSession& session,
                                              const ConjectureReport& report,
                                              std::span<const double> times) {
    const int n = session.dim();
    const int order = report.order;
    JetStripD f_strip;
    f_strip.order = order;
    f_strip.dst_order = 1;
    f_strip.blocks.resize(static_cast<std::size_t>(order) + 1);
    f_strip.blocks[0] = SymBlockD(1, 0, n, n);
    for (int k = 1; k <= order; ++k)
        f_strip.blocks[static_cast<std::size_t>(k)] = report.filter_blocks[static_cast<std::size_t>(k - 1)];
    TriangularTruncationD phi = sym_exp_strip(f_strip, order);
    MatD phi_dense = phi.to_dense();

    std::vector<double> out;
    for (double t : times) {
        MatD upsinv = triangular_inverse(session.upsilon_at(t)).to_dense();
        MatD filtered = phi_dense * upsinv;
        auto a_blocks = session.a_blocks_at(t, order);
        // bottom n rows hold the jet strips G_K | ... | G_1
        int total = filtered.rows();
        double worst = 0.0;
        for (int r = total - n; r < total; ++r) {
            std::vector<std::vector<double>> rows(static_cast<std::size_t>(order));
            int col = 0;
            for (int s = order; s >= 1; --s) {
                int d = static_cast<int>(dim_sym(n, s));
                std::vector<double> seg(static_cast<std::size_t>(d));
                for (int c = 0; c < d; ++c) seg[static_cast<std::size_t>(c)] = filtered(r, col + c);
                rows[static_cast<std::size_t>(s - 1)] = std::move(seg);
                col += d;
            }
            double row_norm = 0.0;
            for (const auto& seg : rows) row_norm = std::max(row_norm, inf_norm(seg));
            if (row_norm < 1e-12) continue;  // the pivot row filters to zero
            auto kr = kernel_residual(rows, a_blocks);
            for (double v : kr) worst = std::max(worst, v);
        }
        out.push_back(worst);
    }
    return out;
}

}  // namespace varjet
