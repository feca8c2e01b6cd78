#include "lve.hpp"

#include <cmath>
#include <stdexcept>

namespace varjet {

namespace {

// A_j (x) Id^{(x)m} computed by folding identity factors one at a time
SymBlockD block_with_identities(const SymBlockD& a, int m) {
    SymBlockD acc = a;
    int n = a.dst_dim;
    for (int i = 0; i < m; ++i) acc = sym_product(acc, identity_block<double>(n, 1));
    return acc;
}

}  // namespace

LveMatrix assemble_lve(std::span<const SymBlockD> a_blocks, int order) {
    if (static_cast<int>(a_blocks.size()) < order + 1)
        throw std::invalid_argument("assemble_lve needs A_0..A_K");
    int n = a_blocks[1].dst_dim;
    LveMatrix m;
    m.order = order;
    m.dim = n;
    m.blocks = TriangularTruncationD(order, n);
    for (int r = 1; r <= order; ++r) {
        for (int s = r; s <= order; ++s) {
            SymBlockD b = block_with_identities(a_blocks[static_cast<std::size_t>(s - r + 1)], r - 1);
            double w = static_cast<double>(binom(s, r - 1));
            b.entries = b.entries * w;
            m.blocks.at(r, s) = std::move(b);
        }
    }
    return m;
}

AhatMatrix assemble_ahat(std::span<const SymBlockD> a_blocks, int order_k) {
    if (order_k < 1) throw std::invalid_argument("assemble_ahat requires order >= 1");
    if (static_cast<int>(a_blocks.size()) < order_k)
        throw std::invalid_argument("assemble_ahat needs A_0..A_{k-1}");
    int n = a_blocks[0].dst_dim;
    AhatMatrix m;
    m.order = order_k - 1;
    m.dim = n;
    m.blocks.reserve(static_cast<std::size_t>(order_k));
    for (int j = 0; j <= order_k - 1; ++j) {
        SymBlockD b = block_with_identities(a_blocks[static_cast<std::size_t>(j)], order_k - 1 - j);
        double w = static_cast<double>(binom(order_k - 1, j));
        b.entries = b.entries * w;
        m.blocks.push_back(std::move(b));
    }
    return m;
}

std::vector<double> kernel_residual(std::span<const std::vector<double>> jet_rows,
                                    std::span<const SymBlockD> a_blocks,
                                    std::vector<double>* term_scales) {
    int order = static_cast<int>(jet_rows.size());
    std::vector<double> residuals(static_cast<std::size_t>(order), 0.0);
    if (term_scales) term_scales->assign(static_cast<std::size_t>(order), 0.0);
    for (int k = 1; k <= order; ++k) {
        AhatMatrix ahat = assemble_ahat(a_blocks, k);
        int rows = static_cast<int>(dim_sym(ahat.dim, k - 1));
        std::vector<double> acc(static_cast<std::size_t>(rows), 0.0);
        double scale = 0.0;
        for (int j = 0; j <= k - 1; ++j) {
            const SymBlockD& b = ahat.blocks[static_cast<std::size_t>(j)];  // (k-j, k-1)
            const auto& v = jet_rows[static_cast<std::size_t>(k - j - 1)];  // f_{k-j}
            // accumulate B^T V_{k-j}: component c of the residual is
            // sum_r B(r, c) * V[r]
            double term_norm = 0.0;
            for (int c = 0; c < b.cols(); ++c) {
                double s = 0.0;
                for (int r = 0; r < b.rows(); ++r) s += b(r, c) * v[static_cast<std::size_t>(r)];
                acc[static_cast<std::size_t>(c)] += s;
                term_norm = std::max(term_norm, std::abs(s));
            }
            scale = std::max(scale, term_norm);
        }
        double norm = 0.0;
        for (double x : acc) norm = std::max(norm, std::abs(x));
        residuals[static_cast<std::size_t>(k - 1)] = norm;
        if (term_scales) (*term_scales)[static_cast<std::size_t>(k - 1)] = scale;
    }
    return residuals;
}

}  // namespace varjet
