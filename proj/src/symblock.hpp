#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "multiidx.hpp"

namespace varjet {

// An (i,j)-block: a linear map Sym^j K^m -> Sym^i K^n stored densely over the
// decreasing-lex monomial bases, so d_{n,i} rows by d_{m,j} columns. A
// (0,0)-block is a scalar, (k,0) a column, (0,k) a row.
template <class S>
struct SymBlock {
    int dst_order = 0;  // i
    int src_order = 0;  // j
    int dst_dim = 1;    // n
    int src_dim = 1;    // m
    Mat<S> entries;

    SymBlock() = default;
    SymBlock(int dst_order_, int src_order_, int dst_dim_, int src_dim_)
        : dst_order(dst_order_),
          src_order(src_order_),
          dst_dim(dst_dim_),
          src_dim(src_dim_),
          entries(static_cast<int>(dim_sym(dst_dim_, dst_order_)),
                  static_cast<int>(dim_sym(src_dim_, src_order_))) {}

    int rows() const { return entries.rows(); }
    int cols() const { return entries.cols(); }
    S& operator()(int r, int c) { return entries(r, c); }
    const S& operator()(int r, int c) const { return entries(r, c); }
};

using SymBlockD = SymBlock<double>;
using SymBlockC = SymBlock<std::complex<double>>;

// (m,m)-identity block on Sym^m K^n; equals Id_n^{\odot m}.
template <class S>
SymBlock<S> identity_block(int n, int m) {
    SymBlock<S> b(m, m, n, n);
    b.entries = Mat<S>::identity(static_cast<int>(dim_sym(n, m)));
    return b;
}

namespace detail {

// rank-of-sum lookup: table[ra * d_b + rb] = lex_rank(basis_a[ra] + basis_b[rb])
const std::vector<int>& sum_rank_table(int n, int order_a, int order_b);

}  // namespace detail

// Symmetric product of coordinate vectors: the Sym^a and Sym^b coordinate
// arrays convolve additively on exponent vectors (monomial product).
template <class S>
void sym_convolve_into(int n, int order_a, std::span<const S> a, int order_b,
                       std::span<const S> b, S weight, std::span<S> out) {
    const auto& table = detail::sum_rank_table(n, order_a, order_b);
    const std::size_t db = static_cast<std::size_t>(dim_sym(n, order_b));
    for (std::size_t ra = 0; ra < a.size(); ++ra) {
        S va = a[ra];
        if (va == S(0)) continue;
        va *= weight;
        for (std::size_t rb = 0; rb < b.size(); ++rb) {
            if (b[rb] == S(0)) continue;
            out[static_cast<std::size_t>(table[ra * db + rb])] += va * b[rb];
        }
    }
}

// A (x) B: the (i1+i2, j1+j2)-block computed column by column. Column at the
// source multi-index k sums A(:,p) (x) B(:,k-p) over splits p with |p| = j1,
// weighted by C(k,p) / C(j1+j2, j1); the weight is exact integer arithmetic
// converted to the scalar type once per term.
template <class S>
SymBlock<S> sym_product(const SymBlock<S>& a, const SymBlock<S>& b) {
    if (a.src_dim != b.src_dim || a.dst_dim != b.dst_dim)
        throw std::invalid_argument("sym_product ambient dimension mismatch");
    const int n = a.dst_dim, m = a.src_dim;
    const int i_out = a.dst_order + b.dst_order;
    const int j_out = a.src_order + b.src_order;
    SymBlock<S> c(i_out, j_out, n, m);
    const auto& cols_out = lex_basis(m, j_out);
    const auto& cols_a = lex_basis(m, a.src_order);
    const double denom = static_cast<double>(binom(j_out, a.src_order));
    std::vector<S> acc(static_cast<std::size_t>(c.rows()));
    std::vector<S> col_a(static_cast<std::size_t>(a.rows()));
    std::vector<S> col_b(static_cast<std::size_t>(b.rows()));
    for (int kc = 0; kc < static_cast<int>(cols_out.size()); ++kc) {
        const MultiIndex& k = cols_out[static_cast<std::size_t>(kc)];
        std::fill(acc.begin(), acc.end(), S(0));
        for (int pc = 0; pc < static_cast<int>(cols_a.size()); ++pc) {
            const MultiIndex& p = cols_a[static_cast<std::size_t>(pc)];
            if (!p.leq_entrywise(k)) continue;
            MultiIndex q = k.minus(p);
            int qc = lex_rank(q);
            double w = static_cast<double>(multi_binom(k, p)) / denom;
            for (int r = 0; r < a.rows(); ++r) col_a[static_cast<std::size_t>(r)] = a(r, pc);
            for (int r = 0; r < b.rows(); ++r) col_b[static_cast<std::size_t>(r)] = b(r, qc);
            sym_convolve_into<S>(n, a.dst_order, col_a, b.dst_order, col_b, S(w), acc);
        }
        for (int r = 0; r < c.rows(); ++r) c(r, kc) = acc[static_cast<std::size_t>(r)];
    }
    return c;
}

template <class S>
SymBlock<S> sym_multi_product(std::span<const SymBlock<S>> factors) {
    if (factors.empty()) throw std::invalid_argument("sym_multi_product of empty list");
    SymBlock<S> acc = factors[0];
    for (std::size_t i = 1; i < factors.size(); ++i) acc = sym_product(acc, factors[i]);
    return acc;
}

template <class S>
SymBlock<S> sym_power(const SymBlock<S>& a, int r) {
    if (r < 1) throw std::invalid_argument("sym_power requires r >= 1");
    SymBlock<S> acc = a;
    for (int i = 1; i < r; ++i) acc = sym_product(acc, a);
    return acc;
}

// Coordinates of v^{(x)k} in Sym^k K^n: the entry at multi-index i is
// C(k; i) * v^i, the convention that makes <F^{(m)}, v^{(x)m}> equal to
// m! times the order-m Taylor term.
std::vector<double> sym_vector_power(std::span<const double> v, int k);

// v^{(x)k} packaged as a (k,0)-column block.
SymBlockD sym_vector_power_block(std::span<const double> v, int k);

// One strip of blocks B_0 | B_1 | ... | B_K, all with common dst order
// (1 for vector-field / flow strips, 0 for scalar-row strips).
template <class S>
struct JetStrip {
    int order = 0;               // K
    int dst_order = 1;           // 1 or 0
    std::vector<SymBlock<S>> blocks;  // blocks[j] has src_order j, j = 0..K

    const SymBlock<S>& block(int j) const { return blocks[static_cast<std::size_t>(j)]; }
};

using JetStripD = JetStrip<double>;

// Order-K corner of a block-triangular infinite matrix: blocks Z_{r,s} for
// 1 <= r <= s <= K, zero below (r > s). scalar00 carries the optional
// (0,0)-entry (1 for the exponential of a strip).
template <class S>
struct TriangularTruncation {
    int order = 0;  // K
    int dim = 0;    // ambient n
    S scalar00 = S(0);
    std::vector<SymBlock<S>> blocks;  // packed upper wedge, see index()

    TriangularTruncation() = default;
    TriangularTruncation(int order_, int dim_) : order(order_), dim(dim_) {
        blocks.resize(static_cast<std::size_t>(order_) * (order_ + 1) / 2);
        for (int r = 1; r <= order_; ++r)
            for (int s = r; s <= order_; ++s)
                blocks[index(r, s)] = SymBlock<S>(r, s, dim_, dim_);
    }

    std::size_t index(int r, int s) const {
        // wedge r <= s packed row by row; row r holds order - r + 1 blocks
        return static_cast<std::size_t>((r - 1) * (order + 1) - r * (r - 1) / 2 + (s - r));
    }

    SymBlock<S>& at(int r, int s) { return blocks[index(r, s)]; }
    const SymBlock<S>& at(int r, int s) const { return blocks[index(r, s)]; }

    // Dense D_{n,K} x D_{n,K} matrix in the order-reversed layout of the
    // paper's displays (order K block first, order 1 last).
    Mat<S> to_dense() const {
        int total = static_cast<int>(dim_sym_total(dim, order));
        Mat<S> m(total, total);
        int row_off = 0;
        for (int r = order; r >= 1; --r) {
            int col_off = 0;
            for (int s = order; s >= 1; --s) {
                if (s >= r) {
                    const SymBlock<S>& b = at(r, s);
                    for (int i = 0; i < b.rows(); ++i)
                        for (int j = 0; j < b.cols(); ++j) m(row_off + i, col_off + j) = b(i, j);
                }
                col_off += static_cast<int>(dim_sym(dim, s));
            }
            row_off += static_cast<int>(dim_sym(dim, r));
        }
        return m;
    }
};

using TriangularTruncationD = TriangularTruncation<double>;

// Truncated (x)-exponential of a vector strip with zero order-0 block: the
// Z_{r,s} are built with the 1/r row recursion
//   Z_{r,s} = (1/r) sum_{j=1}^{s-r+1} C(s,j) Y_j (x) Z_{r-1,s-j},
// which also gives Z_{r,r} = Y_1^{(x)r}.
template <class S>
TriangularTruncation<S> sym_exp_strip(const JetStrip<S>& y, int order) {
    if (y.dst_order != 1) throw std::invalid_argument("sym_exp_strip requires a vector strip");
    if (!y.blocks.empty() && y.blocks[0].entries.max_abs() != 0.0)
        throw std::invalid_argument("sym_exp_strip requires zero order-0 block");
    int n = y.blocks.at(1).dst_dim;
    TriangularTruncation<S> z(order, n);
    z.scalar00 = S(1);
    for (int s = 1; s <= order; ++s) z.at(1, s) = y.block(s);
    for (int r = 2; r <= order; ++r) {
        for (int s = r; s <= order; ++s) {
            SymBlock<S> acc(r, s, n, n);
            for (int j = 1; j <= s - r + 1; ++j) {
                SymBlock<S> term = sym_product(y.block(j), z.at(r - 1, s - j));
                double w = static_cast<double>(binom(s, j)) / r;
                acc.entries += term.entries * S(w);
            }
            z.at(r, s) = std::move(acc);
        }
    }
    return z;
}

// Closed form for the blocks of the strip exponential (sum over partitions
// with the ordered-partition coefficients); used as the independent route in
// tests and the conjecture harness.
template <class S>
SymBlock<S> sym_exp_block_closed(const JetStrip<S>& y, int r, int s) {
    int n = y.blocks.at(1).dst_dim;
    SymBlock<S> acc(r, s, n, n);
    for (const auto& parts : partitions_into(s, r)) {
        std::vector<SymBlock<S>> factors;
        factors.reserve(parts.size());
        for (int p : parts) factors.push_back(y.block(p));
        SymBlock<S> prod = sym_multi_product<S>(factors);
        acc.entries += prod.entries * S(static_cast<double>(partition_coeff(parts)));
    }
    return acc;
}

// Block back-substitution inverse of a triangular truncation. Throws
// SingularBlockError naming the offending order when a diagonal block is
// numerically singular.
struct SingularBlockError : std::runtime_error {
    int order;
    explicit SingularBlockError(int order_, const std::string& what)
        : std::runtime_error(what), order(order_) {}
};

template <class S>
TriangularTruncation<S> triangular_inverse(const TriangularTruncation<S>& t) {
    TriangularTruncation<S> w(t.order, t.dim);
    w.scalar00 = t.scalar00 == S(0) ? S(0) : S(1) / t.scalar00;
    std::vector<Lu<S>> diag_lus;
    diag_lus.reserve(static_cast<std::size_t>(t.order));
    for (int r = 1; r <= t.order; ++r) {
        try {
            diag_lus.emplace_back(t.at(r, r).entries);
        } catch (const SingularMatrixError& e) {
            throw SingularBlockError(r, std::string("singular diagonal block at order ") +
                                            std::to_string(r) + ": " + e.what());
        }
    }
    for (int s = 1; s <= t.order; ++s) {
        for (int r = s; r >= 1; --r) {
            Mat<S> rhs(t.at(r, s).rows(), t.at(r, s).cols());
            if (r == s) rhs = Mat<S>::identity(rhs.rows());
            for (int u = r + 1; u <= s; ++u) {
                Mat<S> prod = t.at(r, u).entries * w.at(u, s).entries;
                for (int i = 0; i < rhs.rows(); ++i)
                    for (int j = 0; j < rhs.cols(); ++j) rhs(i, j) -= prod(i, j);
            }
            w.at(r, s).entries = diag_lus[static_cast<std::size_t>(r - 1)].solve(rhs);
        }
    }
    return w;
}

// Truncated symmetric product of two triangular truncations (with their
// optional scalar parts), per the infinite-matrix product formula
//   C_{r,s} = sum C(s, s1) A_{r1,s1} (x) B_{r-r1, s-s1}.
template <class S>
TriangularTruncation<S> tri_sym_product(const TriangularTruncation<S>& a,
                                        const TriangularTruncation<S>& b) {
    if (a.order != b.order || a.dim != b.dim)
        throw std::invalid_argument("tri_sym_product shape mismatch");
    int n = a.dim;
    TriangularTruncation<S> c(a.order, n);
    c.scalar00 = a.scalar00 * b.scalar00;
    for (int r = 1; r <= a.order; ++r) {
        for (int s = r; s <= a.order; ++s) {
            SymBlock<S> acc(r, s, n, n);
            for (int r1 = 0; r1 <= r; ++r1) {
                for (int s1 = 0; s1 <= s; ++s1) {
                    int r2 = r - r1, s2 = s - s1;
                    double w = static_cast<double>(binom(s, s1));
                    if (r1 == 0) {
                        if (s1 != 0 || a.scalar00 == S(0)) continue;  // A has only (0,0) outside the wedge
                        if (r2 < 1 || r2 > s2 || s2 > a.order) continue;
                        acc.entries += b.at(r2, s2).entries * (a.scalar00 * S(w));
                    } else if (r2 == 0) {
                        if (s2 != 0 || b.scalar00 == S(0)) continue;
                        if (r1 > s1 || s1 > a.order) continue;
                        acc.entries += a.at(r1, s1).entries * (b.scalar00 * S(w));
                    } else {
                        if (r1 > s1 || r2 > s2 || s1 > a.order || s2 > a.order) continue;
                        SymBlock<S> term = sym_product(a.at(r1, s1), b.at(r2, s2));
                        acc.entries += term.entries * S(w);
                    }
                }
            }
            c.at(r, s) = std::move(acc);
        }
    }
    return c;
}

}  // namespace varjet
