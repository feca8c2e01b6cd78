#pragma once

#include <span>
#include <vector>

#include "symblock.hpp"

namespace varjet {

// Order-K linearized variational system matrix: block at (dst order r,
// src order s), 1 <= r <= s <= K, equals C(s, r-1) A_{s-r+1} (x) Id^{(x)(r-1)}.
// The order-(K-1) corner of the order-K assembly is the order-(K-1) assembly.
struct LveMatrix {
    int order = 0;
    int dim = 0;
    TriangularTruncationD blocks;

    MatD to_dense() const { return blocks.to_dense(); }
};

// a_blocks = [A_0, A_1, ..., A_m] from field_blocks; uses A_1..A_K
LveMatrix assemble_lve(std::span<const SymBlockD> a_blocks, int order);

// Kernel-condition row strip for order k: blocks C(k-1, j) A_j (x) Id^{(x)(k-1-j)}
// for j = 0..k-1; an admissible strip V satisfies
//   sum_j C(k-1,j) (A_j (x) Id^{(x)(k-1-j)})^T V_{k-j} = 0.
struct AhatMatrix {
    int order = 0;  // k-1: the strip annihilates jets of order k
    int dim = 0;
    std::vector<SymBlockD> blocks;  // blocks[j], j = 0..k-1
};

AhatMatrix assemble_ahat(std::span<const SymBlockD> a_blocks, int order_k);

// Per-order infinity norms of the kernel-condition residual for a jet strip
// given as rows f_1..f_K (row k has d_{n,k} entries). When term_scales is
// non-null it receives, per order, the largest infinity norm among the summed
// terms, the natural yardstick for deciding whether a residual is at rounding
// level.
std::vector<double> kernel_residual(std::span<const std::vector<double>> jet_rows,
                                    std::span<const SymBlockD> a_blocks,
                                    std::vector<double>* term_scales = nullptr);

}  // namespace varjet
