#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "exprjet.hpp"
#include "lve.hpp"

using namespace varjet;

namespace {

std::mt19937 rng(99);

double uniform() {
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

SymBlockD random_block(int dst_order, int src_order, int n) {
    SymBlockD b(dst_order, src_order, n, n);
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) b(i, j) = uniform();
    return b;
}

std::vector<SymBlockD> random_a_blocks(int n, int order) {
    std::vector<SymBlockD> a;
    a.push_back(random_block(1, 0, n));
    for (int k = 1; k <= order; ++k) a.push_back(random_block(1, k, n));
    return a;
}

std::vector<SymBlockD> dixon_blocks(double alpha, double x, int order) {
    std::vector<Expression> field;
    field.push_back(parse("alpha*x*(1 - x*cos(y))", {"x", "y"}, {"alpha"}));
    field.push_back(parse("-(alpha-1)*x*sin(y)", {"x", "y"}, {"alpha"}));
    std::vector<double> pt{x, 0.0};
    return field_blocks(field, pt, order, {{"alpha", alpha}});
}

}  // namespace

TEST_CASE("order-5 assembly reproduces the printed binomial pattern") {
    int n = 2, order = 5;
    auto a = random_a_blocks(n, order);
    LveMatrix lve = assemble_lve(a, order);

    // frozen integer coefficient table from the printed order-5 display,
    // rows r = 5..1, cols s = 5..r
    const int expected[5][5] = {
        {5, 0, 0, 0, 0},    // r=5: 5 A1.Id^4
        {10, 4, 0, 0, 0},   // r=4: 10 A2.Id^3, 4 A1.Id^3
        {10, 6, 3, 0, 0},   // r=3
        {5, 4, 3, 2, 0},    // r=2
        {1, 1, 1, 1, 1},    // r=1: A5 A4 A3 A2 A1
    };
    for (int r = order; r >= 1; --r) {
        for (int s = order; s >= r; --s) {
            int coeff = expected[order - r][order - s];
            CHECK(static_cast<double>(binom(s, r - 1)) == doctest::Approx(coeff));
            SymBlockD raw = a[static_cast<std::size_t>(s - r + 1)];
            for (int i = 0; i < r - 1; ++i) raw = sym_product(raw, identity_block<double>(n, 1));
            MatD want = raw.entries * static_cast<double>(coeff);
            CHECK((lve.blocks.at(r, s).entries - want).max_abs() < 1e-12);
        }
    }
}

TEST_CASE("order-1 assembly is A1 and corners nest exactly") {
    int n = 3;
    auto a = random_a_blocks(n, 4);
    LveMatrix l1 = assemble_lve(a, 1);
    CHECK((l1.blocks.at(1, 1).entries - a[1].entries).max_abs() == 0.0);

    LveMatrix l4 = assemble_lve(a, 4);
    LveMatrix l3 = assemble_lve(a, 3);
    for (int r = 1; r <= 3; ++r)
        for (int s = r; s <= 3; ++s)
            CHECK((l4.blocks.at(r, s).entries - l3.blocks.at(r, s).entries).max_abs() == 0.0);
}

TEST_CASE("bottom row of the order-5 system against the partition expansion") {
    // bottom row of A_LVE^5 times the leftmost column of Upsilon_5 equals
    // sum_j A_j sum_{|i|=5} c^5_i Y_{i_1} (x) ... (x) Y_{i_j}
    int n = 2, order = 5;
    auto a = random_a_blocks(n, order);

    JetStripD y;
    y.order = order;
    y.dst_order = 1;
    y.blocks.resize(static_cast<std::size_t>(order) + 1);
    y.blocks[0] = SymBlockD(1, 0, n, n);
    for (int j = 1; j <= order; ++j) y.blocks[static_cast<std::size_t>(j)] = random_block(1, j, n);
    TriangularTruncationD ups = sym_exp_strip(y, order);

    LveMatrix lve = assemble_lve(a, order);
    MatD lhs(n, static_cast<int>(dim_sym(n, order)));
    for (int s = 1; s <= order; ++s) {
        // bottom row blocks are at dst order 1; column blocks Z_{s,5}
        MatD prod = lve.blocks.at(1, s).entries * ups.at(s, order).entries;
        lhs += prod;
    }

    MatD rhs(n, static_cast<int>(dim_sym(n, order)));
    for (int j = 1; j <= order; ++j) {
        MatD inner(static_cast<int>(dim_sym(n, j)), static_cast<int>(dim_sym(n, order)));
        bool any = false;
        for (const auto& parts : partitions_into(order, j)) {
            std::vector<SymBlockD> factors;
            for (int p : parts) factors.push_back(y.blocks[static_cast<std::size_t>(p)]);
            MatD prod = sym_multi_product<double>(factors).entries *
                        static_cast<double>(partition_coeff(parts));
            inner += prod;
            any = true;
        }
        if (!any) continue;
        rhs += a[static_cast<std::size_t>(j)].entries * inner;
    }
    CHECK((lhs - rhs).max_abs() < 1e-10);
}

TEST_CASE("kernel strip weights") {
    int n = 2;
    auto a = random_a_blocks(n, 4);
    AhatMatrix ahat1 = assemble_ahat(a, 1);
    // k=1: the single block is A_0 with weight 1
    CHECK((ahat1.blocks[0].entries - a[0].entries).max_abs() == 0.0);

    AhatMatrix ahat4 = assemble_ahat(a, 4);
    // binomial weights C(3, j) = 1, 3, 3, 1
    const double weights[4] = {1, 3, 3, 1};
    for (int j = 0; j < 4; ++j) {
        SymBlockD raw = a[static_cast<std::size_t>(j)];
        for (int i = 0; i < 3 - j; ++i) raw = sym_product(raw, identity_block<double>(n, 1));
        MatD want = raw.entries * weights[j];
        CHECK((ahat4.blocks[static_cast<std::size_t>(j)].entries - want).max_abs() < 1e-12);
    }
}

TEST_CASE("Dixon degree-1 reference row is annihilated pointwise") {
    double alpha = 3.0;
    for (double x : {0.3, 0.5, 0.7, 0.9}) {
        auto a = dixon_blocks(alpha, x, 1);
        std::vector<std::vector<double>> rows;
        rows.push_back({0.0, std::pow(1.0 - x, 1.0 / alpha - 1.0)});
        auto res = kernel_residual(rows, a);
        CHECK(res[0] < 1e-12);
    }
}

TEST_CASE("kernel residual is zero on the zero jet and flags corruption") {
    int n = 3, order = 3;
    auto a = random_a_blocks(n, order);
    std::vector<std::vector<double>> rows;
    for (int k = 1; k <= order; ++k)
        rows.emplace_back(static_cast<std::size_t>(dim_sym(n, k)), 0.0);
    auto res = kernel_residual(rows, a);
    for (double r : res) CHECK(r == 0.0);

    // corrupt one entry; linearity makes the affected orders visible
    rows[1][2] = 1e-3;
    auto res2 = kernel_residual(rows, a);
    CHECK(res2[1] > 1e-5);
}

TEST_CASE("Dixon printed jets satisfy the kernel condition at sampled states") {
    // f_1, f_2, f_3 from the worked example, evaluated pointwise in x
    double alpha = 3.0;
    for (double x : {0.35, 0.5, 0.65, 0.8}) {
        auto a = dixon_blocks(alpha, x, 3);
        double ia = 1.0 / alpha;
        std::vector<std::vector<double>> rows;
        rows.push_back({0.0, std::pow(1 - x, ia - 1)});
        rows.push_back({0.0, (alpha - 1) / alpha * std::pow(1 - x, ia - 2), 0.0});
        rows.push_back({0.0, (ia - 2) * (ia - 1) * std::pow(1 - x, ia - 3), 0.0,
                        std::pow(1 - x, ia - 2) * (2 * alpha + (alpha - 2) * x - 1) / (alpha - 2)});
        auto res = kernel_residual(rows, a);
        for (double r : res) CHECK(r < 1e-9);
    }
}
