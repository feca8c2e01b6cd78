#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "symblock.hpp"

using namespace varjet;

namespace {

std::mt19937 rng(12345);

double uniform() {
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

SymBlockD random_block(int dst_order, int src_order, int n, int m) {
    SymBlockD b(dst_order, src_order, n, m);
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) b(i, j) = uniform();
    return b;
}

std::vector<double> random_vec(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = uniform();
    return v;
}

// independent coordinate convolution used by the oracles below: monomial
// coordinates multiply by adding exponent vectors, no extra weights
std::vector<double> convolve_coords(int n, int oa, const std::vector<double>& a, int ob,
                                    const std::vector<double>& b) {
    const auto& basis_a = lex_basis(n, oa);
    const auto& basis_b = lex_basis(n, ob);
    std::vector<double> out(static_cast<std::size_t>(dim_sym(n, oa + ob)), 0.0);
    for (std::size_t i = 0; i < basis_a.size(); ++i)
        for (std::size_t j = 0; j < basis_b.size(); ++j)
            out[static_cast<std::size_t>(lex_rank(basis_a[i].plus(basis_b[j])))] += a[i] * b[j];
    return out;
}

std::vector<double> apply_block(const SymBlockD& a, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(a.rows()), 0.0);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) y[static_cast<std::size_t>(i)] += a(i, j) * x[static_cast<std::size_t>(j)];
    return y;
}

double max_abs_diff(const MatD& a, const MatD& b) {
    return (a - b).max_abs();
}

JetStripD random_strip(int n, int order) {
    JetStripD y;
    y.order = order;
    y.dst_order = 1;
    y.blocks.resize(static_cast<std::size_t>(order) + 1);
    y.blocks[0] = SymBlockD(1, 0, n, n);  // zero
    for (int j = 1; j <= order; ++j) y.blocks[static_cast<std::size_t>(j)] = random_block(1, j, n, n);
    return y;
}

}  // namespace

TEST_CASE("symmetric product of two coordinate rows") {
    // u = e1^T, v = e2^T as (0,1)-blocks over K^2; u (x) v = (0, 1/2, 0)
    SymBlockD u(0, 1, 2, 2), v(0, 1, 2, 2);
    u(0, 0) = 1.0;
    v(0, 1) = 1.0;
    SymBlockD w = sym_product(u, v);
    CHECK(w.dst_order == 0);
    CHECK(w.src_order == 2);
    CHECK(w(0, 0) == doctest::Approx(0.0));
    CHECK(w(0, 1) == doctest::Approx(0.5));
    CHECK(w(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("identity functoriality and diagonal squares") {
    SymBlockD id2 = identity_block<double>(2, 1);
    SymBlockD sq = sym_power(id2, 2);
    CHECK(max_abs_diff(sq.entries, MatD::identity(3)) < 1e-15);

    SymBlockD d(1, 1, 2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = -3.0;
    SymBlockD d2 = sym_power(d, 2);
    MatD expect(3, 3);
    expect(0, 0) = 4.0;
    expect(1, 1) = -6.0;
    expect(2, 2) = 9.0;
    CHECK(max_abs_diff(d2.entries, expect) < 1e-14);
}

TEST_CASE("row powers") {
    SymBlockD e1t(0, 1, 2, 2);
    e1t(0, 0) = 1.0;
    SymBlockD p = sym_power(e1t, 2);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(0, 1) == doctest::Approx(0.0));
    CHECK(p(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("product acts on vector powers the way polynomial maps compose") {
    // (A (x) B) v^{(x)(p+q)} = (A v^{(x)p}) (x) (B v^{(x)q}), with the right
    // side convolved by the independent coordinate-product helper
    for (int n = 2; n <= 3; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            int i1 = trial % 3, i2 = (trial / 3) % 3;
            int j1 = 1 + trial % 2, j2 = 1 + (trial / 2) % 2;
            SymBlockD a = random_block(i1, j1, n, n);
            SymBlockD b = random_block(i2, j2, n, n);
            SymBlockD c = sym_product(a, b);
            auto v = random_vec(n);
            auto lhs = apply_block(c, sym_vector_power(v, j1 + j2));
            auto rhs = convolve_coords(n, i1, apply_block(a, sym_vector_power(v, j1)), i2,
                                       apply_block(b, sym_vector_power(v, j2)));
            REQUIRE(lhs.size() == rhs.size());
            for (std::size_t i = 0; i < lhs.size(); ++i)
                CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-11));
        }
    }
}

TEST_CASE("commutativity, bilinearity, associativity, scalar pull-out") {
    for (int n = 2; n <= 3; ++n) {
        for (int trial = 0; trial < 25; ++trial) {
            SymBlockD a = random_block(1, 1, n, n);
            SymBlockD b = random_block(1, 2, n, n);
            SymBlockD c = random_block(1, 1, n, n);

            CHECK(max_abs_diff(sym_product(a, b).entries, sym_product(b, a).entries) < 1e-11);

            SymBlockD apc = a;
            apc.entries += c.entries;
            MatD lhs = sym_product(apc, b).entries;
            MatD rhs = sym_product(a, b).entries + sym_product(c, b).entries;
            CHECK(max_abs_diff(lhs, rhs) < 1e-11);

            MatD assoc1 = sym_product(sym_product(a, b), c).entries;
            MatD assoc2 = sym_product(a, sym_product(b, c)).entries;
            CHECK(max_abs_diff(assoc1, assoc2) < 1e-11);

            SymBlockD sa = a;
            sa.entries = sa.entries * 2.5;
            CHECK(max_abs_diff(sym_product(sa, b).entries, sym_product(a, b).entries * 2.5) < 1e-11);
        }
    }
}

TEST_CASE("product with a zero factor vanishes, generic products do not") {
    SymBlockD z(1, 1, 2, 2);
    SymBlockD a = random_block(1, 1, 2, 2);
    CHECK(sym_product(z, a).entries.max_abs() == 0.0);
    for (int trial = 0; trial < 10; ++trial) {
        SymBlockD x = random_block(1, 1, 3, 3);
        SymBlockD y = random_block(1, 2, 3, 3);
        CHECK(sym_product(x, y).entries.max_abs() > 1e-8);
    }
}

TEST_CASE("sym_vector_power uses multinomial coordinates") {
    std::vector<double> v{0.7, -1.3};
    auto p = sym_vector_power(v, 2);
    CHECK(p[0] == doctest::Approx(0.7 * 0.7));
    CHECK(p[1] == doctest::Approx(2 * 0.7 * -1.3));
    CHECK(p[2] == doctest::Approx(-1.3 * -1.3));

    std::vector<double> e1{1.0, 0.0, 0.0};
    auto q = sym_vector_power(e1, 4);
    CHECK(q[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(0.0));
}

TEST_CASE("square-matrix power acts as the symmetric power of the action") {
    // A v1 (x) A v2 (x) ... = A^{(x)m} (v1 (x) ... (x) vm)
    for (int trial = 0; trial < 10; ++trial) {
        int n = 2 + trial % 2;
        SymBlockD a = random_block(1, 1, n, n);
        auto v1 = random_vec(n), v2 = random_vec(n), v3 = random_vec(n);
        auto av1 = apply_block(a, v1), av2 = apply_block(a, v2), av3 = apply_block(a, v3);
        auto lhs = convolve_coords(n, 2, convolve_coords(n, 1, av1, 1, av2), 1, av3);
        auto vvv = convolve_coords(n, 2, convolve_coords(n, 1, v1, 1, v2), 1, v3);
        auto rhs = apply_block(sym_power(a, 3), vvv);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-11));
    }
}

TEST_CASE("mixed product identity for two square matrices") {
    // (A (x) B)(X1 (x) X2) = 1/2 (A X1 (x) B X2 + B X1 (x) A X2).
    // Holds for (1,1)-factors, where it is the polarization of the action
    // property; the printed (k,k) generalization contradicts the defining
    // column formula for k >= 2 and is not asserted here.
    for (int n = 2; n <= 3; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            SymBlockD a = random_block(1, 1, n, n);
            SymBlockD b = random_block(1, 1, n, n);
            SymBlockD x1 = random_block(1, 1, n, n);
            SymBlockD x2 = random_block(1, 2, n, n);
            MatD lhs = (sym_product(a, b).entries * sym_product(x1, x2).entries);
            SymBlockD ax1 = x1, bx2 = x2, bx1 = x1, ax2 = x2;
            ax1.entries = a.entries * x1.entries;
            bx2.entries = b.entries * x2.entries;
            bx1.entries = b.entries * x1.entries;
            ax2.entries = a.entries * x2.entries;
            MatD rhs = (sym_product(ax1, bx2).entries + sym_product(bx1, ax2).entries) * 0.5;
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("mixed product identity symmetrized over all factor permutations") {
    // ((x)A_i)((x)X_i) = 1/m! sum_sigma (x) A_sigma(i) X_i for (1,1) factors
    for (int n = 2; n <= 3; ++n) {
        for (int m = 2; m <= 3; ++m) {
            std::vector<SymBlockD> a, x;
            for (int i = 0; i < m; ++i) {
                a.push_back(random_block(1, 1, n, n));
                x.push_back(random_block(1, 1 + i % 2, n, n));
            }
            MatD lhs = sym_multi_product<double>(a).entries * sym_multi_product<double>(x).entries;
            std::vector<int> perm(static_cast<std::size_t>(m));
            std::iota(perm.begin(), perm.end(), 0);
            MatD rhs;
            bool first = true;
            int count = 0;
            do {
                std::vector<SymBlockD> terms;
                for (int i = 0; i < m; ++i) {
                    SymBlockD t = x[static_cast<std::size_t>(i)];
                    t.entries = a[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].entries *
                                x[static_cast<std::size_t>(i)].entries;
                    terms.push_back(t);
                }
                MatD p = sym_multi_product<double>(terms).entries;
                if (first) {
                    rhs = p;
                    first = false;
                } else {
                    rhs += p;
                }
                ++count;
            } while (std::next_permutation(perm.begin(), perm.end()));
            rhs = rhs * (1.0 / count);
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("mixed product identity with identity factors") {
    // (A (x) Id^{(x)m-1})(X1 (x) ... (x) Xm) = 1/m sum (A Xi) (x) rest
    for (int n = 2; n <= 3; ++n) {
        for (int m = 2; m <= 4; ++m) {
            SymBlockD a = random_block(1, 1, n, n);
            std::vector<SymBlockD> xs;
            for (int i = 0; i < m; ++i) xs.push_back(random_block(1, 1 + i % 2, n, n));

            std::vector<SymBlockD> lhs_factors{a};
            for (int i = 1; i < m; ++i) lhs_factors.push_back(identity_block<double>(n, 1));
            SymBlockD lhs_op = sym_multi_product<double>(lhs_factors);
            SymBlockD xprod = sym_multi_product<double>(xs);
            MatD lhs = lhs_op.entries * xprod.entries;

            MatD rhs;
            bool first = true;
            for (int i = 0; i < m; ++i) {
                std::vector<SymBlockD> terms;
                SymBlockD axi = xs[static_cast<std::size_t>(i)];
                axi.entries = a.entries * axi.entries;
                terms.push_back(axi);
                for (int j = 0; j < m; ++j)
                    if (j != i) terms.push_back(xs[static_cast<std::size_t>(j)]);
                MatD term = sym_multi_product<double>(terms).entries;
                if (first) {
                    rhs = term;
                    first = false;
                } else {
                    rhs += term;
                }
            }
            rhs = rhs * (1.0 / m);
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("pivot-row product identity") {
    // (X (x) e_i^T)(v (x) Id^{(x)k-1}) = (k-1)/k X (v (x) Id^{(x)k-2}) (x) e_i^T + v_i/k X
    for (int n = 2; n <= 3; ++n) {
        for (int k = 2; k <= 3; ++k) {
            SymBlockD x = random_block(k - 1, k - 1, n, n);
            auto v = random_vec(n);
            SymBlockD vcol(1, 0, n, n);
            for (int r = 0; r < n; ++r) vcol(r, 0) = v[static_cast<std::size_t>(r)];
            for (int i = 0; i < n; ++i) {
                SymBlockD eit(0, 1, n, n);
                eit(0, i) = 1.0;

                std::vector<SymBlockD> lf{x, eit};
                SymBlockD lhs_op = sym_multi_product<double>(lf);
                std::vector<SymBlockD> rf{vcol};
                for (int j = 0; j < k - 1; ++j) rf.push_back(identity_block<double>(n, 1));
                SymBlockD rhs_op = sym_multi_product<double>(rf);
                MatD lhs = lhs_op.entries * rhs_op.entries;

                MatD rhs;
                {
                    std::vector<SymBlockD> vf{vcol};
                    for (int j = 0; j < k - 2; ++j) vf.push_back(identity_block<double>(n, 1));
                    SymBlockD vid = sym_multi_product<double>(vf);  // (k-1, k-2)
                    SymBlockD xvid(x.dst_order, vid.src_order, n, n);
                    xvid.entries = x.entries * vid.entries;
                    SymBlockD t1 = sym_product(xvid, eit);
                    rhs = t1.entries * ((k - 1.0) / k);
                    rhs += x.entries * (v[static_cast<std::size_t>(i)] / k);
                }
                CHECK(max_abs_diff(lhs, rhs) < 1e-10);
            }
        }
    }
}

TEST_CASE("strip exponential blocks reproduce the printed order-5 display") {
    for (int n = 2; n <= 3; ++n) {
        JetStripD y = random_strip(n, 5);
        TriangularTruncationD z = sym_exp_strip(y, 5);

        for (int r = 1; r <= 5; ++r)
            CHECK(max_abs_diff(z.at(r, r).entries, sym_power(y.block(1), r).entries) < 1e-11);

        MatD z23 = sym_product(y.block(1), y.block(2)).entries * 3.0;
        CHECK(max_abs_diff(z.at(2, 3).entries, z23) < 1e-11);

        std::vector<SymBlockD> f1{y.block(1), y.block(1), y.block(3)};
        std::vector<SymBlockD> f2{y.block(1), y.block(2), y.block(2)};
        MatD z35 = sym_multi_product<double>(f1).entries * 10.0 +
                   sym_multi_product<double>(f2).entries * 15.0;
        CHECK(max_abs_diff(z.at(3, 5).entries, z35) < 1e-10);

        // closed form over ordered partitions agrees with the recursion
        for (int r = 1; r <= 5; ++r)
            for (int s = r; s <= 5; ++s)
                CHECK(max_abs_diff(z.at(r, s).entries, sym_exp_block_closed(y, r, s).entries) < 1e-10);
    }
}

TEST_CASE("exponential of a sum of strips is the product of exponentials") {
    for (int n = 2; n <= 3; ++n) {
        JetStripD a = random_strip(n, 4);
        JetStripD b = random_strip(n, 4);
        JetStripD sum = a;
        for (int j = 1; j <= 4; ++j) sum.blocks[static_cast<std::size_t>(j)].entries += b.block(j).entries;
        TriangularTruncationD lhs = sym_exp_strip(sum, 4);
        TriangularTruncationD rhs = tri_sym_product(sym_exp_strip(a, 4), sym_exp_strip(b, 4));
        for (int r = 1; r <= 4; ++r)
            for (int s = r; s <= 4; ++s) CHECK(max_abs_diff(lhs.at(r, s).entries, rhs.at(r, s).entries) < 1e-10);
    }
}

TEST_CASE("exponential of a matrix product splits into ordinary products") {
    // for square (1,1)-blocks the law reduces order by order to
    // (AB)^{(x)r} = A^{(x)r} B^{(x)r}
    for (int n = 2; n <= 3; ++n) {
        SymBlockD a = random_block(1, 1, n, n);
        SymBlockD b = random_block(1, 1, n, n);
        SymBlockD ab = a;
        ab.entries = a.entries * b.entries;
        for (int r = 1; r <= 4; ++r) {
            MatD lhs = sym_power(ab, r).entries;
            MatD rhs = sym_power(a, r).entries * sym_power(b, r).entries;
            CHECK(max_abs_diff(lhs, rhs) < 1e-9);
        }
    }
}

TEST_CASE("inverse powers commute with symmetric powers") {
    for (int trial = 0; trial < 5; ++trial) {
        int n = 2 + trial % 2;
        SymBlockD a = random_block(1, 1, n, n);
        for (int i = 0; i < n; ++i) a(i, i) += 3.0;  // keep well-conditioned
        SymBlockD ainv = a;
        ainv.entries = inverse(a.entries);
        for (int k = 2; k <= 3; ++k) {
            MatD lhs = sym_power(ainv, k).entries;
            MatD rhs = inverse(sym_power(a, k).entries);
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("Leibniz rule and the Sym^k differential equation by finite differences") {
    // path Y(t) = Y0 + t Y1 + t^2 Y2 with exact derivative, A := Y' Y^{-1}
    int n = 3;
    MatD y0 = MatD::identity(n), y1(n, n), y2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            y1(i, j) = uniform();
            y2(i, j) = uniform();
        }
    auto path = [&](double t) {
        MatD y = y0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) y(i, j) += t * y1(i, j) + t * t * y2(i, j);
        return y;
    };
    double t = 0.37, h = 1e-5;
    MatD yt = path(t);
    MatD ydot = y1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ydot(i, j) += 2 * t * y2(i, j);
    MatD a_of_t = ydot * inverse(yt);
    SymBlockD a_blk(1, 1, n, n);
    a_blk.entries = a_of_t;
    SymBlockD y_blk(1, 1, n, n);
    y_blk.entries = yt;

    for (int k = 2; k <= 3; ++k) {
        SymBlockD yp = y_blk, ym = y_blk;
        yp.entries = path(t + h);
        ym.entries = path(t - h);
        MatD fd = (sym_power(yp, k).entries - sym_power(ym, k).entries) * (1.0 / (2 * h));
        std::vector<SymBlockD> lead{a_blk};
        for (int j = 1; j < k; ++j) lead.push_back(identity_block<double>(n, 1));
        MatD rhs = sym_multi_product<double>(lead).entries * sym_power(y_blk, k).entries * double(k);
        double scale = std::max(fd.max_abs(), rhs.max_abs());
        CHECK(max_abs_diff(fd, rhs) / scale < 1e-6);
    }

    // Leibniz: d(X (x) Y) = dX (x) Y + X (x) dY on two independent paths
    auto pathB = [&](double t_) {
        MatD y = y0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) y(i, j) += t_ * y2(i, j) - 0.5 * t_ * t_ * y1(i, j);
        return y;
    };
    SymBlockD xb(1, 1, n, n), yb(1, 1, n, n);
    xb.entries = path(t);
    yb.entries = pathB(t);
    SymBlockD xp = xb, xm = xb, ypb = yb, ymb = yb;
    xp.entries = path(t + h);
    xm.entries = path(t - h);
    ypb.entries = pathB(t + h);
    ymb.entries = pathB(t - h);
    MatD fd = (sym_product(xp, ypb).entries - sym_product(xm, ymb).entries) * (1.0 / (2 * h));
    SymBlockD dx = xb, dy = yb;
    dx.entries = ydot;
    MatD dyb(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dyb(i, j) = y2(i, j) - t * y1(i, j);
    dy.entries = dyb;
    MatD rhs = sym_product(dx, yb).entries + sym_product(xb, dy).entries;
    double scale = std::max(fd.max_abs(), rhs.max_abs());
    CHECK(max_abs_diff(fd, rhs) / scale < 1e-6);
}

TEST_CASE("inhomogeneous product systems by finite differences") {
    // dXi = A Xi + Bi  =>  d (x)Xi = m (A (x) Id^{(x)m-1}) (x)Xi + sum Bi (x) rest
    int n = 2;
    double t = 0.21, h = 1e-5;
    MatD a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = uniform();
    auto xpath = [&](double t_, int which) {
        SymBlockD x(1, 1 + which % 2, n, n);
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j)
                x(i, j) = std::sin((1 + which) * t_ + i + 2 * j) + 0.3 * which;
        return x;
    };
    int m = 3;
    std::vector<SymBlockD> xs, dxs, bs;
    for (int i = 0; i < m; ++i) {
        SymBlockD x = xpath(t, i);
        SymBlockD xp = xpath(t + h, i), xm = xpath(t - h, i);
        SymBlockD dx_exact = x;
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c)
                dx_exact(r, c) = (1 + i) * std::cos((1 + i) * t + r + 2 * c);
        SymBlockD b = x;
        b.entries = dx_exact.entries - a * x.entries;
        xs.push_back(x);
        dxs.push_back(dx_exact);
        bs.push_back(b);
        (void)xp;
        (void)xm;
    }
    // finite difference of the product
    auto product_at = [&](double t_) {
        std::vector<SymBlockD> fs;
        for (int i = 0; i < m; ++i) fs.push_back(xpath(t_, i));
        return sym_multi_product<double>(fs);
    };
    MatD fd = (product_at(t + h).entries - product_at(t - h).entries) * (1.0 / (2 * h));

    SymBlockD a_blk(1, 1, n, n);
    a_blk.entries = a;
    std::vector<SymBlockD> lead{a_blk};
    for (int j = 1; j < m; ++j) lead.push_back(identity_block<double>(n, 1));
    MatD rhs = sym_multi_product<double>(lead).entries * sym_multi_product<double>(xs).entries * double(m);
    for (int i = 0; i < m; ++i) {
        std::vector<SymBlockD> terms{bs[static_cast<std::size_t>(i)]};
        for (int j = 0; j < m; ++j)
            if (j != i) terms.push_back(xs[static_cast<std::size_t>(j)]);
        rhs += sym_multi_product<double>(terms).entries;
    }
    double scale = std::max(fd.max_abs(), rhs.max_abs());
    CHECK(max_abs_diff(fd, rhs) / scale < 1e-5);
}

TEST_CASE("triangular inverse") {
    // identity truncation inverts to itself
    int n = 2, order = 3;
    TriangularTruncationD t(order, n);
    for (int r = 1; r <= order; ++r) t.at(r, r).entries = MatD::identity(t.at(r, r).rows());
    TriangularTruncationD w = triangular_inverse(t);
    CHECK(max_abs_diff(w.to_dense(), t.to_dense()) < 1e-14);

    // diagonal strip: inverse diagonal blocks are the powers of Y1^{-1}
    JetStripD y = random_strip(n, order);
    for (int j = 2; j <= order; ++j) y.blocks[static_cast<std::size_t>(j)].entries =
        MatD(static_cast<int>(dim_sym(n, 1)), static_cast<int>(dim_sym(n, j)));
    SymBlockD y1(1, 1, n, n);
    y1.entries = MatD(n, n);
    y1(0, 0) = 1.7;
    y1(1, 1) = -0.4;
    y.blocks[1] = y1;
    TriangularTruncationD ups = sym_exp_strip(y, order);
    TriangularTruncationD ups_inv = triangular_inverse(ups);
    SymBlockD y1inv = y1;
    y1inv.entries = inverse(y1.entries);
    for (int r = 1; r <= order; ++r)
        CHECK(max_abs_diff(ups_inv.at(r, r).entries, sym_power(y1inv, r).entries) < 1e-10);

    // random truncation: residual of T T^{-1}
    JetStripD yr = random_strip(n, order);
    yr.blocks[1].entries += MatD::identity(n) * 2.0;
    TriangularTruncationD tr = sym_exp_strip(yr, order);
    TriangularTruncationD tri = triangular_inverse(tr);
    MatD prod = tr.to_dense() * tri.to_dense();
    CHECK(max_abs_diff(prod, MatD::identity(prod.rows())) < 1e-10);

    // singular diagonal block reports the offending order
    TriangularTruncationD bad(2, n);
    bad.at(1, 1).entries = MatD::identity(n);
    // order-2 diagonal left zero
    try {
        triangular_inverse(bad);
        CHECK(false);
    } catch (const SingularBlockError& e) {
        CHECK(e.order == 2);
    }
}
