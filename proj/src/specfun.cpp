#include <cmath>
#include <limits>
#include <stdexcept>

#include "systems.hpp"

namespace varjet {

double hyp2f1(double a, double b, double c, double z) {
    if (std::abs(z) >= 1.0) throw std::domain_error("hyp2f1 requires |z| < 1");
    if (c <= 0.0 && c == std::floor(c))
        throw std::domain_error("hyp2f1 undefined for non-positive integer c");
    double term = 1.0, sum = 1.0;
    for (int n = 0; n < 100000; ++n) {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z;
        sum += term;
        if (std::abs(term) <= 1e-14 * std::abs(sum)) return sum;
    }
    throw std::runtime_error("hyp2f1 series did not converge (z too close to 1)");
}

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

// exponential integral E_1(x) = Gamma(0, x), x > 0
double expint_e1(double x) {
    if (x <= 1.0) {
        // -gamma - ln x + sum (-1)^{k+1} x^k / (k k!)
        double sum = -kEulerGamma - std::log(x);
        double term = 1.0;
        for (int k = 1; k <= 60; ++k) {
            term *= -x / k;
            sum -= term / k;
            if (std::abs(term / k) < 1e-17 * std::max(1.0, std::abs(sum))) break;
        }
        return sum;
    }
    // Lentz continued fraction for E_1
    double tiny = std::numeric_limits<double>::min() * 1e10;
    double b = x + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 300; ++i) {
        double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x);
}

// Lentz continued fraction for Gamma(s, x); good for x >= s + 1
double gamma_cf(double s, double x) {
    double tiny = std::numeric_limits<double>::min() * 1e10;
    double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + s * std::log(x)) * h;
}

// lower incomplete gamma by series, s > 0, best for x < s + 1
double lower_gamma_series(double s, double x) {
    double ap = s, sum = 1.0 / s, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x));
}

double upper_gamma_positive(double s, double x) {
    if (x < s + 1.0) return std::tgamma(s) - lower_gamma_series(s, x);
    return gamma_cf(s, x);
}

}  // namespace

double upper_inc_gamma(double s, double x) {
    if (x <= 0.0) throw std::domain_error("upper_inc_gamma requires x > 0");
    if (s > 0.0) return upper_gamma_positive(s, x);
    if (s == 0.0) return expint_e1(x);
    // shift into (0, 1], then walk the recurrence Gamma(t, x) =
    // (Gamma(t+1, x) - x^t e^{-x}) / t back down; Gamma(0, x) = E_1(x)
    int m = static_cast<int>(std::floor(1.0 - s));
    double t = s + m;
    double g = (t == 0.0) ? expint_e1(x) : upper_gamma_positive(t, x);
    for (int i = 0; i < m; ++i) {
        t -= 1.0;
        if (t == 0.0)
            g = expint_e1(x);
        else
            g = (g - std::pow(x, t) * std::exp(-x)) / t;
    }
    return g;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fb, double fm, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double flm = f(0.5 * (a + m));
    double frm = f(0.5 * (m + b));
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
        return left + right + (left + right - whole) / 15;
    return simpson_rec(f, a, m, fa, fm, flm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, b, fm, fb, frm, right, tol / 2, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_rec(f, a, b, fa, fb, fm, whole, tol, 40);
}

VdpG vdp_g1(double x0) {
    VdpG g;
    g.k = 1;
    g.x0 = x0;
    g.value = [](double x) { return std::exp(x); };
    g.deriv = [](double x) { return std::exp(x); };
    return g;
}

VdpG vdp_g_step(const VdpG& g_km2, int k) {
    VdpG g;
    g.k = k;
    g.x0 = g_km2.x0;
    if (k % 2 == 0) {
        g.value = [](double) { return 0.0; };
        g.deriv = [](double) { return 0.0; };
        return g;
    }
    if (k < 3 || g_km2.k != k - 2)
        throw std::invalid_argument("vdp_g_step needs the (k-2)-nd coefficient and odd k >= 3");
    double x0 = g_km2.x0;
    auto prev_value = g_km2.value;
    auto prev_deriv = g_km2.deriv;
    auto bracket = [prev_value, prev_deriv, k](double xi) {
        return (k - 2) * prev_value(xi) - xi * prev_deriv(xi);
    };
    auto integrand = [bracket, k](double xi) {
        return (k - 1.0) * k * (xi - 1.0) * xi * xi * std::exp(-k * xi) * bracket(xi);
    };
    g.value = [integrand, x0, k](double x) {
        return std::exp(k * x) * adaptive_simpson(integrand, x0, x, 1e-12);
    };
    auto value_fn = g.value;
    g.deriv = [value_fn, bracket, k](double x) {
        return k * value_fn(x) + (k - 1.0) * k * (x - 1.0) * x * x * bracket(x);
    };
    return g;
}

}  // namespace varjet
