#pragma once

// Small numerical utilities shared across the library: complex shorthands,
// Gauss-Legendre rules, Neville extrapolation on arbitrary node sets, Kahan
// summation, and the guarded relative-deviation metric used by every check.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace moduli {

using cx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

struct ExtrapolationDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sqr(double x) { return x * x; }
inline double norm_sq(const cx& z) { return std::norm(z); }

// abs with a cheap overflow guard for |a|+|b| style bounds.
inline double abs1(const cx& z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Relative deviation |lhs - rhs| / max(|lhs|, |rhs|, floor).  The floor keeps
// the metric meaningful at points where the true value vanishes (e.g. an
// accessory parameter that is exactly zero by symmetry).
inline double rel_dev(double lhs, double rhs, double floor = 1e-12) {
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), floor});
}
inline double rel_dev(const cx& lhs, const cx& rhs, double floor = 1e-12) {
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), floor});
}

// Compensated accumulation; quadratures sum many small ring contributions and
// plain += loses a digit or two over ~1e5 terms.
struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double value() const { return s; }
};

struct KahanSumC {
    KahanSum re, im;
    void add(const cx& z) { re.add(z.real()); im.add(z.imag()); }
    cx value() const { return {re.value(), im.value()}; }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1], computed once by Newton iteration on the
// Legendre recurrence.  Degrees used here are small (<= 24).
struct GaussRule {
    std::vector<double> x, w;
};

inline const GaussRule& gauss_legendre(int npts) {
    static std::array<GaussRule, 33> cache;  // index by point count, 1..32
    if (npts < 1 || npts > 32) throw std::invalid_argument("gauss_legendre: order out of range");
    GaussRule& r = cache[static_cast<size_t>(npts)];
    if (!r.x.empty()) return r;
    GaussRule fresh;
    fresh.x.resize(static_cast<size_t>(npts));
    fresh.w.resize(static_cast<size_t>(npts));
    const int m = (npts + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double z = std::cos(pi * (i + 0.75) / (npts + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < npts; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = npts * (z * p0 - p1) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        fresh.x[static_cast<size_t>(i)] = -z;
        fresh.x[static_cast<size_t>(npts - 1 - i)] = z;
        fresh.w[static_cast<size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        fresh.w[static_cast<size_t>(npts - 1 - i)] = fresh.w[static_cast<size_t>(i)];
    }
    r = std::move(fresh);
    return r;
}

// ---------------------------------------------------------------------------
// Neville extrapolation to x = 0 through points (x_k, y_k).  Returns the
// highest-order extrapolant together with a two-tier error estimate
// (difference between the last two columns' final entries).
struct ExtrapolationResult {
    double value = 0.0;
    double err = 0.0;
};

inline ExtrapolationResult neville_to_zero(const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
    const size_t n = xs.size();
    if (n != ys.size() || n == 0) throw std::invalid_argument("neville_to_zero: bad input");
    if (n == 1) return {ys[0], std::abs(ys[0])};
    std::vector<double> t = ys;
    double prev = t[0];
    for (size_t m = 1; m < n; ++m) {
        for (size_t i = 0; i + m < n; ++i) {
            const double denom = xs[i + m] - xs[i];
            if (denom == 0.0) throw ExtrapolationDiverged("neville_to_zero: coincident nodes");
            t[i] = (xs[i + m] * t[i] - xs[i] * t[i + 1]) / denom;
        }
        if (m + 1 < n) prev = t[0];
    }
    return {t[0], std::abs(t[0] - prev)};
}

// Richardson step for a central-difference quantity with leading error h^2:
// given D(h) and D(h/2), the h^4-accurate combination is (4 D(h/2) - D(h))/3.
inline double richardson2(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }
inline cx richardson2(const cx& coarse, const cx& fine) { return (4.0 * fine - coarse) / 3.0; }

// ---------------------------------------------------------------------------
// Truncated power-series helpers (dense, double coefficients).  Used by the
// independent q-expansion oracle; lengths stay tiny so the naive algorithms
// are fine.
using Series = std::vector<double>;  // s[k] = coefficient of q^k

inline Series series_mul(const Series& a, const Series& b, size_t len) {
    Series c(len, 0.0);
    for (size_t i = 0; i < a.size() && i < len; ++i)
        for (size_t j = 0; j < b.size() && i + j < len; ++j) c[i + j] += a[i] * b[j];
    return c;
}

// a / b with b[0] != 0.
inline Series series_div(const Series& a, const Series& b, size_t len) {
    if (b.empty() || b[0] == 0.0) throw std::invalid_argument("series_div: zero leading term");
    Series q(len, 0.0);
    for (size_t k = 0; k < len; ++k) {
        double acc = k < a.size() ? a[k] : 0.0;
        for (size_t j = 1; j <= k && j < b.size(); ++j) acc -= b[j] * q[k - j];
        q[k] = acc / b[0];
    }
    return q;
}

inline Series series_pow(const Series& a, int p, size_t len) {
    Series r(len, 0.0);
    r[0] = 1.0;
    for (int i = 0; i < p; ++i) r = series_mul(r, a, len);
    return r;
}

}  // namespace moduli
