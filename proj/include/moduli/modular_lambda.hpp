#pragma once

// Independent reference for the thrice-punctured sphere: the elliptic modular
// function lambda built from Jacobi theta constants, and the Hauptmodul
// j3 = 1 - 1/lambda fixing the cusp correspondence 0 -> 0, 1 -> 1, ioo -> oo.
// This file deliberately avoids the ODE/monodromy pipeline so it can serve as
// an oracle for it: everything here is theta series plus modular reduction.

#include "moduli/numerics.hpp"

namespace moduli {

// Coefficients of lambda as a power series in the half-period nome
// q = exp(i pi z): lambda = 16 q - 128 q^2 + 704 q^3 - ...
// Derived from lambda = theta2^4 / theta3^4 with
//   theta2 = 2 q^{1/4} sum q^{m(m+1)},  theta3 = 1 + 2 sum q^{m^2}.
inline Series lambda_series(size_t len) {
    Series A(len, 0.0);  // sum_{m>=0} q^{m(m+1)}
    for (size_t m = 0;; ++m) {
        size_t e = m * (m + 1);
        if (e >= len) break;
        A[e] += 1.0;
    }
    Series B(len, 0.0);  // theta3 = 1 + 2 sum_{m>=1} q^{m^2}
    B[0] = 1.0;
    for (size_t m = 1;; ++m) {
        size_t e = m * m;
        if (e >= len) break;
        B[e] += 2.0;
    }
    Series A4 = series_pow(A, 4, len);
    Series B4 = series_pow(B, 4, len);
    Series ratio = series_div(A4, B4, len);
    // lambda = 16 q * ratio
    Series lam(len, 0.0);
    for (size_t k = 0; k + 1 < len; ++k) lam[k + 1] = 16.0 * ratio[k];
    return lam;
}

namespace detail {

inline cx theta2_over_q14(cx q) {
    // theta2 / (2 q^{1/4}) = sum_{m>=0} q^{m(m+1)}; consecutive exponents
    // differ by 2m, so the terms build multiplicatively.
    cx acc = 1.0;
    cx term = 1.0;
    const cx q2 = q * q;
    cx step = 1.0;  // q^{2(m-1)} entering iteration m
    for (int m = 1; m < 64; ++m) {
        step *= q2;
        term *= step;  // term = q^{m(m+1)}
        acc += term;
        if (std::abs(term) < 1e-19 * std::abs(acc)) break;
    }
    return acc;
}

inline cx theta3_sum(cx q) {
    cx acc = 1.0;
    for (int m = 1; m < 64; ++m) {
        cx term = std::pow(q, m * m);
        acc += 2.0 * term;
        if (std::abs(term) < 1e-19 * std::abs(acc)) break;
    }
    return acc;
}

// lambda via direct series at the given point; accurate once Im z is not
// small (the reduced domain guarantees Im z >= sqrt(3)/2).
inline cx lambda_direct(cx z) {
    cx q = std::exp(cx(0.0, pi) * z);
    cx a = theta2_over_q14(q);
    cx b = theta3_sum(q);
    cx r = a / b;
    cx r4 = r * r * r * r;
    return 16.0 * q * r4;
}

}  // namespace detail

// lambda(z) for z in the upper half-plane, via reduction to the standard
// PSL(2, Z) fundamental domain while tracking the induced anharmonic Moebius
// action on the lambda value: under z -> z + 1 the value maps by
// v -> v/(v-1), and under z -> -1/z by v -> 1 - v (both involutions).
inline cx lambda_value(cx z) {
    if (!(z.imag() > 0.0)) throw std::invalid_argument("lambda_value: point not in upper half-plane");
    // Accumulate the anharmonic transformation as a Moebius matrix acting on
    // the reduced value.
    cx ma = 1.0, mb = 0.0, mc = 0.0, md = 1.0;  // lambda(z0) = (ma v + mb)/(mc v + md)
    auto compose_T = [&](long long k) {
        // v -> v/(v-1) applied |k| mod 2 times (involution).
        if (k % 2 == 0) return;
        // m <- m o T with T = [[1,0],[1,-1]]
        cx na = ma + mb, nb = -mb, nc = mc + md, nd = -md;
        ma = na; mb = nb; mc = nc; md = nd;
    };
    auto compose_S = [&]() {
        // v -> 1 - v: matrix [[-1, 1], [0, 1]]
        cx na = -ma, nb = ma + mb, nc = -mc, nd = mc + md;
        ma = na; mb = nb; mc = nc; md = nd;
    };
    for (int iter = 0; iter < 200; ++iter) {
        double k = std::nearbyint(z.real());
        if (k != 0.0) {
            z -= k;
            compose_T(static_cast<long long>(k));
        }
        if (std::norm(z) < 1.0 - 1e-15) {
            z = -1.0 / z;
            compose_S();
        } else {
            break;
        }
    }
    cx v = detail::lambda_direct(z);
    return (ma * v + mb) / (mc * v + md);
}

// Hauptmodul with cusp values j3(0) = 0, j3(1) = 1, j3(i oo) = oo.
inline cx j3_value(cx z) {
    cx lam = lambda_value(z);
    return 1.0 - 1.0 / lam;
}

}  // namespace moduli
