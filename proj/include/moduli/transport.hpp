#pragma once

// Analytic continuation of a fundamental solution pair of u'' + (1/2) Q u = 0
// along polygonal paths in the plane, with an embedded Dormand-Prince 5(4)
// stepper.  Templated on the complex scalar so the identical integration code
// runs in double and in extended (MPFR-backed) precision; the Butcher tableau
// is built from exact integer ratios in the working type.

#include <span>

#include "moduli/numerics.hpp"

namespace moduli {

struct PoleTooClose : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal complex template for scalar types without a trustworthy
// std::complex specialization (multiprecision reals).
template <class R>
struct CxT {
    R re{}, im{};
    CxT() = default;
    CxT(R r) : re(std::move(r)), im(R(0)) {}
    CxT(R r, R i) : re(std::move(r)), im(std::move(i)) {}
    explicit CxT(const cx& z) : re(R(z.real())), im(R(z.imag())) {}

    friend CxT operator+(const CxT& a, const CxT& b) { return {a.re + b.re, a.im + b.im}; }
    friend CxT operator-(const CxT& a, const CxT& b) { return {a.re - b.re, a.im - b.im}; }
    friend CxT operator-(const CxT& a) { return {-a.re, -a.im}; }
    friend CxT operator*(const CxT& a, const CxT& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend CxT operator*(const R& s, const CxT& a) { return {s * a.re, s * a.im}; }
    friend CxT operator/(const CxT& a, const CxT& b) {
        R den = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
    }
    CxT& operator+=(const CxT& b) { re += b.re; im += b.im; return *this; }
};

template <class R>
R cx_abs(const CxT<R>& z) {
    using std::sqrt;
    return sqrt(z.re * z.re + z.im * z.im);
}
inline double cx_abs(const cx& z) { return std::abs(z); }

template <class C>
struct ScalarOf {
    using type = typename C::value_type;
};
template <class R>
struct ScalarOf<CxT<R>> {
    using type = R;
};

// Fundamental pair (u, v) with z-derivatives; the Wronskian u v' - v u' is a
// first integral and its drift measures transport quality.
template <class C>
struct PairState {
    C u{}, du{}, v{}, dv{};
    C wronskian() const { return u * dv - v * du; }
};

using PairStateD = PairState<cx>;

inline PairStateD identity_state() {
    PairStateD s;
    s.u = 1.0; s.du = 0.0; s.v = 0.0; s.dv = 1.0;
    return s;
}

struct TransportOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double clearance = 1e-3;   // minimum allowed distance from a segment to a pole
    double min_step = 1e-14;   // in units of the segment parameter
    int max_steps = 400000;
};

inline double segment_point_distance(cx z0, cx z1, cx p) {
    const cx d = z1 - z0;
    const double L2 = std::norm(d);
    if (L2 == 0.0) return std::abs(p - z0);
    double t = ((p - z0).real() * d.real() + (p - z0).imag() * d.imag()) / L2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (z0 + t * d));
}

inline void check_segment_clearance(cx z0, cx z1, std::span<const cx> poles, double clearance) {
    for (const cx& p : poles) {
        double dist = segment_point_distance(z0, z1, p);
        if (dist < clearance)
            throw PoleTooClose("transport: segment passes within " + std::to_string(dist) +
                               " of a singular point (clearance " + std::to_string(clearance) + ")");
    }
}

namespace detail {

// Dormand-Prince 5(4) tableau as integer ratios.
template <class R>
struct Dopri5 {
    R a21, a31, a32, a41, a42, a43, a51, a52, a53, a54, a61, a62, a63, a64, a65;
    R b1, b3, b4, b5, b6;        // 5th-order weights (b2 = b7 = 0)
    R e1, e3, e4, e5, e6, e7;    // b - bhat (e2 = 0)
    Dopri5() {
        auto rat = [](long num, long den) { return R(num) / R(den); };
        a21 = rat(1, 5);
        a31 = rat(3, 40); a32 = rat(9, 40);
        a41 = rat(44, 45); a42 = rat(-56, 15); a43 = rat(32, 9);
        a51 = rat(19372, 6561); a52 = rat(-25360, 2187); a53 = rat(64448, 6561); a54 = rat(-212, 729);
        a61 = rat(9017, 3168); a62 = rat(-355, 33); a63 = rat(46732, 5247); a64 = rat(49, 176);
        a65 = rat(-5103, 18656);
        b1 = rat(35, 384); b3 = rat(500, 1113); b4 = rat(125, 192); b5 = rat(-2187, 6784);
        b6 = rat(11, 84);
        // bhat = (5179/57600, 0, 7571/16695, 393/640, -92097/339200, 187/2100, 1/40)
        e1 = b1 - rat(5179, 57600);
        e3 = b3 - rat(7571, 16695);
        e4 = b4 - rat(393, 640);
        e5 = b5 - rat(-92097, 339200);
        e6 = b6 - rat(187, 2100);
        e7 = R(0) - rat(1, 40);
    }
};

template <class C>
struct Deriv4 {
    C k[4];
};

// State derivative along z(t) = z0 + t * dir for the first-order system on
// (u, u_z, v, v_z).
template <class C, class QFunc>
Deriv4<C> rhs(const QFunc& q, const C& z, const C& dir, const PairState<C>& y) {
    using R = typename ScalarOf<C>::type;
    const C qv = q(z);
    const C half = C(R(1) / R(2));
    Deriv4<C> d;
    d.k[0] = dir * y.du;
    d.k[1] = -(dir * (half * (qv * y.u)));
    d.k[2] = dir * y.dv;
    d.k[3] = -(dir * (half * (qv * y.v)));
    return d;
}

}  // namespace detail

// Transport the pair state along the straight segment z0 -> z1.  The caller
// is responsible for clearance checks when a pole list is available.
template <class C, class QFunc>
PairState<C> transport_segment(const QFunc& q, PairState<C> y, const C& z0, const C& z1,
                               const TransportOptions& opt = {}) {
    using R = typename ScalarOf<C>::type;
    static const detail::Dopri5<R> tab;
    const C dir = z1 - z0;
    using std::sqrt;
    const R seg_len = cx_abs(dir);
    if (seg_len == R(0)) return y;

    auto get = [](const PairState<C>& s, int i) -> const C& {
        switch (i) {
            case 0: return s.u;
            case 1: return s.du;
            case 2: return s.v;
            default: return s.dv;
        }
    };
    auto set = [](PairState<C>& s, int i, const C& val) {
        switch (i) {
            case 0: s.u = val; break;
            case 1: s.du = val; break;
            case 2: s.v = val; break;
            default: s.dv = val; break;
        }
    };

    R t(0);
    R h(1);  // parameter step; first trial covers whole segment, controller shrinks
    const R one(1);
    detail::Deriv4<C> k1 = detail::rhs(q, z0, dir, y);
    int steps = 0;
    const R rtol(opt.rel_tol), atol(opt.abs_tol);

    while (t < one) {
        if (++steps > opt.max_steps)
            throw StepUnderflow("transport: step budget exhausted on segment");
        if (t + h > one) h = one - t;

        PairState<C> y2, y3, y4, y5, y6, ynew;
        auto zat = [&](const R& tt) { return z0 + C(tt) * dir; };

        for (int i = 0; i < 4; ++i) set(y2, i, get(y, i) + h * (tab.a21 * k1.k[i]));
        auto k2 = detail::rhs(q, zat(t + h * tab.a21), dir, y2);
        for (int i = 0; i < 4; ++i)
            set(y3, i, get(y, i) + h * (tab.a31 * k1.k[i] + tab.a32 * k2.k[i]));
        auto k3 = detail::rhs(q, zat(t + h * (R(3) / R(10))), dir, y3);
        for (int i = 0; i < 4; ++i)
            set(y4, i, get(y, i) + h * (tab.a41 * k1.k[i] + tab.a42 * k2.k[i] + tab.a43 * k3.k[i]));
        auto k4 = detail::rhs(q, zat(t + h * (R(4) / R(5))), dir, y4);
        for (int i = 0; i < 4; ++i)
            set(y5, i, get(y, i) + h * (tab.a51 * k1.k[i] + tab.a52 * k2.k[i] + tab.a53 * k3.k[i] +
                                        tab.a54 * k4.k[i]));
        auto k5 = detail::rhs(q, zat(t + h * (R(8) / R(9))), dir, y5);
        for (int i = 0; i < 4; ++i)
            set(y6, i, get(y, i) + h * (tab.a61 * k1.k[i] + tab.a62 * k2.k[i] + tab.a63 * k3.k[i] +
                                        tab.a64 * k4.k[i] + tab.a65 * k5.k[i]));
        auto k6 = detail::rhs(q, zat(t + h), dir, y6);
        for (int i = 0; i < 4; ++i)
            set(ynew, i, get(y, i) + h * (tab.b1 * k1.k[i] + tab.b3 * k3.k[i] + tab.b4 * k4.k[i] +
                                          tab.b5 * k5.k[i] + tab.b6 * k6.k[i]));
        auto k7 = detail::rhs(q, zat(t + h), dir, ynew);

        // Error estimate and max-norm controller.
        R errnorm(0);
        for (int i = 0; i < 4; ++i) {
            C e = h * (tab.e1 * k1.k[i] + tab.e3 * k3.k[i] + tab.e4 * k4.k[i] +
                       tab.e5 * k5.k[i] + tab.e6 * k6.k[i] + tab.e7 * k7.k[i]);
            R sc = atol + rtol * std::max(cx_abs(get(y, i)), cx_abs(get(ynew, i)));
            R en = cx_abs(e) / sc;
            if (en > errnorm) errnorm = en;
        }

        if (errnorm <= one) {
            t = t + h;
            y = ynew;
            k1 = k7;  // first-same-as-last
        }

        // New step size: classic 0.9 err^{-1/5} with clamps.
        R fac;
        if (errnorm > R(0)) {
            using std::pow;
            fac = R(9) / R(10) * pow(one / errnorm, R(1) / R(5));
            if (fac < R(1) / R(5)) fac = R(1) / R(5);
            if (fac > R(5)) fac = R(5);
        } else {
            fac = R(5);
        }
        h = h * fac;
        if (h < R(opt.min_step) && t < one)
            throw StepUnderflow("transport: step size underflow; raise precision or tolerance");
    }
    return y;
}

// Polyline transport with per-segment clearance checks against `poles`.
template <class QFunc>
PairStateD transport_polyline(const QFunc& q, PairStateD y, std::span<const cx> path,
                              std::span<const cx> poles, const TransportOptions& opt = {}) {
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        check_segment_clearance(path[i], path[i + 1], poles, opt.clearance);
        y = transport_segment(q, y, path[i], path[i + 1], opt);
    }
    return y;
}

}  // namespace moduli
