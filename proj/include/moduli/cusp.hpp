#pragma once

// Cusp data of the uniformized sphere: the leading Hauptmodul coefficients.
//
// Near a finite puncture p the covering map expands as
//   J(sigma(zeta)) = p + a(1) q + a(2) q^2 + ...,     q = e^{2 pi i zeta},
// and near infinity as a(-1)/q + a(0) + a(1) q + ....  Two independent
// extraction routes are provided:
//
//  * extract_h reads |a(1)|^2 (resp. |a(-1)|^2) off the hyperbolic density
//    along a ray into the cusp: E(r) = log r^2 + 2 e^{-phi/2} / r tends to
//    log h with defect O(r log r), accelerated by a geometric tail estimate.
//
//  * local_fourier inverts tau on a horocycle around the cusp by Newton
//    continuation and reads all leading coefficients off a discrete Fourier
//    transform; the walk closes up after one period, which validates the
//    inversion globally.
//
// The translation ambiguity of the cusp scaling shifts a(k) by a phase
// e^{2 pi i k s}; every consumed quantity (|a(k)|, a(2)/a(1)^2) is invariant.

#include "moduli/develop.hpp"

namespace moduli {

struct CuspExtractionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CuspLimitOptions {
    double r0_cap = 0.05;   // initial radius cap (finite cusps)
    int depth = 22;         // number of radius halvings / doublings
    int tail_points = 4;    // points entering the tail estimate
};

struct CuspLimit {
    int label = 0;        // 1..n
    double log_h = 0.0;   // log |a(+-1)|^2
    double h = 0.0;
    double err = 0.0;     // tail-estimate uncertainty of log_h
};

namespace detail {

// Accelerated limit of a sequence with asymptotically geometric differences
// (ratio ~ 1/2 here: the defect r log r roughly halves per step).
inline std::pair<double, double> geometric_tail_limit(const std::vector<double>& E, int tail_points) {
    const int K = static_cast<int>(E.size()) - 1;
    if (K < 3) throw CuspExtractionFailed("geometric_tail_limit: too few samples");
    double best = E[static_cast<size_t>(K)];
    double prev_best = E[static_cast<size_t>(K - 1)];
    double err = std::abs(best - prev_best);
    for (int k = K; k > K - tail_points && k >= 2; --k) {
        const double d1 = E[static_cast<size_t>(k)] - E[static_cast<size_t>(k - 1)];
        const double d0 = E[static_cast<size_t>(k - 1)] - E[static_cast<size_t>(k - 2)];
        if (std::abs(d0) < 1e-300) continue;
        const double rho = d1 / d0;
        if (!(std::abs(rho) < 0.95)) continue;
        const double lim = E[static_cast<size_t>(k)] + d1 * rho / (1.0 - rho);
        if (k == K) {
            prev_best = best;
            best = lim;
        } else {
            err = std::max(err, std::abs(lim - best));
        }
    }
    err = std::max(err, std::abs(best - prev_best));
    return {best, err};
}

}  // namespace detail

// Read log h at the given cusp from the metric density along a ray.  The
// density is a function on the surface, so the result is branch-free; the
// frame is reset anyway so that runs do not depend on the walk history.
inline CuspLimit extract_h(DevelopingMap& dev, int label, const CuspLimitOptions& opt = {}) {
    const PunctureConfig& cfg = dev.group().cfg;
    const int n = cfg.n;
    if (label < 1 || label > n) throw InvalidConfiguration("extract_h: label out of range");
    dev.reset();
    const cx u_dir = std::exp(cx(0.0, 0.9));  // fixed generic ray direction

    std::vector<double> E;
    E.reserve(static_cast<size_t>(opt.depth) + 1);

    if (label < n) {
        const cx p = cfg.finite_punctures()[static_cast<size_t>(label - 1)];
        double clear = std::numeric_limits<double>::infinity();
        for (const cx& q : cfg.finite_punctures())
            if (std::abs(q - p) > 0) clear = std::min(clear, std::abs(q - p));
        const double r0 = std::min(opt.r0_cap, 0.4 * clear);

        dev.move_to(p + r0 * u_dir);
        double r = r0;
        for (int k = 0; k <= opt.depth; ++k) {
            auto e = dev.eval(p + r * u_dir);
            E.push_back(std::log(r * r) + 2.0 / (std::sqrt(e.density) * r));
            r *= 0.5;
        }
    } else {
        double maxabs = 1.0;
        for (const cx& q : cfg.finite_punctures()) maxabs = std::max(maxabs, std::abs(q));
        const double R0 = std::max(10.0, 2.0 * maxabs);

        dev.move_to(R0 * u_dir);
        double R = R0;
        for (int k = 0; k <= opt.depth; ++k) {
            auto e = dev.eval(R * u_dir);
            E.push_back(std::log(R * R) - 2.0 / (std::sqrt(e.density) * R));
            R *= 2.0;
        }
    }

    auto [lim, err] = detail::geometric_tail_limit(E, opt.tail_points);
    CuspLimit out;
    out.label = label;
    out.log_h = lim;
    out.h = std::exp(lim);
    out.err = err;
    return out;
}

struct FourierOptions {
    double q0_abs = 1e-3;    // horocycle level |q|
    int samples = 64;        // points per period (power of two)
    int max_k = 8;           // highest reported frequency
    double newton_tol = 1e-12;
    int newton_iterations = 30;
    int circle_segments = 48;  // chords when measuring the deck transformation
};

// Deck transformation picked up by continuing tau once around the puncture,
// starting and ending at the frame's current position.  This is computed on
// the current branch, so its fixed point is the cusp representative actually
// approached by the frame -- which can differ from the stored generator S_i
// by a conjugation when the loop ordering was braided during monodromy.
// The circle is traversed counterclockwise (clockwise for the cusp at
// infinity, so that infinity is enclosed positively).
inline MoebiusMap deck_around_cusp(const DevelopingMap& dev, int label,
                                   int segments = 48) {
    const PunctureConfig& cfg = dev.group().cfg;
    const int n = cfg.n;
    if (label < 1 || label > n) throw InvalidConfiguration("deck_around_cusp: label out of range");
    const bool at_inf = label == n;
    const cx center = at_inf ? cx(0.0) : cfg.finite_punctures()[static_cast<size_t>(label - 1)];
    const cx rel = dev.position() - center;
    const double r = std::abs(rel);
    if (!(r > 0)) throw InvalidConfiguration("deck_around_cusp: frame sits on the center");

    std::vector<cx> path;
    path.reserve(static_cast<size_t>(segments) + 1);
    const double orient = at_inf ? -1.0 : 1.0;
    for (int k = 0; k <= segments; ++k) {
        const double ang = orient * 2.0 * pi * k / segments;
        path.push_back(center + rel * std::exp(cx(0.0, ang)));
    }

    const auto poles = cfg.finite_punctures();
    double poly_clear = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < path.size(); ++i)
        for (const cx& p : poles)
            poly_clear = std::min(poly_clear, segment_point_distance(path[i], path[i + 1], p));
    if (!(poly_clear > 0))
        throw CuspExtractionFailed("deck_around_cusp: circle touches a puncture");
    TransportOptions topt = dev.transport_options();
    topt.clearance = 0.9 * poly_clear;
    PairStateD s1 = transport_polyline(dev.q(), dev.state(), path, poles, topt);

    // Solve phi1 = phi0 * C for the basis-change C; the Moebius action on
    // u/v is by C^T, conjugated into the tau-plane by F.
    const PairStateD& s0 = dev.state();
    const MoebiusMap phi0(s0.u, s0.v, s0.du, s0.dv);
    const MoebiusMap phi1(s1.u, s1.v, s1.du, s1.dv);
    const MoebiusMap c = phi0.inverse() * phi1;
    const MoebiusMap ct(c.a, c.c, c.b, c.d);
    MoebiusMap T = dev.group().F * ct * dev.group().F.inverse();
    if (T.max_imag() > 1e-6)
        throw CuspExtractionFailed("deck_around_cusp: measured deck transformation is not real");
    T = T.real_part();
    if (std::abs(std::abs(T.trace()) - 2.0) > 1e-6)
        throw CuspExtractionFailed("deck_around_cusp: measured deck transformation is not parabolic");
    return T;
}

struct CuspFourier {
    int label = 0;
    int k_min = 1;           // -1 for the cusp at infinity
    std::vector<cx> a;       // a(k_min), a(k_min + 1), ...
    cx q0{};                 // e^{2 pi i zeta_0}: phase origin of the walk
    double closure_error = 0.0;
    double horocycle_height = 0.0;

    cx coeff(int k) const { return a.at(static_cast<size_t>(k - k_min)); }
    double h() const { return std::norm(k_min == -1 ? coeff(-1) : coeff(1)); }
};

// Walk a horocycle once around the cusp, inverting tau by Newton steps, and
// Fourier-transform the puncture-centered samples.  The reference scaling is
// rebuilt from the deck transformation measured on the frame's own branch,
// so the walk is insensitive to how the stored generators were braided; the
// resulting coefficients carry the usual e^{2 pi i k s} phase ambiguity and
// only phase-free combinations are meaningful.
inline CuspFourier local_fourier(DevelopingMap& dev, int label, const FourierOptions& opt = {}) {
    const PunctureConfig& cfg = dev.group().cfg;
    const int n = cfg.n;
    if (label < 1 || label > n) throw InvalidConfiguration("local_fourier: label out of range");
    const bool at_inf = label == n;
    const double Y = -std::log(opt.q0_abs) / (2.0 * pi);

    dev.reset();

    // Entry point of the cusp approach.
    const cx u_dir = std::exp(cx(0.0, 0.9));
    cx w;
    if (at_inf) {
        double maxabs = 1.0;
        for (const cx& q : cfg.finite_punctures()) maxabs = std::max(maxabs, std::abs(q));
        w = std::max(10.0, 2.0 * maxabs) * u_dir;
    } else {
        const cx p = cfg.finite_punctures()[static_cast<size_t>(label - 1)];
        double clear = std::numeric_limits<double>::infinity();
        for (const cx& q : cfg.finite_punctures())
            if (std::abs(q - p) > 0) clear = std::min(clear, std::abs(q - p));
        w = p + std::min(0.05, 0.4 * clear) * u_dir;
    }
    dev.move_to(w);

    // Branch-local cusp scaling.
    const MoebiusMap T = deck_around_cusp(dev, label, opt.circle_segments);
    CP1 x = parabolic_fixed_point(T);
    if (!x.inf) x.z = cx(x.z.real(), 0.0);
    const MoebiusMap sigma = cusp_scaling_at(T, x).first;
    const MoebiusMap sigma_inv = sigma.inverse();
    auto height = [&](const DevelopingMap::Eval& e) { return sigma_inv.apply(e.tau).imag(); };
    {
        auto e = dev.eval_here();
        double last = height(e);
        int guard = 0;
        while (last < Y) {
            if (at_inf)
                w *= 2.0;
            else {
                const cx p = cfg.finite_punctures()[static_cast<size_t>(label - 1)];
                w = p + 0.5 * (w - p);
            }
            e = dev.eval(w);
            const double cur = height(e);
            // Each halving/doubling must gain about log(2)/(2 pi); a drop
            // means the approach is on a wrong deck branch.
            if (cur < last - 0.05)
                throw CuspExtractionFailed("local_fourier: cusp approach left the reference branch");
            last = cur;
            if (++guard > 60)
                throw CuspExtractionFailed("local_fourier: horocycle level not reached");
        }
    }

    // Newton refinement toward tau(w) = sigma(zeta_target).
    auto newton_to = [&](cx zeta_target, cx seed_shift) {
        cx cur = dev.position() + seed_shift;
        for (int it = 0; it < opt.newton_iterations; ++it) {
            auto e = dev.eval(cur);
            cx zeta = sigma_inv.apply(e.tau);
            cx dz = zeta - zeta_target;
            if (std::abs(dz) < opt.newton_tol) return cur;
            // d zeta / d w = (sigma^{-1})'(tau) tau'(w)
            cx dzeta_dw = sigma_inv.derivative(e.tau) * e.dtau;
            cx step = -dz / dzeta_dw;
            double clear = cfg.clearance(cur);
            if (std::abs(step) > 0.5 * clear) step *= 0.5 * clear / std::abs(step);
            cur += step;
        }
        throw CuspExtractionFailed("local_fourier: Newton inversion stalled");
    };

    // First sample: keep the current abscissa, land exactly on the horocycle.
    cx zeta0 = sigma_inv.apply(dev.eval_here().tau);
    zeta0 = cx(zeta0.real(), Y);
    cx w0 = newton_to(zeta0, cx(0.0));

    const int N = opt.samples;
    std::vector<cx> f(static_cast<size_t>(N));
    cx prev = w0;
    for (int j = 0; j < N; ++j) {
        if (j > 0) {
            cx zeta_t = zeta0 + cx(static_cast<double>(j) / N, 0.0);
            auto e = dev.eval(prev);
            cx seed = sigma.derivative(sigma_inv.apply(e.tau)) * (1.0 / static_cast<double>(N)) / e.dtau;
            prev = newton_to(zeta_t, seed);
        }
        f[static_cast<size_t>(j)] = at_inf
            ? prev
            : prev - cfg.finite_punctures()[static_cast<size_t>(label - 1)];
    }
    // One more step closes the period.
    cx w_end;
    {
        cx zeta_t = zeta0 + 1.0;
        auto e = dev.eval(prev);
        cx seed = sigma.derivative(sigma_inv.apply(e.tau)) * (1.0 / static_cast<double>(N)) / e.dtau;
        w_end = newton_to(zeta_t, seed);
    }

    CuspFourier out;
    out.label = label;
    out.k_min = at_inf ? -1 : 1;
    out.horocycle_height = Y;
    out.closure_error = std::abs(w_end - w0);
    out.q0 = std::exp(2.0 * pi * cx(0.0, 1.0) * zeta0);

    const int kmax = std::min(opt.max_k, N / 2 - 1);
    for (int k = out.k_min; k <= kmax; ++k) {
        KahanSumC acc;
        for (int j = 0; j < N; ++j) {
            double ang = -2.0 * pi * k * j / static_cast<double>(N);
            acc.add(f[static_cast<size_t>(j)] * std::exp(cx(0.0, ang)));
        }
        cx dft = acc.value() / static_cast<double>(N);
        out.a.push_back(dft / std::pow(out.q0, k));
    }
    return out;
}

}  // namespace moduli
