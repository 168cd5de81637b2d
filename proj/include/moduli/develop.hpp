#pragma once

// Developing map of a uniformized punctured sphere.  At the solved accessory
// parameters the monodromy group is conjugate into the real matrices; this
// module constructs the conjugator F normalizing the cusps at the punctures
// 0, 1, infinity to the boundary points 0, 1, infinity, hands out the real
// generators S_i and cusp scalings sigma_i, and evaluates the multivalued
// inverse uniformizer tau(w) = F(u(w)/v(w)) together with its derivatives,
// the hyperbolic density, and the first metric derivative:
//
//   e^phi = |tau'|^2 / (Im tau)^2,   phi_w = tau''/tau' + i tau'/Im tau.
//
// tau is continued analytically along explicit paths (one sheet at a time);
// every quantity consumed downstream is deck-invariant, so the sheet choice
// never matters.

#include "moduli/monodromy.hpp"
#include "moduli/solve.hpp"

namespace moduli {

struct RealizationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FuchsianGroupRep {
    PunctureConfig cfg;
    AccessoryParams c;
    cx base{};                       // base point of the transported frame
    MoebiusMap F;                    // tau = F(u/v)
    std::vector<MoebiusMap> S;       // n real generators, label order
    std::vector<CP1> cusp_fixed;     // fixed point of S_i (x_n = infinity)
    std::vector<MoebiusMap> sigma;   // sigma_i(infinity) = cusp i, width-1 stabilizer
    std::vector<int> sigma_sign;     // sigma_i^-1 S_i sigma_i = [[1, sign], [0, 1]]
    double realize_residual = 0.0;   // max imaginary entry over the S_i
    bool flipped = false;            // lower half-plane branch corrected by z -> -z
};

namespace detail {

inline MoebiusMap reflect_entries(const MoebiusMap& m) {
    // Conjugation by z -> -z: [[a, -b], [-c, d]].
    return MoebiusMap(m.a, -m.b, -m.c, m.d);
}

inline double max_imag_of(const std::vector<MoebiusMap>& gens) {
    double r = 0.0;
    for (const MoebiusMap& g : gens) r = std::max(r, g.max_imag());
    return r;
}

}  // namespace detail

// Scaling sigma with sigma(infinity) = x and sigma^{-1} S sigma = [[1, s], [0, 1]],
// s = +-1, for a real parabolic S with fixed point x.
inline std::pair<MoebiusMap, int> cusp_scaling_at(const MoebiusMap& S, const CP1& x) {
    MoebiusMap A = x.inf ? MoebiusMap::identity() : MoebiusMap(x.z, -1.0, 1.0, 0.0);
    MoebiusMap B = A.inverse() * S * A;  // +-[[1, t], [0, 1]]
    if (std::abs(B.c) > 1e-6 * B.scale())
        throw RealizationFailed("cusp_scaling_at: conjugated generator is not triangular");
    const double t = (B.a * B.b).real();  // translation amount of z -> a^2 z + ab
    if (std::abs(t) < 1e-12)
        throw RealizationFailed("cusp_scaling_at: degenerate cusp translation");
    const double s = std::sqrt(std::abs(t));
    return {A * MoebiusMap(s, 0.0, 0.0, 1.0 / s), t > 0 ? 1 : -1};
}

inline FuchsianGroupRep realize_fuchsian(const PunctureConfig& cfg, const AccessoryParams& par,
                                         const MonodromyRep& mono,
                                         double residual_tol = 1e-6) {
    const int n = cfg.n;
    RealizeResult rr = conjugate_into_real(mono.M, residual_tol);

    const MoebiusMap D(-1.0, 0.0, 0.0, 1.0);  // z -> -z
    FuchsianGroupRep best;
    double best_residual = std::numeric_limits<double>::infinity();
    bool found = false;

    for (int flip = 0; flip < 2; ++flip) {
        // Candidate half-plane branch.
        MoebiusMap T = flip ? D * rr.conjugator : rr.conjugator;
        std::vector<MoebiusMap> R(mono.M.size());
        for (size_t i = 0; i < mono.M.size(); ++i) R[i] = T * mono.M[i] * T.inverse();

        // Cusp normalization: the loops around 0, 1, infinity carry labels
        // n-2, n-1, n; their real fixed points go to 0, 1, infinity.
        CP1 x0, x1, xoo;
        try {
            x0 = parabolic_fixed_point(R[static_cast<size_t>(n - 3)]);
            x1 = parabolic_fixed_point(R[static_cast<size_t>(n - 2)]);
            xoo = parabolic_fixed_point(R[static_cast<size_t>(n - 1)]);
        } catch (const NearDegenerate&) {
            continue;
        }
        MoebiusMap N;
        try {
            N = cross_ratio_map(x0, x1, xoo);
        } catch (const NearDegenerate&) {
            continue;
        }
        MoebiusMap F = N * T;

        std::vector<MoebiusMap> S(mono.M.size());
        for (size_t i = 0; i < mono.M.size(); ++i) S[i] = N * R[i] * N.inverse();
        double residual = detail::max_imag_of(S);

        // The frame at the base has (u, v) = (1, 0), so tau(base) = F(inf).
        cx tau_base = F.apply(CP1::infinity()).inf ? cx(0.0, std::numeric_limits<double>::infinity())
                                                   : F.apply(CP1::infinity()).z;
        bool upper = std::isfinite(tau_base.imag()) && tau_base.imag() > 0.0;

        if (residual < residual_tol && upper && residual < best_residual) {
            best.F = F;
            best.S = std::move(S);
            best.flipped = flip != 0;
            best.realize_residual = residual;
            best_residual = residual;
            found = true;
        }
    }
    if (!found)
        throw RealizationFailed(
            "realize_fuchsian: no half-plane branch yields a real, upper-half-plane "
            "normalization (monodromy not Fuchsian at these parameters?)");

    best.cfg = cfg;
    best.c = par;
    best.base = mono.base;
    // The imaginary parts are numerical dust (bounded by realize_residual);
    // zeroing them makes the generators and cusp scalings exactly real.
    for (MoebiusMap& S : best.S) S = S.real_part();

    // Cusp fixed points and scalings.
    best.cusp_fixed.resize(best.S.size());
    best.sigma.resize(best.S.size());
    best.sigma_sign.resize(best.S.size());
    for (size_t i = 0; i < best.S.size(); ++i) {
        CP1 x;
        if (static_cast<int>(i) == n - 3) x = CP1(0.0);
        else if (static_cast<int>(i) == n - 2) x = CP1(1.0);
        else if (static_cast<int>(i) == n - 1) x = CP1::infinity();
        else {
            x = parabolic_fixed_point(best.S[i]);
            if (!x.inf && std::abs(x.z.imag()) > 1e-6)
                throw RealizationFailed("realize_fuchsian: cusp fixed point is not real");
            if (!x.inf) x.z = cx(x.z.real(), 0.0);
        }
        best.cusp_fixed[i] = x;
        std::tie(best.sigma[i], best.sigma_sign[i]) = cusp_scaling_at(best.S[i], x);
    }
    return best;
}

inline FuchsianGroupRep realize_fuchsian(const SolveResult& solved, double residual_tol = 1e-6) {
    return realize_fuchsian(solved.config, solved.c, solved.rep, residual_tol);
}

// Analytic continuation engine for tau.  Keeps one transported frame and
// moves it along routed or explicit paths; evaluations are O(path length).
class DevelopingMap {
public:
    struct Eval {
        cx w{};
        cx tau{};
        cx dtau{};
        cx ddtau{};
        cx phi_w{};
        double density = 0.0;  // e^phi
        double im_tau = 0.0;
    };

    explicit DevelopingMap(FuchsianGroupRep grp, TransportOptions topt = TransportOptions{
                               .rel_tol = 1e-13, .abs_tol = 1e-15})
        : grp_(std::move(grp)), q_(build_q(grp_.cfg, grp_.c)), topt_(topt) {
        punctures_ = grp_.cfg.finite_punctures();
        radii_.resize(punctures_.size());
        for (size_t i = 0; i < punctures_.size(); ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < punctures_.size(); ++j)
                if (j != i) dmin = std::min(dmin, std::abs(punctures_[i] - punctures_[j]));
            radii_[i] = std::min(0.45 * dmin, 1.0);
        }
        reset();
    }

    const FuchsianGroupRep& group() const { return grp_; }
    const RationalQ& q() const { return q_; }
    const TransportOptions& transport_options() const { return topt_; }
    cx position() const { return w_; }
    const PairStateD& state() const { return s_; }
    double wronskian_drift() const { return drift_; }

    void reset() {
        w_ = grp_.base;
        s_ = identity_state();
        drift_ = 0.0;
    }

    // Routed move: detours around punctures, end points may sit close to one.
    void move_to(cx w) {
        if (w == w_) return;
        std::vector<double> clear(punctures_.size());
        for (size_t j = 0; j < punctures_.size(); ++j)
            clear[j] = std::min({0.8 * radii_[j], 0.9 * std::abs(w - punctures_[j]),
                                 0.9 * std::abs(w_ - punctures_[j])});
        std::vector<cx> path = detail::route(w_, w, punctures_, clear);
        move_along(path);
    }

    // Explicit polyline move (first point must be the current position).
    void move_along(std::span<const cx> path) {
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            TransportOptions t = topt_;
            double d = std::numeric_limits<double>::infinity();
            for (const cx& p : punctures_)
                d = std::min(d, segment_point_distance(path[i], path[i + 1], p));
            if (d <= 0.0) throw PoleTooClose("DevelopingMap: path touches a puncture");
            t.clearance = 0.9 * d;
            s_ = transport_segment(q_, s_, path[i], path[i + 1], t);
        }
        w_ = path.empty() ? w_ : path.back();
        drift_ = std::max(drift_, std::abs(s_.wronskian() - 1.0));
    }

    Eval eval_here() const {
        Eval e;
        e.w = w_;
        const cx den = grp_.F.c * s_.u + grp_.F.d * s_.v;
        const cx num = grp_.F.a * s_.u + grp_.F.b * s_.v;
        const cx dden = grp_.F.c * s_.du + grp_.F.d * s_.dv;
        e.tau = num / den;
        e.dtau = -s_.wronskian() / (den * den);
        e.ddtau = -2.0 * e.dtau * dden / den;
        e.im_tau = e.tau.imag();
        if (!(e.im_tau > 0.0))
            throw RealizationFailed("DevelopingMap: image left the upper half-plane (branch lost)");
        const double ad = std::abs(e.dtau);
        e.density = (ad * ad) / (e.im_tau * e.im_tau);
        e.phi_w = e.ddtau / e.dtau + cx(0.0, 1.0) * e.dtau / e.im_tau;
        return e;
    }

    Eval eval(cx w) {
        move_to(w);
        return eval_here();
    }

private:
    FuchsianGroupRep grp_;
    RationalQ q_;
    TransportOptions topt_;
    std::vector<cx> punctures_;
    std::vector<double> radii_;
    cx w_{};
    PairStateD s_{};
    double drift_ = 0.0;
};

}  // namespace moduli
