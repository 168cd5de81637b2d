#pragma once

// Accessory-parameter solver.  The Fuchsian point of the family
// u'' + (1/2) Q(w; c) u = 0 is characterized by the whole monodromy group
// being conjugate into the real matrices; since the local matrices are
// parabolic for every c, the obstruction is carried by the imaginary parts
// of pair-product traces.  A Gauss-Newton iteration drives those to zero,
// using that each trace is holomorphic in the accessory parameters (one
// complex derivative per parameter yields both real Jacobian columns).

#include <Eigen/Dense>

#include "moduli/monodromy.hpp"

namespace moduli {

struct SolveFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolveOptions {
    double tol = 1e-9;           // max-norm target for the trace residuals
    int max_iterations = 40;
    double fd_step = 1e-6;       // complex step for the holomorphic Jacobian
    // Transport runs tighter than the generic default: the residual floor is
    // the absolute trace noise, and pair traces grow with n.
    MonodromyOptions monodromy{.transport = TransportOptions{.rel_tol = 1e-14, .abs_tol = 1e-16}};
};

struct SolveResult {
    PunctureConfig config;
    AccessoryParams c;
    MonodromyRep rep;            // monodromy at the solved parameters
    double residual_norm = 0.0;  // max-norm of Im(pair traces)
    int iterations = 0;
    std::vector<double> history; // residual norm per iteration
};

// Trace pairs whose imaginary parts form the residual vector: consecutive
// pairs around the puncture cycle plus skip-one pairs until the system is
// overdetermined for the 2(n-3) real unknowns.
inline std::vector<std::pair<int, int>> residual_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i <= n - 1; ++i) pairs.emplace_back(i, i + 1);
    int need = 2 * (n - 3) + 2;
    for (int i = 1; i <= n - 2 && static_cast<int>(pairs.size()) < std::max(n, need); ++i)
        pairs.emplace_back(i, i + 2);
    return pairs;
}

namespace detail {

inline std::vector<cx> pair_traces(const PunctureConfig& cfg, const AccessoryParams& par,
                                   const std::vector<std::pair<int, int>>& pairs,
                                   const MonodromyOptions& mopt) {
    MonodromyRep rep = monodromy(build_q(cfg, par), mopt);
    std::vector<cx> t;
    t.reserve(pairs.size());
    for (auto [i, j] : pairs)
        t.push_back((rep.M[static_cast<size_t>(i - 1)] * rep.M[static_cast<size_t>(j - 1)]).trace());
    return t;
}

inline double max_abs_imag(const std::vector<cx>& t) {
    double m = 0.0;
    for (const cx& v : t) m = std::max(m, std::abs(v.imag()));
    return m;
}

inline double norm2_imag(const std::vector<cx>& t) {
    double s = 0.0;
    for (const cx& v : t) s += v.imag() * v.imag();
    return std::sqrt(s);
}

inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", x);
    return buf;
}

}  // namespace detail

inline SolveResult solve_accessory(const PunctureConfig& cfg,
                                   AccessoryParams initial = {},
                                   const SolveOptions& opt = {}) {
    const int n = cfg.n;
    const int nc = n - 3;
    if (initial.c.empty()) initial = AccessoryParams::zeros(n);
    if (static_cast<int>(initial.c.size()) != nc)
        throw InvalidConfiguration("solve_accessory: initial guess has wrong length");

    SolveResult res;
    res.config = cfg;
    res.c = std::move(initial);

    const auto pairs = residual_pairs(n);
    std::vector<cx> t = detail::pair_traces(cfg, res.c, pairs, opt.monodromy);
    double rn = detail::max_abs_imag(t);
    res.history.push_back(rn);

    while (rn > opt.tol && res.iterations < opt.max_iterations && nc > 0) {
        // Holomorphic Jacobian by central differences in each c_l.
        const int m = static_cast<int>(pairs.size());
        Eigen::MatrixXd J(m, 2 * nc);
        Eigen::VectorXd r(m);
        for (int k = 0; k < m; ++k) r(k) = t[static_cast<size_t>(k)].imag();
        for (int l = 0; l < nc; ++l) {
            AccessoryParams cp = res.c, cm = res.c;
            cp.c[static_cast<size_t>(l)] += opt.fd_step;
            cm.c[static_cast<size_t>(l)] -= opt.fd_step;
            std::vector<cx> tp = detail::pair_traces(cfg, cp, pairs, opt.monodromy);
            std::vector<cx> tm = detail::pair_traces(cfg, cm, pairs, opt.monodromy);
            for (int k = 0; k < m; ++k) {
                cx dt = (tp[static_cast<size_t>(k)] - tm[static_cast<size_t>(k)]) / (2.0 * opt.fd_step);
                // d Im t = Im(t') dx + Re(t') dy for c_l = x + i y.
                J(k, 2 * l) = dt.imag();
                J(k, 2 * l + 1) = dt.real();
            }
        }
        Eigen::VectorXd step = J.colPivHouseholderQr().solve(-r);

        // Backtracking line search on the Gauss-Newton merit (2-norm);
        // convergence is still measured in the max-norm.
        double merit = detail::norm2_imag(t);
        bool accepted = false;
        for (double alpha : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}) {
            AccessoryParams trial = res.c;
            for (int l = 0; l < nc; ++l)
                trial.c[static_cast<size_t>(l)] += alpha * cx(step(2 * l), step(2 * l + 1));
            std::vector<cx> tt = detail::pair_traces(cfg, trial, pairs, opt.monodromy);
            if (detail::norm2_imag(tt) < merit) {
                res.c = std::move(trial);
                t = std::move(tt);
                rn = detail::max_abs_imag(t);
                accepted = true;
                break;
            }
        }
        ++res.iterations;
        res.history.push_back(rn);
        if (!accepted) break;
    }

    if (rn > opt.tol)
        throw SolveFailed("solve_accessory: residual " + detail::sci(rn) +
                          " above tolerance after " + std::to_string(res.iterations) +
                          " iterations; supply a closer initial guess or use continuation");

    res.rep = monodromy(build_q(cfg, res.c), opt.monodromy);
    res.residual_norm = rn;

    // Guard against spurious real solutions of the trace equations.  In the
    // uniformizing group any two of the n >= 4 puncture loops generate a
    // free, non-elementary subgroup whose two-puncture product is strictly
    // hyperbolic, and every generator pair passes the discreteness
    // inequality |tr^2 A - 4| + |tr [A,B] - 2| >= 1.  All three conditions
    // are necessary, so a violation proves the iteration found a different
    // real representation (typically one with a reducible pair).
    if (n >= 4) {
        for (size_t i = 0; i < res.rep.M.size(); ++i)
            for (size_t j = i + 1; j < res.rep.M.size(); ++j) {
                const MoebiusMap& A = res.rep.M[i];
                const MoebiusMap& B = res.rep.M[j];
                cx t = (A * B).trace();
                cx tc = (A * B * A.inverse() * B.inverse()).trace();
                const bool bad = std::abs(t.imag()) > 1e-6 || std::abs(t.real()) < 2.0 + 1e-7 ||
                                 std::abs(tc - 2.0) < 1.0 - 1e-6;
                if (bad)
                    throw SolveFailed(
                        "solve_accessory: converged to a non-uniformizing real representation "
                        "(pair " + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                        ": product trace " + std::to_string(t.real()) +
                        ", discreteness margin " + std::to_string(std::abs(tc - 2.0)) +
                        "); reach this configuration by continuation instead");
            }
    }
    return res;
}

// Path continuation: linearly interpolate the moduli from a solved
// configuration to the target, re-solving with warm starts.  The caller is
// responsible for a path that keeps the moduli away from 0, 1 and from each
// other; use the waypoint overload to steer around collisions.
inline SolveResult continue_solve(const SolveResult& from, const PunctureConfig& target,
                                  int steps = 8, const SolveOptions& opt = {}) {
    if (from.config.n != target.n)
        throw InvalidConfiguration("continue_solve: puncture counts differ");
    SolveResult cur = from;
    for (int s = 1; s <= steps; ++s) {
        double a = static_cast<double>(s) / steps;
        std::vector<cx> w(cur.config.w.size());
        for (size_t i = 0; i < w.size(); ++i)
            w[i] = (1.0 - a) * from.config.w[i] + a * target.w[i];
        cur = solve_accessory(PunctureConfig(w), cur.c, opt);
    }
    return cur;
}

inline SolveResult continue_solve(SolveResult from, const std::vector<PunctureConfig>& waypoints,
                                  int steps_per_leg = 6, const SolveOptions& opt = {}) {
    for (const PunctureConfig& wp : waypoints) from = continue_solve(from, wp, steps_per_leg, opt);
    return from;
}

}  // namespace moduli
