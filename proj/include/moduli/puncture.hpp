#pragma once

// Configuration of an n-punctured sphere and the rational coefficient Q of
// the associated second-order linear ODE u'' + (1/2) Q u = 0.  Punctures are
// w_1..w_{n-3} together with 0, 1, infinity; the accessory parameters c_l
// enter Q linearly through third-order-decay rational kernels.

#include <vector>

#include "moduli/numerics.hpp"

namespace moduli {

struct InvalidConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PunctureConfig {
    int n = 0;                // number of punctures, >= 3
    std::vector<cx> w;        // moduli: the n-3 movable punctures

    PunctureConfig() = default;
    explicit PunctureConfig(std::vector<cx> moduli_points)
        : n(static_cast<int>(moduli_points.size()) + 3), w(std::move(moduli_points)) {
        validate();
    }

    void validate() const {
        if (n < 3 || static_cast<int>(w.size()) != n - 3)
            throw InvalidConfiguration("PunctureConfig: need n >= 3 with n-3 moduli entries");
        for (size_t i = 0; i < w.size(); ++i) {
            const cx& z = w[i];
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw InvalidConfiguration("PunctureConfig: nonfinite modulus");
            if (std::abs(z) < 1e-12 || std::abs(z - 1.0) < 1e-12)
                throw InvalidConfiguration("PunctureConfig: modulus collides with 0 or 1");
            for (size_t j = i + 1; j < w.size(); ++j)
                if (std::abs(z - w[j]) < 1e-12)
                    throw InvalidConfiguration("PunctureConfig: coincident moduli");
        }
    }

    // Finite punctures p_1..p_{n-1} = (w_1, .., w_{n-3}, 0, 1).
    std::vector<cx> finite_punctures() const {
        std::vector<cx> p = w;
        p.push_back(0.0);
        p.push_back(1.0);
        return p;
    }

    double min_pairwise_distance() const {
        auto p = finite_punctures();
        double d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < p.size(); ++i)
            for (size_t j = i + 1; j < p.size(); ++j) d = std::min(d, std::abs(p[i] - p[j]));
        return d;
    }

    double clearance(cx z) const {
        double d = std::numeric_limits<double>::infinity();
        for (const cx& p : finite_punctures()) d = std::min(d, std::abs(z - p));
        return d;
    }
};

struct AccessoryParams {
    std::vector<cx> c;  // length n-3

    AccessoryParams() = default;
    explicit AccessoryParams(std::vector<cx> cs) : c(std::move(cs)) {}
    static AccessoryParams zeros(int n) { return AccessoryParams(std::vector<cx>(static_cast<size_t>(n - 3), cx(0.0))); }
};

// Raw second-kind kernel R(zeta, z) = z(z-1) / ((zeta - z) zeta (zeta - 1)).
inline cx r_kernel(cx zeta, cx z) {
    return z * (z - 1.0) / ((zeta - z) * zeta * (zeta - 1.0));
}

// Basis differentials r_l = -(1/pi) R(., w_l), l = 1..n-3 (1-indexed).
inline cx r_form(const PunctureConfig& cfg, int l, cx w) {
    return -r_kernel(w, cfg.w.at(static_cast<size_t>(l - 1))) / pi;
}

// Elementary pieces E_j, j = 1..n (1-indexed): double pole at the j-th
// puncture normalized so the full sum has the required growth at infinity.
inline cx e_form(const PunctureConfig& cfg, int j, cx w) {
    const cx wpole = 1.0 / (2.0 * w * (w - 1.0));
    if (j == cfg.n) return wpole;
    cx p;
    if (j <= cfg.n - 3)
        p = cfg.w.at(static_cast<size_t>(j - 1));
    else
        p = (j == cfg.n - 2) ? cx(0.0) : cx(1.0);
    const cx dw = w - p;
    return 1.0 / (2.0 * dw * dw) - wpole;
}

class RationalQ {
public:
    RationalQ(PunctureConfig cfg, AccessoryParams par) : cfg_(std::move(cfg)), par_(std::move(par)) {
        if (static_cast<int>(par_.c.size()) != cfg_.n - 3)
            throw InvalidConfiguration("RationalQ: accessory parameter count must be n-3");
    }

    const PunctureConfig& config() const { return cfg_; }
    const AccessoryParams& params() const { return par_; }

    // Q(w) = sum_j 1/(2 (w-p_j)^2) - (n-2) / (2 w (w-1))
    //        + sum_l c_l [ 1/(w-w_l) + (w_l-1)/w - w_l/(w-1) ].
    cx eval(cx w) const {
        cx acc = 0.0;
        for (const cx& p : cfg_.finite_punctures()) {
            const cx dw = w - p;
            acc += 0.5 / (dw * dw);
        }
        acc -= 0.5 * static_cast<double>(cfg_.n - 2) / (w * (w - 1.0));
        for (size_t l = 0; l < par_.c.size(); ++l) {
            const cx wl = cfg_.w[l];
            acc += par_.c[l] * (1.0 / (w - wl) + (wl - 1.0) / w - wl / (w - 1.0));
        }
        return acc;
    }

    cx operator()(cx w) const { return eval(w); }

    // First-order pole coefficients at all finite punctures, in puncture
    // order (w_1..w_{n-3}, 0, 1).  The two trailing entries are forced by the
    // decay of Q at infinity.
    std::vector<cx> full_residues() const {
        std::vector<cx> out = par_.c;
        cx s0 = 0.5 * static_cast<double>(cfg_.n - 2);
        cx s1 = -0.5 * static_cast<double>(cfg_.n - 2);
        for (size_t l = 0; l < par_.c.size(); ++l) {
            s0 += par_.c[l] * (cfg_.w[l] - 1.0);
            s1 -= par_.c[l] * cfg_.w[l];
        }
        out.push_back(s0);
        out.push_back(s1);
        return out;
    }

private:
    PunctureConfig cfg_;
    AccessoryParams par_;
};

inline RationalQ build_q(const PunctureConfig& cfg, const AccessoryParams& par) {
    return RationalQ(cfg, par);
}

}  // namespace moduli
