#pragma once
// Petersson pairings and the metric data they induce on the moduli space of
// the n-punctured sphere.
//
// Conventions.  d = n-3 moduli w_1..w_d; finite punctures p_1..p_{n-1} =
// (w_1,..,w_d, 0, 1); puncture n sits at infinity.  Moduli indices in code
// are 0-based (matching AccessoryParams::c), puncture labels are 1-based
// (matching the cusp and Eisenstein machinery).
//
// The cotangent basis dual to the moduli directions is represented by the
// quadratic differentials
//   R_l(w) = -(1/pi) [ 1/(w - w_l) + (w_l - 1)/w - w_l/(w - 1) ]
//          = -(1/pi) w_l(w_l - 1) / ((w - w_l) w (w - 1)),
// the coefficient forms of the accessory parameters in the potential Q.  They
// have simple poles at the punctures and cubic decay at infinity, so all
// pairings below converge absolutely over the plane.
//
// With e^{phi} the hyperbolic density, the Petersson gram
//   P_jk = iint R_j conj(R_k) e^{-phi} d^2w
// determines the tangent representatives
//   Q_i = sum_l (P^{-1})_{il} R_l,     M_i = e^{-phi} conj(Q_i),
// normalized by iint Q_i conj(R_j) e^{-phi} = delta_ij.  The Weil-Petersson
// gram over the moduli frame is conj(P^{-1}); the label-j cusp gram inserts
// the parabolic Eisenstein weight of label j into the same integral.
//
// The per-puncture forms
//   E_j(w) = 1/(2(w - p_j)^2) - 1/(2 w(w-1)),   j = 1..n-1,
//   E_n(w) = + 1/(2 w(w-1)),
// sum, together with -pi sum_l c_l R_l, to the potential Q.  Their flat
// pairings (E_j, M_i) = iint E_j M_i d^2w give the logarithmic derivatives of
// the cusp scalings h_j along the moduli,
//   d log h_j / d w_i = -(2/pi) (E_j, M_i)   (sign + at the infinite cusp),
// and  alpha_i = sum_j (E_j, M_i) - pi c_i  is half the moduli gradient of
// the metric-corrected action.  All leading singular parts of these
// integrands cancel in the angular direction, so the excision schedule of the
// quadrature leaves only negligible truncation.

#include "moduli/eisenstein.hpp"
#include "moduli/numerics.hpp"
#include "moduli/puncture.hpp"
#include "moduli/quadrature.hpp"
#include "moduli/surface.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace moduli {

struct IllConditioned : std::runtime_error {
    explicit IllConditioned(const std::string& what) : std::runtime_error(what) {}
};

// Cotangent basis differential for modulus l (0-based), scaled so that it
// represents the covector dual to d/dw_l.
inline cx moduli_covector(const PunctureConfig& cfg, int l, cx w) {
    const cx wl = cfg.w[static_cast<size_t>(l)];
    return -(1.0 / pi) * wl * (wl - 1.0) / ((w - wl) * w * (w - 1.0));
}

// Per-puncture quadratic differential E_j (label 1..n).
inline cx puncture_form(const PunctureConfig& cfg, int label, cx w) {
    if (label < 1 || label > cfg.n) throw InvalidConfiguration("puncture_form: label out of range");
    const cx base = 0.5 / (w * (w - 1.0));
    if (label == cfg.n) return base;
    const cx p = cfg.finite_punctures()[static_cast<size_t>(label - 1)];
    const cx dw = w - p;
    return 0.5 / (dw * dw) - base;
}

// All Petersson-type pairings over one configuration, evaluated on a shared
// quadrature and surface cache.  The quadrature and surface objects must
// outlive the suite.
class GramSuite {
  public:
    GramSuite(PunctureConfig cfg, AccessoryParams par, FuchsianGroupRep grp,
              const DomainQuadrature& quad, const SurfaceData& sd, EisensteinOptions eopt = {})
        : cfg_(std::move(cfg)),
          par_(std::move(par)),
          grp_(std::move(grp)),
          quad_(&quad),
          sd_(&sd),
          eopt_(eopt),
          d_(cfg_.n - 3) {
        if (static_cast<int>(par_.c.size()) != d_)
            throw InvalidConfiguration("GramSuite: accessory parameter count must be n-3");
        if (sd.evals.size() != quad.nodes().size())
            throw InvalidConfiguration("GramSuite: surface cache does not match the quadrature");
        if (d_ < 1) throw InvalidConfiguration("GramSuite: no moduli for n = 3");
        ecols_.resize(static_cast<size_t>(cfg_.n) + 1);
        build_petersson();
    }

    int dim() const { return d_; }
    const PunctureConfig& config() const { return cfg_; }
    const AccessoryParams& params() const { return par_; }

    // Petersson gram of the covector basis and its condition number.
    const Eigen::MatrixXcd& petersson() const { return pet_; }
    double condition() const { return cond_; }

    // Weil-Petersson gram over the moduli frame:  G_jk = <d/dw_j, d/dw_k>.
    Eigen::MatrixXcd wp() const { return ainv_.conjugate(); }

    // Cusp gram of the given puncture label:
    //   G_jk = iint E^(label) conj(Q_j) Q_k e^{-phi} d^2w,
    // with E^(label) the parabolic Eisenstein weight pulled back to the plane.
    const Eigen::MatrixXcd& cusp_gram(int label) {
        if (label < 1 || label > cfg_.n)
            throw InvalidConfiguration("cusp_gram: label out of range");
        auto& slot = cusp_grams_[static_cast<size_t>(label)];
        if (!slot) slot = weighted_gram(eisenstein_column(label));
        return *slot;
    }

    Eigen::MatrixXcd cusp_gram_total() {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d_, d_);
        for (int label = 1; label <= cfg_.n; ++label) acc += cusp_gram(label);
        return acc;
    }

    // Flat pairing (E_label, M_i).
    cx epair(int label, int i) {
        if (label < 1 || label > cfg_.n) throw InvalidConfiguration("epair: label out of range");
        if (i < 0 || i >= d_) throw InvalidConfiguration("epair: modulus index out of range");
        build_epairs();
        return epairs_(label - 1, i);
    }

    // Predicted logarithmic derivative of the cusp scaling:
    //   d log h_label / d w_i,  with the sign flipped at the infinite cusp.
    cx dlogh(int label, int i) {
        const double sign = (label == cfg_.n) ? 2.0 / pi : -2.0 / pi;
        return sign * epair(label, i);
    }

    // Half the moduli gradient of the metric-corrected action:
    //   alpha_i = sum_j (E_j, M_i) - pi c_i.
    cx alpha(int i) {
        if (i < 0 || i >= d_) throw InvalidConfiguration("alpha: modulus index out of range");
        build_epairs();
        cx acc = -pi * par_.c[static_cast<size_t>(i)];
        for (int label = 1; label <= cfg_.n; ++label) acc += epairs_(label - 1, i);
        return acc;
    }

    // Tangent representative Q_i at node k (for diagnostics and reuse).
    cx q_at(int i, size_t k) const { return qcols_[static_cast<size_t>(i)][k]; }

    // Parabolic Eisenstein weight of the given label at every node.
    const std::vector<double>& eisenstein_column(int label) {
        if (label < 1 || label > cfg_.n)
            throw InvalidConfiguration("eisenstein_column: label out of range");
        auto& slot = ecols_[static_cast<size_t>(label)];
        if (!slot) {
            EisensteinSeries series(grp_, label, eopt_);
            std::vector<double> col;
            col.reserve(sd_->evals.size());
            for (const auto& ev : sd_->evals) col.push_back(series(ev.tau));
            slot = std::move(col);
        }
        return *slot;
    }

  private:
    void build_petersson() {
        const auto& nodes = quad_->nodes();
        const size_t nn = nodes.size();
        std::vector<std::vector<cx>> rcols(static_cast<size_t>(d_));
        for (int l = 0; l < d_; ++l) {
            auto& col = rcols[static_cast<size_t>(l)];
            col.reserve(nn);
            for (const QuadNode& nd : nodes) col.push_back(moduli_covector(cfg_, l, nd.w));
        }
        pet_ = Eigen::MatrixXcd(d_, d_);
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k) {
                KahanSumC acc;
                const auto& cj = rcols[static_cast<size_t>(j)];
                const auto& ck = rcols[static_cast<size_t>(k)];
                for (size_t m = 0; m < nn; ++m)
                    acc.add(nodes[m].weight / sd_->evals[m].density * cj[m] * std::conj(ck[m]));
                pet_(j, k) = acc.value();
                if (k != j) pet_(k, j) = std::conj(acc.value());
                else pet_(j, j) = acc.value().real();
            }

        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pet_);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        cond_ = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
        if (!(cond_ < 1e8))
            throw IllConditioned("GramSuite: Petersson gram condition " + std::to_string(cond_));
        ainv_ = pet_.inverse();

        qcols_.assign(static_cast<size_t>(d_), {});
        for (int i = 0; i < d_; ++i) {
            auto& col = qcols_[static_cast<size_t>(i)];
            col.assign(nn, cx(0.0));
            for (int l = 0; l < d_; ++l) {
                const cx a = ainv_(i, l);
                const auto& rl = rcols[static_cast<size_t>(l)];
                for (size_t m = 0; m < nn; ++m) col[m] += a * rl[m];
            }
        }
        cusp_grams_.assign(static_cast<size_t>(cfg_.n) + 1, std::nullopt);
    }

    Eigen::MatrixXcd weighted_gram(const std::vector<double>& weight) const {
        const auto& nodes = quad_->nodes();
        Eigen::MatrixXcd g(d_, d_);
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k) {
                KahanSumC acc;
                const auto& cj = qcols_[static_cast<size_t>(j)];
                const auto& ck = qcols_[static_cast<size_t>(k)];
                for (size_t m = 0; m < nodes.size(); ++m)
                    acc.add(nodes[m].weight * weight[m] / sd_->evals[m].density *
                            std::conj(cj[m]) * ck[m]);
                g(j, k) = acc.value();
                if (k != j) g(k, j) = std::conj(acc.value());
                else g(j, j) = acc.value().real();
            }
        return g;
    }

    void build_epairs() {
        if (epairs_.size() > 0) return;
        const auto& nodes = quad_->nodes();
        epairs_ = Eigen::MatrixXcd(cfg_.n, d_);
        for (int label = 1; label <= cfg_.n; ++label)
            for (int i = 0; i < d_; ++i) {
                KahanSumC acc;
                const auto& qi = qcols_[static_cast<size_t>(i)];
                for (size_t m = 0; m < nodes.size(); ++m)
                    acc.add(nodes[m].weight / sd_->evals[m].density *
                            puncture_form(cfg_, label, nodes[m].w) * std::conj(qi[m]));
                epairs_(label - 1, i) = acc.value();
            }
    }

    PunctureConfig cfg_;
    AccessoryParams par_;
    FuchsianGroupRep grp_;
    const DomainQuadrature* quad_;
    const SurfaceData* sd_;
    EisensteinOptions eopt_;
    int d_;

    Eigen::MatrixXcd pet_;
    Eigen::MatrixXcd ainv_;
    double cond_ = 0.0;
    std::vector<std::vector<cx>> qcols_;
    Eigen::MatrixXcd epairs_;
    std::vector<std::optional<std::vector<double>>> ecols_;
    std::vector<std::optional<Eigen::MatrixXcd>> cusp_grams_;
};

}  // namespace moduli
