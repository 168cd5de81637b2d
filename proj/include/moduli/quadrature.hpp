#pragma once

// Composite quadrature over the punctured plane.  The node set is organized
// so that every delta-truncated domain
//
//   Omega_k = { w : |w - p_i| >= delta_k for all finite punctures, |w| <= 1/delta_k },
//   delta_k = delta0 * 2^{-k},
//
// is a union of whole node groups: a middle square minus per-puncture patch
// squares (tensor Gauss panels, refined toward the patches), polar patches
// around each finite puncture (log-radial Gauss rings aligned with the dyadic
// delta schedule, plus corner arcs filling the patch square), a polar collar
// from the middle square out to |w| = 1/delta0, and dyadic polar rings
// reaching |w| = 1/delta_{levels-1}.  Radial variables are logarithmic, so the
// 1/(r log r)^2 cusp profiles of the density integrands are resolved with a
// handful of points per ring.

#include "moduli/puncture.hpp"

#include <vector>

namespace moduli {

struct QuadratureOptions {
    double box_half_side = 5.0;  // middle square [-X, X]^2
    double delta0 = 0.1;         // widest excision radius
    int levels = 11;             // delta_k = delta0 * 2^{-k}, k = 0 .. levels-1
    int radial_order = 8;        // Gauss points per logarithmic radial cell
    int angular_order = 12;      // Gauss points per quarter arc
    int panel_order = 8;         // tensor order of the middle panels
    double split_ratio = 0.6;    // refine panels while side > ratio * clearance
    double max_panel_side = 1.25;
    int max_split_depth = 9;
};

struct QuadNode {
    cx w;
    double weight;  // with respect to Lebesgue area dA
};

struct QuadRegion {
    enum class Kind { Middle, PatchOuter, PatchRing, ExtBase, ExtRing };
    Kind kind = Kind::Middle;
    int puncture = -1;  // finite-puncture index for the patch kinds
    int ring = -1;      // dyadic level j: spans radius delta_{j+1}..delta_j
    std::size_t first = 0, count = 0;
};

class DomainQuadrature {
public:
    explicit DomainQuadrature(const PunctureConfig& cfg, QuadratureOptions opt = {})
        : opt_(opt), cfg_(cfg) {
        build();
    }

    const PunctureConfig& config() const { return cfg_; }
    const QuadratureOptions& options() const { return opt_; }
    const std::vector<QuadNode>& nodes() const { return nodes_; }
    const std::vector<QuadRegion>& regions() const { return regions_; }
    int levels() const { return opt_.levels; }
    double delta(int k) const { return opt_.delta0 * std::pow(2.0, -k); }
    double patch_half_side(int i) const { return patch_a_[static_cast<size_t>(i)]; }

    template <class F>
    double integrate_region(const QuadRegion& r, F&& f) const {
        KahanSum s;
        for (std::size_t k = r.first; k < r.first + r.count; ++k)
            s.add(nodes_[k].weight * f(nodes_[k].w));
        return s.value();
    }

    // Integral over the full node set = the innermost domain Omega_{levels-1}.
    template <class F>
    double integrate_all(F&& f) const {
        KahanSum s;
        for (const QuadNode& nd : nodes_) s.add(nd.weight * f(nd.w));
        return s.value();
    }

    // Per-region values summed into the schedule I(delta_k), k = 0..levels-1:
    // the base regions always contribute, ring j contributes from k = j+1 on.
    std::vector<double> assemble_schedule(const std::vector<double>& region_vals) const {
        if (region_vals.size() != regions_.size())
            throw std::invalid_argument("assemble_schedule: one value per region required");
        std::vector<KahanSum> acc(static_cast<size_t>(opt_.levels));
        for (std::size_t r = 0; r < regions_.size(); ++r) {
            const int from = regions_[r].ring < 0 ? 0 : regions_[r].ring + 1;
            for (int k = from; k < opt_.levels; ++k)
                acc[static_cast<size_t>(k)].add(region_vals[r]);
        }
        std::vector<double> out(static_cast<size_t>(opt_.levels));
        for (int k = 0; k < opt_.levels; ++k) out[static_cast<size_t>(k)] = acc[static_cast<size_t>(k)].value();
        return out;
    }

private:
    QuadratureOptions opt_;
    PunctureConfig cfg_;
    std::vector<QuadNode> nodes_;
    std::vector<QuadRegion> regions_;
    std::vector<double> patch_a_;

    void begin_region(QuadRegion::Kind kind, int puncture, int ring) {
        QuadRegion r;
        r.kind = kind;
        r.puncture = puncture;
        r.ring = ring;
        r.first = nodes_.size();
        regions_.push_back(r);
    }
    void end_region() { regions_.back().count = nodes_.size() - regions_.back().first; }

    // Polar cell around `center`: theta in [t0, t1], radius between the
    // theta-dependent bounds.  dA = rho^2 dlog(rho) dtheta.
    template <class R0, class R1>
    void emit_polar_cell(cx center, double t0, double t1, R0&& r_lo, R1&& r_hi) {
        const GaussRule& ga = gauss_legendre(opt_.angular_order);
        const GaussRule& gr = gauss_legendre(opt_.radial_order);
        for (int ia = 0; ia < opt_.angular_order; ++ia) {
            const double th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * ga.x[static_cast<size_t>(ia)];
            const double wth = 0.5 * (t1 - t0) * ga.w[static_cast<size_t>(ia)];
            const double la = std::log(r_lo(th)), lb = std::log(r_hi(th));
            for (int ir = 0; ir < opt_.radial_order; ++ir) {
                const double lt = 0.5 * (la + lb) + 0.5 * (lb - la) * gr.x[static_cast<size_t>(ir)];
                const double wlt = 0.5 * (lb - la) * gr.w[static_cast<size_t>(ir)];
                const double rho = std::exp(lt);
                nodes_.push_back({center + rho * cx(std::cos(th), std::sin(th)),
                                  rho * rho * wth * wlt});
            }
        }
    }

    void emit_annulus(cx center, double r_in, double r_out) {
        for (int q = 0; q < 4; ++q) {
            const double t0 = 0.5 * pi * q, t1 = 0.5 * pi * (q + 1);
            emit_polar_cell(
                center, t0, t1, [&](double) { return r_in; }, [&](double) { return r_out; });
        }
    }

    void emit_panel(double x0, double x1, double y0, double y1) {
        const GaussRule& g = gauss_legendre(opt_.panel_order);
        for (int i = 0; i < opt_.panel_order; ++i) {
            const double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * g.x[static_cast<size_t>(i)];
            const double wx = 0.5 * (x1 - x0) * g.w[static_cast<size_t>(i)];
            for (int j = 0; j < opt_.panel_order; ++j) {
                const double y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * g.x[static_cast<size_t>(j)];
                const double wy = 0.5 * (y1 - y0) * g.w[static_cast<size_t>(j)];
                nodes_.push_back({cx(x, y), wx * wy});
            }
        }
    }

    double clearance(cx c, const std::vector<cx>& p) const {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p.size(); ++i)
            d = std::min(d, std::abs(c - p[i]) - 1.4143 * patch_a_[i]);
        return std::max(d, 1e-3);
    }

    void refine_panel(double x0, double x1, double y0, double y1, const std::vector<cx>& p,
                      int depth) {
        const double sx = x1 - x0, sy = y1 - y0;
        const double side = std::max(sx, sy);
        const cx c(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        const bool need = side > opt_.max_panel_side ||
                          side > opt_.split_ratio * clearance(c, p);
        if (need && depth < opt_.max_split_depth) {
            if (sx >= sy) {
                const double xm = 0.5 * (x0 + x1);
                refine_panel(x0, xm, y0, y1, p, depth + 1);
                refine_panel(xm, x1, y0, y1, p, depth + 1);
            } else {
                const double ym = 0.5 * (y0 + y1);
                refine_panel(x0, x1, y0, ym, p, depth + 1);
                refine_panel(x0, x1, ym, y1, p, depth + 1);
            }
            return;
        }
        emit_panel(x0, x1, y0, y1);
    }

    void build() {
        const std::vector<cx> p = cfg_.finite_punctures();
        const double X = opt_.box_half_side;
        const double R0 = 1.0 / opt_.delta0;

        // Patch half-sides: small enough that patch squares are pairwise
        // disjoint (0.35 + 0.35 < 1/sqrt2) and stay inside the middle box.
        patch_a_.clear();
        for (std::size_t i = 0; i < p.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < p.size(); ++j)
                if (j != i) d = std::min(d, std::abs(p[i] - p[j]));
            const double a = std::min(0.35 * d, 0.25);
            if (!(a > 1.02 * opt_.delta0))
                throw InvalidConfiguration(
                    "DomainQuadrature: punctures too close for the excision schedule");
            if (std::abs(p[i].real()) + a >= X || std::abs(p[i].imag()) + a >= X)
                throw InvalidConfiguration("DomainQuadrature: puncture too close to the box edge");
            patch_a_.push_back(a);
        }

        // Middle square minus the patch squares, by a sweep over x-strips.
        begin_region(QuadRegion::Kind::Middle, -1, -1);
        {
            std::vector<double> xs{-X, X};
            for (std::size_t i = 0; i < p.size(); ++i) {
                xs.push_back(p[i].real() - patch_a_[i]);
                xs.push_back(p[i].real() + patch_a_[i]);
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
                const double x0 = xs[s], x1 = xs[s + 1];
                if (x1 - x0 < 1e-12) continue;
                const double xm = 0.5 * (x0 + x1);
                // Patch squares covering this strip horizontally block their
                // y-interval; strip edges include every patch edge.
                std::vector<std::pair<double, double>> blocked;
                for (std::size_t i = 0; i < p.size(); ++i)
                    if (std::abs(xm - p[i].real()) < patch_a_[i])
                        blocked.emplace_back(p[i].imag() - patch_a_[i], p[i].imag() + patch_a_[i]);
                std::sort(blocked.begin(), blocked.end());
                double y = -X;
                blocked.emplace_back(X, X);
                for (const auto& b : blocked) {
                    if (b.first - y > 1e-12) refine_panel(x0, x1, y, b.first, p, 0);
                    y = std::max(y, b.second);
                }
            }
        }
        end_region();

        // Patches: dyadic delta rings, then dyadic rings out to the inscribed
        // circle, then the four corner arcs of the patch square.
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double a = patch_a_[i];
            for (int j = 0; j + 1 < opt_.levels; ++j) {
                begin_region(QuadRegion::Kind::PatchRing, static_cast<int>(i), j);
                emit_annulus(p[i], delta(j + 1), delta(j));
                end_region();
            }
            begin_region(QuadRegion::Kind::PatchOuter, static_cast<int>(i), -1);
            double r = opt_.delta0;
            while (2.0 * r <= a) {
                emit_annulus(p[i], r, 2.0 * r);
                r *= 2.0;
            }
            if (a - r > 1e-12 * a) emit_annulus(p[i], r, a);
            for (int q = 0; q < 4; ++q) {
                const double tc = 0.5 * pi * q;
                emit_polar_cell(
                    p[i], tc - 0.25 * pi, tc + 0.25 * pi, [&](double) { return a; },
                    [&](double th) { return a / std::cos(th - tc); });
            }
            end_region();
        }

        // Collar between the middle square and |w| = 1/delta0.
        begin_region(QuadRegion::Kind::ExtBase, -1, -1);
        for (int q = 0; q < 4; ++q) {
            const double tc = 0.5 * pi * q;
            emit_polar_cell(
                cx(0.0, 0.0), tc - 0.25 * pi, tc + 0.25 * pi,
                [&](double th) { return X / std::cos(th - tc); }, [&](double) { return R0; });
        }
        end_region();

        // Dyadic exterior rings |w| in [1/delta_j, 1/delta_{j+1}].
        for (int j = 0; j + 1 < opt_.levels; ++j) {
            begin_region(QuadRegion::Kind::ExtRing, -1, j);
            emit_annulus(cx(0.0, 0.0), R0 * std::pow(2.0, j), R0 * std::pow(2.0, j + 1));
            end_region();
        }
    }
};

}  // namespace moduli
