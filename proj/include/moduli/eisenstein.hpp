#pragma once

// Cusp Eisenstein series of weight two,
//
//   E_i(z, 2) = sum over cosets Gamma_i \ Gamma of Im(sigma_i^{-1} gamma z)^2,
//
// where Gamma_i = <S_i> is the stabilizer of cusp i and sigma_i its width-one
// scaling.  Naive truncation by word length converges only polynomially: a
// family gamma = v S_l^k contributes like k^{-4}.  The sum is therefore
// reorganized by trailing parabolic family,
//
//   E_i = Im(sigma_i^{-1} z)^2
//       + sum over cores v and basis letters j != trail(v) of
//           [ sum_{k in Z} Im(sigma_i^{-1} v b_j^k z)^2 - Im(sigma_i^{-1} v z)^2 ],
//
// where v runs over coset-canonical reduced words over a free basis
// (b_1, ..., b_{n-1}) chosen to contain S_i, and (e, i) is excluded as the
// degenerate family.  Every coset is covered exactly once and partial sums
// increase monotonically.  Each inner k-sum has a closed form through the
// classical lattice sum
//
//   sum_{k in Z} ((x+k)^2 + y^2)^{-2}
//     = (pi/(2 y^3)) sinh(2 pi y) / (cosh 2 pi y - cos 2 pi x)
//       - (pi^2/y^2) (1 - cosh 2 pi y cos 2 pi x) / (cosh 2 pi y - cos 2 pi x)^2.
//
// One parabolic direction is not a basis letter: the composite P with
// P^{-1} = b_1 b_2 ... b_{n-1}.  Runs of P are words whose length grows by
// n-1 per block, so their k^{-4} mass recurs with period n-1 across the
// shells.  Frontier nodes close to a P-run (small c-entry of A sigma_P, a
// z-independent test) are therefore extended along the two P-patterns for
// many blocks ("parabolic sweep"), and the tail certificate compares sums
// over whole periods of shells, switching from geometric to polynomial
// continuation when the aggregated ratio indicates the k^{-4} regime of
// conjugated parabolic chains.  Before any of this, the evaluation point is
// pulled along its orbit to a canonical representative maximizing the cusp
// heights, where the word-length enumeration converges fastest.

#include "moduli/develop.hpp"

#include <algorithm>
#include <map>

namespace moduli {

struct EisensteinFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TailTooLarge : EisensteinFailed {
    using EisensteinFailed::EisensteinFailed;
};

struct EisensteinOptions {
    double rel_tol = 1e-3;       // accepted tail estimate, relative
    int min_depth = 3;           // shells always summed before the quick exit
    int max_depth = 8;           // deepest stored shell
    std::size_t max_nodes = 1500000;
    double sweep_c_cut = 16.0;   // |c| threshold marking near-parabolic nodes
    int sweep_blocks = 24;       // composite-parabolic blocks walked past the frontier
    std::size_t sweep_cap = 600; // frontier nodes extended per depth
};

namespace detail {

// sum_{k in Z} ((x+k)^2 + y^2)^{-2}, stable near the real axis through
// cosh 2a - cos 2b = 2 (sinh^2 a + sin^2 b).
inline double lattice_inverse_quartic(double x, double y) {
    const double py = pi * y;
    if (py > 17.5) return pi / (2.0 * y * y * y);  // corrections below 1 ulp
    const double sh = std::sinh(py);
    const double ch = std::cosh(py);
    const double sx = std::sin(pi * x);
    const double D = sh * sh + sx * sx;
    const double S = 2.0 * sh * ch;
    const double C = 1.0 + 2.0 * sh * sh;
    return pi * S / (4.0 * y * y * y * D) -
           (pi * pi / (2.0 * y * y)) * (C * sx * sx - sh * sh) / (D * D);
}

}  // namespace detail

class EisensteinSeries {
public:
    EisensteinSeries(const FuchsianGroupRep& grp, int label, EisensteinOptions opt = {})
        : opt_(opt), label_(label) {
        const int n = grp.cfg.n;
        if (label < 1 || label > n)
            throw InvalidConfiguration("EisensteinSeries: label out of range");
        r_ = n - 1;

        // Free basis containing S_label; the composite direction P is the
        // remaining puncture generator, P^{-1} = b_1 ... b_r.
        std::vector<int> basis_labels;
        int p_label;
        if (label < n) {
            for (int l = 1; l <= r_; ++l) basis_labels.push_back(l);
            m_ = label - 1;
            p_label = n;
        } else {
            for (int l = 2; l <= n; ++l) basis_labels.push_back(l);
            m_ = r_ - 1;
            p_label = 1;
        }
        for (int l : basis_labels) {
            const auto idx = static_cast<size_t>(l - 1);
            letters_.push_back(grp.S[idx]);
            letters_.push_back(grp.S[idx].inverse());
            sigma_cols_.push_back(cols_of(grp.sigma[idx]));
            sigma_inv_.push_back(grp.sigma[idx].inverse());
        }
        sigma_p_ = cols_of(grp.sigma[static_cast<size_t>(p_label - 1)]);
        sigma_p_inv_ = grp.sigma[static_cast<size_t>(p_label - 1)].inverse();
        comp_ = grp.S[static_cast<size_t>(p_label - 1)];
        comp_inv_ = comp_.inverse();

        Node root;
        root.A = grp.sigma[static_cast<size_t>(label - 1)].inverse();
        root.trail = -1;
        root.cp = static_cast<float>(std::abs(c_against_p(root.A)));
        shells_.push_back({root});
    }

    int label() const { return label_; }
    int depth() const { return static_cast<int>(shells_.size()) - 1; }
    double last_tail() const { return last_tail_; }
    int last_depth() const { return last_depth_; }

    // E_label(z, 2) for z in the upper half-plane.  Grows the stored tables on
    // demand; throws TailTooLarge when max_depth cannot deliver the target.
    double operator()(cx z) {
        if (!(z.imag() > 0.0))
            throw InvalidConfiguration("EisensteinSeries: evaluation point not in the upper half-plane");
        z = reduce_to_thick(z);

        EvalFrame f;
        f.zx = z.real();
        f.zy = z.imag();
        for (int j = 0; j < r_; ++j) {
            const cx zj = sigma_inv_[static_cast<size_t>(j)].apply(z);
            if (!(zj.imag() > 0.0))
                throw EisensteinFailed("EisensteinSeries: cusp coordinate left the half-plane");
            f.zeta.push_back(zj);
        }

        double acc = center(shells_[0][0], f);
        std::vector<double> tot, pol;
        for (int len = 0;; ++len) {
            if (len >= static_cast<int>(shells_.size())) {
                if (len > opt_.max_depth)
                    throw TailTooLarge("EisensteinSeries: shell budget exhausted before tail target");
                grow_shell();
            }
            double s_tot = 0.0, s_pol = 0.0;
            for (const Node& nd : shells_[static_cast<size_t>(len)]) {
                const double s = families(nd, f);
                s_tot += s;
                if (nd.cp <= opt_.sweep_c_cut) s_pol += s;
            }
            acc += s_tot;
            tot.push_back(s_tot);
            pol.push_back(s_pol);

            // Shell sums oscillate with period r because composite-parabolic
            // blocks recur every r letters, so the decay rate is measured at
            // fixed phase, one period apart, and the tail window spans a full
            // period.  The window mass is split by the node classifier: the
            // low-|c| population sits on conjugated parabolic chains whose
            // shells decay like the inverse fourth power of the word length
            // and is continued polynomially, while the remainder is continued
            // with the worst measured per-period ratio.  Pairs touching the
            // root shell are skipped: it carries transient mass that biases
            // the rate.
            if (len >= std::max(opt_.min_depth, 2 * r_ - 1)) {
                double sm = 0.0, smpol = 0.0;
                for (int k = len - r_ + 1; k <= len; ++k) {
                    sm += tot[static_cast<size_t>(k)];
                    smpol += pol[static_cast<size_t>(k)];
                }
                if (sm <= 0.0) return finish(acc, 0.0, smpol, len, f);
                double rho = 0.0;
                int pairs = 0;
                for (int p = 0; p < r_; ++p) {
                    const int hi = len - p, lo = len - p - r_;
                    if (lo < 1) continue;
                    ++pairs;
                    const double shi = tot[static_cast<size_t>(hi)] - pol[static_cast<size_t>(hi)];
                    const double slo = tot[static_cast<size_t>(lo)] - pol[static_cast<size_t>(lo)];
                    if (shi <= 0.0) continue;
                    rho = std::max(rho, (slo > 0.0) ? shi / slo : 1.0);
                }
                if (pairs >= 2) {
                    rho = std::min(rho, 0.8);
                    const double tail_geo = (sm - smpol) * rho / (1.0 - rho);
                    const double tail_pol = smpol * static_cast<double>(len + 2) /
                                            (3.0 * static_cast<double>(r_));
                    const double tail = tail_geo + tail_pol;
                    if (tail <= opt_.rel_tol * acc)
                        return finish(acc + tail, tail, smpol, len, f);
                }
            }
            if (len >= opt_.max_depth)
                throw TailTooLarge("EisensteinSeries: tail estimate above target at max depth");
        }
    }

private:
    struct Node {
        MoebiusMap A;   // sigma_label^{-1} * v
        float cp;       // |c| of A * sigma_P: order one on composite runs
        int trail;      // signed letter id 2*j (+) / 2*j+1 (-); -1 at the root
    };
    struct SigmaCols {
        double a, b, c, d;
    };
    struct EvalFrame {
        double zx, zy;
        std::vector<cx> zeta;  // sigma_j^{-1} z per basis letter
    };

    static SigmaCols cols_of(const MoebiusMap& s) {
        return {s.a.real(), s.b.real(), s.c.real(), s.d.real()};
    }

    // Cusp heights of z sorted into a single scalar, dominated by the largest
    // but breaking ties lexicographically so that orbit points with equal
    // maxima still pick one canonical representative.
    double height_score(cx z) const {
        double h[8];
        int n = 0;
        h[n++] = sigma_p_inv_.apply(z).imag();
        for (const MoebiusMap& si : sigma_inv_) h[n++] = si.apply(z).imag();
        std::sort(h, h + n, std::greater<double>());
        double score = 0.0, w = 1.0;
        for (int k = 0; k < std::min(n, 4); ++k, w *= 1e-3) score += w * h[k];
        return score;
    }

    // The sum is invariant along the orbit of z, but the word-length tail is
    // smallest where the dominant coset sits at the identity.  Climb to the
    // orbit point with the largest cusp height, looking two letters ahead to
    // pass single-step stalls; strict ascent on a height spectrum
    // accumulating only at zero, so the walk terminates.
    cx reduce_to_thick(cx z) const {
        std::vector<const MoebiusMap*> gens;
        for (const MoebiusMap& g : letters_) gens.push_back(&g);
        gens.push_back(&comp_);
        gens.push_back(&comp_inv_);

        double best = height_score(z);
        for (int it = 0; it < 64; ++it) {
            cx cand = z;
            double hc = best;
            for (const MoebiusMap* g : gens) {
                const cx w = g->apply(z);
                const double h = height_score(w);
                if (h > hc) {
                    hc = h;
                    cand = w;
                }
            }
            if (!(hc > best * (1.0 + 3e-9))) {
                for (const MoebiusMap* g1 : gens) {
                    const cx w1 = g1->apply(z);
                    for (const MoebiusMap* g2 : gens) {
                        const cx w = g2->apply(w1);
                        const double h = height_score(w);
                        if (h > hc) {
                            hc = h;
                            cand = w;
                        }
                    }
                }
            }
            if (!(hc > best * (1.0 + 3e-9))) break;
            z = cand;
            best = hc;
        }
        return z;
    }

    // Accepted sum; adds the composite-parabolic completion when those
    // families still carry weight at this z.
    double finish(double value, double tail, double recent_pol, int len, const EvalFrame& f) {
        if (recent_pol > 0.02 * opt_.rel_tol * value)
            for (const Node& nd : annex_for(len)) value += families(nd, f);
        last_tail_ = tail;
        last_depth_ = len;
        return value;
    }

    double c_against_p(const MoebiusMap& a) const {
        return a.c.real() * sigma_p_.a + a.d.real() * sigma_p_.c;
    }

    double center(const Node& nd, const EvalFrame& f) const {
        const double c = nd.A.c.real(), d = nd.A.d.real();
        const double t1 = c * f.zx + d, t2 = c * f.zy;
        const double im = f.zy / (t1 * t1 + t2 * t2);
        return im * im;
    }

    // Families hanging off the core v: all basis directions except the
    // trailing letter (and the degenerate direction at the root).
    double families(const Node& nd, const EvalFrame& f) const {
        const double ac = nd.A.c.real(), ad = nd.A.d.real();
        const double cc = center(nd, f);
        const int trail_letter = nd.trail < 0 ? -1 : nd.trail / 2;
        double s = 0.0;
        for (int j = 0; j < r_; ++j) {
            if (j == trail_letter) continue;
            if (nd.trail < 0 && j == m_) continue;
            const SigmaCols& sc = sigma_cols_[static_cast<size_t>(j)];
            const double c = ac * sc.a + ad * sc.c;
            const double d = ac * sc.b + ad * sc.d;
            // Width-one normalization forces |c| >= 1 (discreteness).
            if (std::abs(c) < 0.5)
                throw EisensteinFailed("EisensteinSeries: cusp-width bound violated");
            const cx& zj = f.zeta[static_cast<size_t>(j)];
            const double y = zj.imag();
            const double x = zj.real() + d / c;
            s += y * y * detail::lattice_inverse_quartic(x, y) / (c * c * c * c) - cc;
        }
        return s;
    }

    void grow_shell() {
        const std::vector<Node>& prev = shells_.back();
        std::size_t total = 0;
        for (const auto& sh : shells_) total += sh.size();
        std::vector<Node> next;
        next.reserve(prev.size() * (2 * static_cast<size_t>(r_) - 1));
        for (const Node& nd : prev) {
            for (int id = 0; id < 2 * r_; ++id) {
                if (nd.trail >= 0 && id == (nd.trail ^ 1)) continue;  // free reduction
                if (nd.trail < 0 && id / 2 == m_) continue;  // canonical coset: no leading S_label
                Node child;
                child.A = nd.A * letters_[static_cast<size_t>(id)];
                child.trail = id;
                child.cp = static_cast<float>(std::abs(c_against_p(child.A)));
                next.push_back(child);
            }
        }
        if (total + next.size() > opt_.max_nodes)
            throw TailTooLarge("EisensteinSeries: node budget exhausted");
        shells_.push_back(std::move(next));
    }

    // Deterministic extensions along the two composite-parabolic patterns
    // from near-parabolic frontier nodes.  All extensions are fresh reduced
    // words, so adding their families keeps the partial sum exact.
    const std::vector<Node>& annex_for(int depth) {
        auto it = annex_.find(depth);
        if (it != annex_.end()) return it->second;

        const std::vector<Node>& frontier = shells_[static_cast<size_t>(depth)];
        std::vector<const Node*> selected;
        for (const Node& nd : frontier)
            if (nd.cp <= opt_.sweep_c_cut) selected.push_back(&nd);
        if (selected.size() > opt_.sweep_cap) {
            std::nth_element(selected.begin(), selected.begin() + static_cast<long>(opt_.sweep_cap),
                             selected.end(),
                             [](const Node* a, const Node* b) { return a->cp < b->cp; });
            selected.resize(opt_.sweep_cap);
        }

        std::vector<Node> annex;
        const int steps = opt_.sweep_blocks * r_;
        for (const Node* u : selected) {
            // Positive pattern: blocks of P in letters b_r^{-1} ... b_1^{-1}.
            {
                int id;
                if (u->trail >= 0 && u->trail % 2 == 1) {
                    const int j = u->trail / 2;
                    id = 2 * ((j + r_ - 1) % r_) + 1;
                } else {
                    id = 2 * (r_ - 1) + 1;
                }
                walk(*u, id, -1, steps, annex);
            }
            // Negative pattern: blocks of P^{-1} in letters b_1 ... b_r.
            {
                int id;
                if (u->trail >= 0 && u->trail % 2 == 0) {
                    const int j = u->trail / 2;
                    id = 2 * ((j + 1) % r_);
                } else {
                    id = 0;
                }
                walk(*u, id, +1, steps, annex);
            }
        }
        return annex_.emplace(depth, std::move(annex)).first->second;
    }

    void walk(const Node& from, int first_id, int dir, int steps, std::vector<Node>& out) const {
        if (from.trail >= 0 && first_id == (from.trail ^ 1)) return;  // would cancel
        MoebiusMap a = from.A;
        int id = first_id;
        for (int s = 0; s < steps; ++s) {
            a = a * letters_[static_cast<size_t>(id)];
            Node nd;
            nd.A = a;
            nd.trail = id;
            nd.cp = 99.0f;
            out.push_back(nd);
            const int j = id / 2;
            id = dir > 0 ? 2 * ((j + 1) % r_) : 2 * ((j + r_ - 1) % r_) + 1;
        }
    }

    EisensteinOptions opt_;
    int label_;
    int r_ = 0;
    int m_ = 0;
    double last_tail_ = 0.0;
    int last_depth_ = 0;
    std::vector<MoebiusMap> letters_;     // b_j, b_j^{-1} interleaved
    std::vector<SigmaCols> sigma_cols_;   // scaling of the letter's own cusp
    std::vector<MoebiusMap> sigma_inv_;
    SigmaCols sigma_p_;
    MoebiusMap sigma_p_inv_;
    MoebiusMap comp_, comp_inv_;  // the composite generator and its inverse
    std::vector<std::vector<Node>> shells_;
    std::map<int, std::vector<Node>> annex_;
};

}  // namespace moduli
