#pragma once

// Monodromy representation of u'' + (1/2) Q u = 0 over the punctured plane.
// Keyhole loops based at a point high above the punctures are transported
// with the pair-state integrator; the resulting matrices are normalized into
// label order (moduli first, then 0, 1, with the loop at infinity last) so
// that the left-to-right product of all n matrices is the identity.
//
// Composition convention: transporting the fundamental matrix Phi (columns
// u, v with Phi = I at the base) around a loop and transposing the result
// makes the map loop -> matrix a homomorphism for "first path, then second"
// products.  The orientation in which the ordered product of the keyhole
// matrices equals the monodromy of one large counterclockwise circle is not
// guessed: both orders are compared against an explicitly transported
// enclosing circle, and the match fixes the ordering used downstream.

#include "moduli/moebius.hpp"
#include "moduli/puncture.hpp"
#include "moduli/transport.hpp"

namespace moduli {

struct MonodromyOptions {
    TransportOptions transport{};
    int circle_segments = 24;
    double match_tol = 1e-6;  // enclosing-circle consistency threshold
};

struct MonodromyRep {
    cx base{};
    std::vector<MoebiusMap> M;               // size n, label order
    std::vector<std::vector<cx>> loops;      // polylines for the n-1 finite loops
    double max_parabolic_defect = 0.0;       // max |tr^2 - 4| over the finite loops
    double relation_defect = 0.0;            // distance of the full product from identity
    double wronskian_drift = 0.0;
    std::string order;                       // "left-to-right" or "right-to-left"
};

namespace detail {

// Recursive segment router: displace the midpoint sideways until the polyline
// keeps the requested distance from every listed point.
inline void route_segment(cx from, cx to, const std::vector<cx>& pts,
                          const std::vector<double>& clearances, int depth,
                          std::vector<cx>& out) {
    int worst = -1;
    double worst_ratio = 1.0;
    for (size_t j = 0; j < pts.size(); ++j) {
        double d = segment_point_distance(from, to, pts[j]);
        double ratio = d / clearances[j];
        if (ratio < worst_ratio) {
            worst_ratio = ratio;
            worst = static_cast<int>(j);
        }
    }
    if (worst < 0 || depth <= 0) {
        out.push_back(to);
        return;
    }
    const cx p = pts[static_cast<size_t>(worst)];
    const cx d = to - from;
    const double L2 = std::norm(d);
    double t = L2 > 0.0 ? std::clamp(((p - from).real() * d.real() + (p - from).imag() * d.imag()) / L2, 0.0, 1.0)
                        : 0.5;
    cx foot = from + t * d;
    cx normal = foot - p;
    double nn = std::abs(normal);
    cx unit = nn > 1e-14 ? normal / nn : cx(0.0, 1.0) * (d / std::abs(d));
    cx mid = p + unit * (1.6 * clearances[static_cast<size_t>(worst)]);
    route_segment(from, mid, pts, clearances, depth - 1, out);
    route_segment(mid, to, pts, clearances, depth - 1, out);
}

inline std::vector<cx> route(cx from, cx to, const std::vector<cx>& pts,
                             const std::vector<double>& clearances) {
    std::vector<cx> path{from};
    route_segment(from, to, pts, clearances, 10, path);
    return path;
}

inline MoebiusMap state_to_monodromy(const PairStateD& s) {
    // Phi = [[u, v], [du, dv]]; the homomorphism convention takes the transpose.
    return MoebiusMap(s.u, s.du, s.v, s.dv);
}

}  // namespace detail

struct LoopSystem {
    cx base{};
    double big_radius = 0.0;
    std::vector<int> traversal;                 // puncture indices sorted by position
    std::vector<std::vector<cx>> loops;         // one keyhole per finite puncture (label order)
    std::vector<cx> punctures;
    std::vector<double> radii;
};

inline LoopSystem build_loops(const PunctureConfig& cfg, int circle_segments = 24) {
    LoopSystem sys;
    sys.punctures = cfg.finite_punctures();
    const size_t m = sys.punctures.size();
    double maxabs = 1.0;
    for (const cx& p : sys.punctures) maxabs = std::max(maxabs, std::abs(p));
    const double Y = 2.0 + 1.1 * maxabs;
    sys.base = cx(0.0, Y);
    sys.big_radius = Y;

    sys.radii.resize(m);
    for (size_t i = 0; i < m; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < m; ++j)
            if (j != i) dmin = std::min(dmin, std::abs(sys.punctures[i] - sys.punctures[j]));
        sys.radii[i] = std::min({0.45 * dmin, 1.0});
    }

    // Traversal order: left to right, upper of two stacked punctures first.
    sys.traversal.resize(m);
    for (size_t i = 0; i < m; ++i) sys.traversal[i] = static_cast<int>(i);
    std::sort(sys.traversal.begin(), sys.traversal.end(), [&](int a, int b) {
        const cx pa = sys.punctures[static_cast<size_t>(a)], pb = sys.punctures[static_cast<size_t>(b)];
        if (pa.real() != pb.real()) return pa.real() < pb.real();
        return pa.imag() > pb.imag();
    });

    sys.loops.resize(m);
    for (size_t i = 0; i < m; ++i) {
        const cx p = sys.punctures[i];
        const double r = sys.radii[i];
        const cx top = p + cx(0.0, r);
        // Tail clearances: avoid every other puncture by most of its circle
        // radius; the target's own clearance is slightly inside its circle so
        // the final approach to the circle top is admissible.
        std::vector<double> clear(m);
        for (size_t j = 0; j < m; ++j) clear[j] = (j == i ? 0.9 * r : 0.8 * sys.radii[j]);
        std::vector<cx> tail = detail::route(sys.base, top, sys.punctures, clear);

        std::vector<cx> loop = tail;
        for (int k = 1; k <= circle_segments; ++k) {
            double th = pi / 2.0 + 2.0 * pi * k / circle_segments;
            loop.push_back(p + r * std::exp(cx(0.0, th)));
        }
        // Return along the reversed tail.
        for (auto it = tail.rbegin() + 1; it != tail.rend(); ++it) loop.push_back(*it);
        sys.loops[i] = std::move(loop);
    }
    return sys;
}

template <class QFunc>
MonodromyRep monodromy_of(const QFunc& q, const PunctureConfig& cfg,
                          const MonodromyOptions& opt = {}) {
    LoopSystem sys = build_loops(cfg, opt.circle_segments);
    const size_t m = sys.punctures.size();

    TransportOptions topt = opt.transport;
    // The keyhole circles legitimately hug their own puncture; clearance is
    // enforced structurally by the router, so the per-segment check is scaled
    // to the smallest circle.
    double rmin = *std::min_element(sys.radii.begin(), sys.radii.end());
    topt.clearance = std::min(topt.clearance, 0.05 * rmin);

    MonodromyRep rep;
    rep.base = sys.base;
    rep.loops = sys.loops;

    std::vector<MoebiusMap> M(m);
    double drift = 0.0;
    for (size_t i = 0; i < m; ++i) {
        PairStateD s = transport_polyline(q, identity_state(), sys.loops[i],
                                          std::span<const cx>(sys.punctures), topt);
        drift = std::max(drift, std::abs(s.wronskian() - 1.0));
        M[i] = detail::state_to_monodromy(s);
    }

    // Enclosing circle, counterclockwise from the base.
    std::vector<cx> big;
    for (int k = 0; k <= opt.circle_segments * 2; ++k) {
        double th = pi / 2.0 + 2.0 * pi * k / (opt.circle_segments * 2);
        big.push_back(sys.big_radius * std::exp(cx(0.0, th)));
    }
    PairStateD sb = transport_polyline(q, identity_state(), big,
                                       std::span<const cx>(sys.punctures), topt);
    drift = std::max(drift, std::abs(sb.wronskian() - 1.0));
    MoebiusMap Mbig = detail::state_to_monodromy(sb);
    rep.wronskian_drift = drift;

    // Find the ordering of the keyhole loops whose product equals the
    // enclosing circle.  Adjacent braid moves preserve both the ordered
    // product and the per-loop conjugacy classes, so any matching
    // permutation yields a valid standard generator system.  Positional
    // sorting plus detours does not always predict the cyclic order at the
    // base (stacked punctures force tails around each other), so the order
    // is searched: the two positional guesses first, then everything.
    const double match_scale = opt.match_tol * std::max(1.0, Mbig.scale());
    auto product_of = [&](const std::vector<int>& order) {
        MoebiusMap p = MoebiusMap::identity();
        for (int idx : order) p = p * M[static_cast<size_t>(idx)];
        return p;
    };
    std::vector<int> seq = sys.traversal;
    std::vector<int> seqR(seq.rbegin(), seq.rend());
    double best_defect = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& cand : {seq, seqR}) {
        double d = proj_dist(product_of(cand), Mbig);
        best_defect = std::min(best_defect, d);
        if (d <= match_scale) {
            rep.order = (&cand == &seq) ? "positional" : "positional-reversed";
            seq = cand;
            found = true;
            break;
        }
    }
    if (!found && m <= 8) {
        std::vector<int> perm(m);
        for (size_t i = 0; i < m; ++i) perm[i] = static_cast<int>(i);
        std::sort(perm.begin(), perm.end());
        do {
            double d = proj_dist(product_of(perm), Mbig);
            if (d < best_defect) best_defect = d;
            if (d <= match_scale) {
                seq = perm;
                rep.order = "searched";
                found = true;
                break;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    if (!found)
        throw std::runtime_error(
            "monodromy: no loop ordering reproduces the enclosing circle (best defect " +
            std::to_string(best_defect) + ")");

    // Bubble-sort the sequence into label order; each adjacent swap
    // (A, B) -> (B, B^{-1} A B) preserves the left-to-right product.
    std::vector<std::pair<int, MoebiusMap>> tagged;
    for (int idx : seq) tagged.emplace_back(idx, M[static_cast<size_t>(idx)]);
    for (size_t pass = 0; pass + 1 < tagged.size(); ++pass) {
        for (size_t k = 0; k + 1 < tagged.size(); ++k) {
            if (tagged[k].first > tagged[k + 1].first) {
                auto A = tagged[k], B = tagged[k + 1];
                tagged[k] = {B.first, B.second};
                tagged[k + 1] = {A.first, B.second.inverse() * A.second * B.second};
            }
        }
    }

    rep.M.resize(m + 1);
    double pd = 0.0;
    MoebiusMap prod = MoebiusMap::identity();
    for (size_t i = 0; i < m; ++i) {
        rep.M[i] = tagged[i].second;
        prod = prod * rep.M[i];
        cx t = rep.M[i].trace();
        pd = std::max(pd, std::abs(t * t - 4.0));
    }
    rep.M[m] = prod.inverse();  // loop at infinity closes the relation exactly
    rep.max_parabolic_defect = pd;
    rep.relation_defect = proj_dist(prod, Mbig);
    return rep;
}

inline MonodromyRep monodromy(const RationalQ& q, const MonodromyOptions& opt = {}) {
    return monodromy_of([&q](cx w) { return q.eval(w); }, q.config(), opt);
}

}  // namespace moduli
