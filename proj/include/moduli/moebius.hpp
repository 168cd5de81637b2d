#pragma once

// Moebius transformations as det-1 normalized complex 2x2 matrices with a
// deterministic sign choice, conjugacy classification, fixed points on the
// Riemann sphere, and conjugation of a finitely generated group into the real
// subgroup when a real form exists.

#include <optional>
#include <vector>

#include "moduli/numerics.hpp"

namespace moduli {

struct NearDegenerate : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotRealizable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A point of the Riemann sphere.
struct CP1 {
    cx z{};
    bool inf = false;
    static CP1 infinity() { return {cx(0.0), true}; }
    static CP1 at(cx v) { return {v, false}; }
};

struct MoebiusMap {
    // Entries row-major [[a, b], [c, d]], det = 1, sign normalized so the
    // first entry of (a, b, c, d) that is not negligible has Re >= 0
    // (Im > 0 breaking ties on the imaginary axis).
    cx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    MoebiusMap() = default;
    MoebiusMap(cx a_, cx b_, cx c_, cx d_, bool normalize_now = true)
        : a(a_), b(b_), c(c_), d(d_) {
        if (normalize_now) normalize();
    }

    cx det() const { return a * d - b * c; }
    cx trace() const { return a + d; }
    double scale() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }

    void normalize() {
        cx dt = det();
        if (!(std::abs(dt) > 0.0)) throw std::invalid_argument("MoebiusMap: singular matrix");
        cx s = std::sqrt(dt);
        a /= s; b /= s; c /= s; d /= s;
        fix_sign();
    }

    void fix_sign() {
        const double tiny = 1e-14 * std::max(1.0, scale());
        const cx* entries[4] = {&a, &b, &c, &d};
        for (const cx* e : entries) {
            if (std::abs(*e) <= tiny) continue;
            bool flip = false;
            if (e->real() < -tiny)
                flip = true;
            else if (std::abs(e->real()) <= tiny && e->imag() < 0.0)
                flip = true;
            if (flip) { a = -a; b = -b; c = -c; d = -d; }
            return;
        }
    }

    MoebiusMap inverse() const { return MoebiusMap(d, -b, -c, a); }

    friend MoebiusMap operator*(const MoebiusMap& l, const MoebiusMap& r) {
        return MoebiusMap(l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
                          l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d);
    }

    cx apply(cx z) const {
        cx den = c * z + d;
        if (std::abs(den) == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
        return (a * z + b) / den;
    }

    CP1 apply(const CP1& p) const {
        if (p.inf) {
            if (std::abs(c) == 0.0) return CP1::infinity();
            return CP1::at(a / c);
        }
        cx den = c * p.z + d;
        if (std::abs(den) <= 1e-300) return CP1::infinity();
        return CP1::at((a * p.z + b) / den);
    }

    // Derivative d(Mz)/dz = 1/(cz+d)^2 for det 1.
    cx derivative(cx z) const {
        cx den = c * z + d;
        return 1.0 / (den * den);
    }

    double max_imag() const {
        return std::max({std::abs(a.imag()), std::abs(b.imag()), std::abs(c.imag()), std::abs(d.imag())});
    }

    MoebiusMap real_part() const {
        return MoebiusMap(cx(a.real()), cx(b.real()), cx(c.real()), cx(d.real()));
    }

    static MoebiusMap identity() { return MoebiusMap(); }
    static MoebiusMap translation(cx t) { return MoebiusMap(1.0, t, 0.0, 1.0); }
    // diag(s, 1/s)
    static MoebiusMap scaling(cx s) { return MoebiusMap(s, 0.0, 0.0, 1.0 / s); }
};

// Frobenius distance in SL(2) modulo the overall sign.
inline double proj_dist(const MoebiusMap& m, const MoebiusMap& n) {
    auto frob = [](cx p, cx q, cx r, cx s) {
        return std::sqrt(std::norm(p) + std::norm(q) + std::norm(r) + std::norm(s));
    };
    double dplus = frob(m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d);
    double dminus = frob(m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d);
    return std::min(dplus, dminus);
}

enum class MapKind { identity, parabolic, elliptic, hyperbolic, loxodromic };

inline const char* to_string(MapKind k) {
    switch (k) {
        case MapKind::identity: return "identity";
        case MapKind::parabolic: return "parabolic";
        case MapKind::elliptic: return "elliptic";
        case MapKind::hyperbolic: return "hyperbolic";
        case MapKind::loxodromic: return "loxodromic";
    }
    return "?";
}

struct MapClass {
    MapKind kind = MapKind::identity;
    cx trace{};       // sign-normalized representative
    cx multiplier{};  // lambda^2 with |lambda| >= 1; 1 for identity/parabolic
    std::vector<CP1> fixed;
};

// Classification thresholds: |tr^2 - 4| <= tol is treated as parabolic.  In
// the narrow band where tr^2 - 4 is nonzero but below near_tol the class is
// genuinely ambiguous at working precision, and we refuse to guess.
inline MapClass classify(const MoebiusMap& m, double tol = 1e-10, double near_tol = 1e-12) {
    MapClass out;
    const cx t = m.trace();
    const cx disc = t * t - 4.0;
    const double sc = std::max(1.0, m.scale());

    if (proj_dist(m, MoebiusMap::identity()) <= tol * sc) {
        out.kind = MapKind::identity;
        out.trace = t;
        out.multiplier = 1.0;
        return out;
    }

    auto fixed_pts = [&](bool parab) {
        std::vector<CP1> f;
        const cx s = std::sqrt(disc);
        if (std::abs(m.c) > tol * sc) {
            if (parab) {
                f.push_back(CP1::at((m.a - m.d) / (2.0 * m.c)));
            } else {
                f.push_back(CP1::at((m.a - m.d + s) / (2.0 * m.c)));
                f.push_back(CP1::at((m.a - m.d - s) / (2.0 * m.c)));
            }
        } else {
            f.push_back(CP1::infinity());
            if (!parab && std::abs(m.d - m.a) > tol * sc) f.push_back(CP1::at(m.b / (m.d - m.a)));
        }
        return f;
    };

    const double ad = std::abs(disc);
    if (ad <= near_tol) {
        // Zero to machine precision: parabolic.  A tiny-but-nonzero
        // discriminant cannot be classified honestly in double precision.
        if (ad > 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::norm(t)))
            throw NearDegenerate("classify: trace^2 - 4 nonzero but below resolution; raise precision");
        out.kind = MapKind::parabolic;
        out.trace = t;
        out.multiplier = 1.0;
        out.fixed = fixed_pts(true);
        return out;
    }
    if (ad <= tol) {
        out.kind = MapKind::parabolic;
        out.trace = t;
        out.multiplier = 1.0;
        out.fixed = fixed_pts(true);
        return out;
    }

    const cx s = std::sqrt(disc);
    cx lam = (t + s) / 2.0;
    if (std::abs(lam) < 1.0) lam = (t - s) / 2.0;
    out.multiplier = lam * lam;
    out.trace = t;
    out.fixed = fixed_pts(false);
    const bool treal = std::abs(t.imag()) <= tol * (1.0 + std::abs(t));
    if (treal) {
        const double t2 = sqr(t.real());
        out.kind = (t2 < 4.0) ? MapKind::elliptic : MapKind::hyperbolic;
    } else {
        out.kind = MapKind::loxodromic;
    }
    return out;
}

// Fixed point of a known-parabolic map.  Callers with structural parabolicity
// (monodromy of a regular singular point with equal exponents) assert it here
// instead of running the general classifier, whose refusal band would reject
// trace defects between machine precision and the classification tolerance.
inline CP1 parabolic_fixed_point(const MoebiusMap& m, double tol = 1e-8) {
    const cx t = m.trace();
    if (std::abs(t * t - 4.0) > tol * std::max(1.0, std::norm(t)))
        throw NearDegenerate("parabolic_fixed_point: matrix is not parabolic");
    if (std::abs(m.c) <= 1e-10 * std::max(1.0, m.scale())) return CP1::infinity();
    return CP1::at((m.a - m.d) / (2.0 * m.c));
}

// Matrix of the Moebius map sending (z1, z2, z3) -> (0, 1, infinity).
inline MoebiusMap cross_ratio_map(const CP1& z1, const CP1& z2, const CP1& z3) {
    // Rows of [[z2-z3, -z1(z2-z3)], [z2-z1, -z3(z2-z1)]] with limits when one
    // of the three points is infinite.
    if (z1.inf) return MoebiusMap(0.0, z2.z - z3.z, 1.0, -z3.z);
    if (z2.inf) return MoebiusMap(1.0, -z1.z, 1.0, -z3.z);
    if (z3.inf) return MoebiusMap(1.0, -z1.z, 0.0, z2.z - z1.z);
    return MoebiusMap(z2.z - z3.z, -z1.z * (z2.z - z3.z), z2.z - z1.z, -z3.z * (z2.z - z1.z));
}

struct RealizeResult {
    MoebiusMap conjugator;             // T with T g T^{-1} real for all generators
    std::vector<MoebiusMap> real_gens; // imaginary parts zeroed after verification
    double residual = 0.0;             // max |Im entry| before zeroing
};

// Conjugate a nonelementary group generated by `gens` into PSL(2, R).
// Strategy: normalize one parabolic generator to the unit translation (or one
// hyperbolic generator to a dilation), then use the residual diagonal /
// translation freedom to make a second, noncommuting generator real.  If the
// group has a real form this forces realness of every generator.
inline RealizeResult conjugate_into_real(const std::vector<MoebiusMap>& gens,
                                         double residual_tol = 1e-9) {
    if (gens.empty()) throw std::invalid_argument("conjugate_into_real: no generators");

    // Pick the anchor generator: first parabolic, else first hyperbolic.  A
    // trace defect inside the classifier's refusal band is treated as
    // parabolic here: the construction ends with a residual audit, so a
    // misjudged anchor cannot produce a silently wrong result.
    auto robust_classify = [](const MoebiusMap& m) {
        try {
            return classify(m);
        } catch (const NearDegenerate&) {
            MapClass cl;
            cl.kind = MapKind::parabolic;
            cl.trace = m.trace();
            cl.multiplier = 1.0;
            cl.fixed = {parabolic_fixed_point(m, 1e-6)};
            return cl;
        }
    };
    int anchor = -1;
    MapClass acls;
    for (int pass = 0; pass < 2 && anchor < 0; ++pass) {
        for (size_t i = 0; i < gens.size(); ++i) {
            MapClass cl = robust_classify(gens[i]);
            if ((pass == 0 && cl.kind == MapKind::parabolic) ||
                (pass == 1 && cl.kind == MapKind::hyperbolic)) {
                anchor = static_cast<int>(i);
                acls = cl;
                break;
            }
        }
    }
    if (anchor < 0)
        throw NotRealizable("conjugate_into_real: no parabolic or hyperbolic generator to anchor on");

    MoebiusMap T = MoebiusMap::identity();
    auto conj_all = [&](const MoebiusMap& S) {
        T = S * T;
    };

    if (acls.kind == MapKind::parabolic) {
        const CP1 p = acls.fixed.at(0);
        if (!p.inf) conj_all(MoebiusMap(0.0, 1.0, 1.0, -p.z));
        // anchor is now +-[[1, beta], [0, 1]]
        MoebiusMap g1 = T * gens[static_cast<size_t>(anchor)] * T.inverse();
        cx beta = g1.b / g1.a;  // projective sign drops out
        if (std::abs(beta) < 1e-13)
            throw NotRealizable("conjugate_into_real: anchor parabolic degenerates under normalization");
        cx s = std::exp(cx(0.0, -0.5 * std::arg(beta))) / std::sqrt(std::abs(beta));
        conj_all(MoebiusMap::scaling(s));
    } else {
        const CP1 p = acls.fixed.at(0), q = acls.fixed.at(1);
        if (q.inf)
            conj_all(MoebiusMap(0.0, 1.0, 1.0, -p.z));  // p -> infinity handled below by swap
        else if (p.inf)
            conj_all(MoebiusMap(1.0, -q.z, 0.0, 1.0));  // keep infinity, send q -> 0? (translation)
        else
            conj_all(MoebiusMap(1.0, -p.z, 1.0, -q.z));
    }

    // Locate a generator that does not commute with the anchor.
    MoebiusMap g1n = T * gens[static_cast<size_t>(anchor)] * T.inverse();
    int second = -1;
    for (size_t i = 0; i < gens.size(); ++i) {
        if (static_cast<int>(i) == anchor) continue;
        MoebiusMap gi = T * gens[i] * T.inverse();
        if (proj_dist(g1n * gi, gi * g1n) > 1e-8 * std::max(1.0, gi.scale())) {
            second = static_cast<int>(i);
            break;
        }
    }

    if (second >= 0) {
        MoebiusMap g2 = T * gens[static_cast<size_t>(second)] * T.inverse();
        if (acls.kind == MapKind::parabolic) {
            // Residual freedom: real translations.  Imaginary translation part
            // fixes Im(a2) using the (automatically real) c2 entry.
            if (std::abs(g2.c.real()) > 1e-13) {
                double y = -g2.a.imag() / g2.c.real();
                conj_all(MoebiusMap::translation(cx(0.0, y)));
            }
        } else {
            // Residual freedom: diagonal scalings.  A unit-modulus scaling
            // makes the b entry real; a and d are real from the trace data.
            if (std::abs(g2.b) > 1e-13) {
                cx s = std::exp(cx(0.0, -0.5 * std::arg(g2.b)));
                conj_all(MoebiusMap::scaling(s));
            }
        }
    }

    RealizeResult out;
    out.conjugator = T;
    double res = 0.0;
    for (const auto& g : gens) {
        MoebiusMap h = T * g * T.inverse();
        res = std::max(res, h.max_imag());
        out.real_gens.push_back(h.real_part());
    }
    out.residual = res;
    if (res >= residual_tol)
        throw NotRealizable("conjugate_into_real: residual " + std::to_string(res) +
                            " exceeds realization tolerance");
    return out;
}

}  // namespace moduli
