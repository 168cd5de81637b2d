// Petersson pairing suite.  The four-puncture configuration at w = 1/2 is
// symmetric under w -> 1-w, which forces closed-form relations among the
// pairings: the self and infinite pairings vanish, the pairings at the
// punctures 0 and 1 are opposite, and the corresponding cusp grams agree.
// The finite-difference test checks the predicted logarithmic derivatives of
// the cusp scalings h_j against direct re-uniformization, including the sign
// flip at the infinite cusp.

#include <catch2/catch_amalgamated.hpp>

#include "moduli/cusp.hpp"
#include "moduli/grams.hpp"
#include "moduli/solve.hpp"

#include <chrono>
#include <cmath>
#include <vector>

using namespace moduli;

namespace {

struct SuiteData {
    PunctureConfig cfg;
    SolveResult solved;
    FuchsianGroupRep grp;
    DomainQuadrature quad;
    SurfaceData sd;
};

SuiteData make_suite(std::vector<cx> w) {
    PunctureConfig cfg(std::move(w));
    SolveResult solved = solve_accessory(cfg);
    FuchsianGroupRep grp = realize_fuchsian(solved);
    DomainQuadrature quad(cfg);
    SurfaceData sd = SurfaceData::build(grp, quad);
    return SuiteData{cfg, solved, grp, quad, std::move(sd)};
}

const SuiteData& four_half() {
    static const SuiteData d = make_suite({cx(0.5, 0.0)});
    return d;
}

// Cusp scalings at a four-puncture configuration, by re-uniformization.
std::vector<double> logh_at(cx w) {
    SolveResult solved = solve_accessory(PunctureConfig(std::vector<cx>{w}));
    FuchsianGroupRep grp = realize_fuchsian(solved);
    DevelopingMap dev(grp);
    std::vector<double> out;
    for (int label = 1; label <= 4; ++label) out.push_back(std::log(extract_h(dev, label).h));
    return out;
}

}  // namespace

TEST_CASE("petersson gram at the symmetric four-puncture point") {
    const SuiteData& d = four_half();
    GramSuite gs(d.cfg, d.solved.c, d.grp, d.quad, d.sd);

    REQUIRE(gs.dim() == 1);
    const cx p = gs.petersson()(0, 0);
    CAPTURE(p.real(), p.imag());
    CHECK(p.real() > 0.0);
    CHECK(std::abs(p.imag()) < 1e-12 * p.real());
    CHECK(gs.condition() == Catch::Approx(1.0));

    const cx g = gs.wp()(0, 0);
    CHECK(g.real() > 0.0);
    CHECK(std::abs(g * p - 1.0) < 1e-12);

    // The surface cache should have carried machine-level transport through
    // the bounded regions; drift only grows on the suppressed far exterior.
    CHECK(d.sd.drift < 1e-3);
}

TEST_CASE("reflection symmetry forces the pairing pattern at w = 1/2") {
    const SuiteData& d = four_half();
    GramSuite gs(d.cfg, d.solved.c, d.grp, d.quad, d.sd);

    const cx e1 = gs.epair(1, 0);
    const cx e2 = gs.epair(2, 0);
    const cx e3 = gs.epair(3, 0);
    const cx e4 = gs.epair(4, 0);
    CAPTURE(e1, e2, e3, e4);

    // Scale of a nondegenerate pairing for relative comparisons.
    const double scale = std::abs(e2);
    CHECK(scale > 0.05);

    CHECK(std::abs(e1) < 2e-4 * std::max(scale, 1.0));
    CHECK(std::abs(e4) < 2e-4 * std::max(scale, 1.0));
    CHECK(std::abs(e2 + e3) < 2e-4 * scale);
    // Real configuration: every pairing is real.
    CHECK(std::abs(e2.imag()) < 2e-4 * scale);

    // The gradient of the corrected action vanishes at the symmetric point.
    CHECK(std::abs(gs.alpha(0)) < 2e-4 * std::max(scale, 1.0));
    CHECK(std::abs(gs.dlogh(1, 0)) < 2e-4);
}

TEST_CASE("cusp grams mirror each other at the symmetric point") {
    const SuiteData& d = four_half();
    GramSuite gs(d.cfg, d.solved.c, d.grp, d.quad, d.sd);

    const auto t0 = std::chrono::steady_clock::now();
    const cx g2 = gs.cusp_gram(2)(0, 0);
    const cx g3 = gs.cusp_gram(3)(0, 0);
    const auto t1 = std::chrono::steady_clock::now();
    CAPTURE(g2.real(), g3.real(), std::chrono::duration<double>(t1 - t0).count());

    CHECK(g2.real() > 0.0);
    CHECK(g3.real() > 0.0);
    CHECK(std::abs(g2.imag()) < 1e-10 * g2.real());
    // The Eisenstein weights are evaluated to a relative 1e-3 target.
    CHECK(rel_dev(g2.real(), g3.real()) < 5e-3);
}

TEST_CASE("finite differences of cusp scalings match the pairing predictions") {
    const SuiteData& d = four_half();
    GramSuite gs(d.cfg, d.solved.c, d.grp, d.quad, d.sd);

    const double h = 0.02;
    const std::vector<double> xp = logh_at(cx(0.5 + h, 0.0));
    const std::vector<double> xm = logh_at(cx(0.5 - h, 0.0));
    const std::vector<double> yp = logh_at(cx(0.5, h));
    const std::vector<double> ym = logh_at(cx(0.5, -h));

    for (int label = 1; label <= 4; ++label) {
        const size_t j = static_cast<size_t>(label - 1);
        const double dx = (xp[j] - xm[j]) / (2.0 * h);
        const double dy = (yp[j] - ym[j]) / (2.0 * h);
        // Wirtinger derivative of a real function: (d/dx - i d/dy) / 2.
        const cx fd = 0.5 * cx(dx, -dy);
        const cx predicted = gs.dlogh(label, 0);
        CAPTURE(label, fd, predicted);
        CHECK(std::abs(fd - predicted) < 2e-3 + 1e-2 * std::abs(predicted));
    }

    // Swap symmetry of the scalings themselves: h_2(1/2 + t) = h_3(1/2 - t).
    CHECK(xp[1] == Catch::Approx(xm[2]).margin(1e-8));
    CHECK(xp[2] == Catch::Approx(xm[1]).margin(1e-8));
}

TEST_CASE("five-puncture petersson data obeys the swap symmetry") {
    const SuiteData d = make_suite({cx(1.0 / 3.0, 0.0), cx(2.0 / 3.0, 0.0)});
    GramSuite gs(d.cfg, d.solved.c, d.grp, d.quad, d.sd);

    REQUIRE(gs.dim() == 2);
    const Eigen::MatrixXcd& p = gs.petersson();
    CAPTURE(p(0, 0), p(0, 1), p(1, 1));

    // Real configuration: real entries; swap symmetry: equal diagonal.
    CHECK(std::abs(p(0, 1).imag()) < 1e-6 * std::abs(p(0, 0)));
    CHECK(rel_dev(p(0, 0).real(), p(1, 1).real()) < 1e-6);
    CHECK(p(0, 0).real() > 0.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(gs.condition() < 1e3);

    // WP gram is the conjugate inverse of the Petersson gram.
    const Eigen::MatrixXcd id = gs.wp().conjugate() * p;
    CHECK((id - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-10);

    // Action gradient is antisymmetric across the swap and real.
    const cx a0 = gs.alpha(0);
    const cx a1 = gs.alpha(1);
    CAPTURE(a0, a1);
    CHECK(std::abs(a0 + a1) < 2e-4 * std::max(1.0, std::abs(a0)));
    CHECK(std::abs(a0.imag()) < 2e-4 * std::max(1.0, std::abs(a0)));
}
