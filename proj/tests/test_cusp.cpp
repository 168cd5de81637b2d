#include <catch2/catch_amalgamated.hpp>

#include "moduli/cusp.hpp"

using namespace moduli;

namespace {

FuchsianGroupRep three_puncture_group() {
    PunctureConfig cfg(std::vector<cx>{});
    MonodromyRep mono = monodromy(build_q(cfg, AccessoryParams::zeros(3)));
    return realize_fuchsian(cfg, AccessoryParams::zeros(3), mono);
}

FuchsianGroupRep four_puncture_group(cx w) {
    SolveResult solved = solve_accessory(PunctureConfig(std::vector<cx>{w}));
    return realize_fuchsian(solved);
}

// Phase-invariant coefficient ratio a(k) / a(1)^k.
cx mu(const CuspFourier& f, int k) { return f.coeff(k) / std::pow(f.coeff(1), k); }

}  // namespace

// For the thrice-punctured sphere the covering map is classical: near the
// puncture at 0 it expands (up to the scaling phase) as
//   -16 q - 128 q^2 - 704 q^3 - 3072 q^4 - 11488 q^5 - ...
// and near infinity as
//   -q^{-1}/16 + 1/2 - (5/4) q + 0 q^2 + (31/8) q^3 + ...
// (both are rearrangements of the coefficients of the elliptic modular
// function of level two).  All checks below use phase-free combinations.

TEST_CASE("three punctures: density ray limits recover the cusp normalizations") {
    DevelopingMap dev(three_puncture_group());

    CuspLimit h1 = extract_h(dev, 1);
    CuspLimit h2 = extract_h(dev, 2);
    CuspLimit h3 = extract_h(dev, 3);

    CHECK(rel_dev(h1.h, 256.0) < 1e-6);
    CHECK(rel_dev(h2.h, 256.0) < 1e-6);
    CHECK(rel_dev(h3.h, 1.0 / 256.0) < 1e-6);

    // The tail estimator should not report wild uncertainty.
    CHECK(h1.err < 1e-5);
    CHECK(h2.err < 1e-5);
    CHECK(h3.err < 1e-5);
}

TEST_CASE("three punctures: horocycle Fourier coefficients at the finite cusps") {
    DevelopingMap dev(three_puncture_group());

    CuspFourier f1 = local_fourier(dev, 1);
    CHECK(f1.k_min == 1);
    CHECK(f1.closure_error < 1e-9);
    CHECK(rel_dev(std::abs(f1.coeff(1)), 16.0) < 1e-8);
    CHECK(rel_dev(f1.h(), 256.0) < 1e-8);

    // a2/a1^2 = -1/2, and its negative equals the residue of Q at 0 (+1/2).
    CHECK(std::abs(mu(f1, 2) - cx(-0.5)) < 1e-8);
    auto res = build_q(dev.group().cfg, dev.group().c).full_residues();
    CHECK(std::abs(-mu(f1, 2) - res[0]) < 1e-8);

    // Higher phase-free ratios of the classical expansion.
    CHECK(std::abs(mu(f1, 3) - cx(11.0 / 64.0)) < 1e-6);
    CHECK(std::abs(mu(f1, 4) - cx(-3.0 / 64.0)) < 1e-4);

    CuspFourier f2 = local_fourier(dev, 2);
    CHECK(rel_dev(f2.h(), 256.0) < 1e-8);
    CHECK(std::abs(mu(f2, 2) - cx(0.5)) < 1e-8);
    CHECK(std::abs(-mu(f2, 2) - res[1]) < 1e-8);

    // Cross-route agreement with the density-ray extraction.
    DevelopingMap dev2(three_puncture_group());
    CHECK(rel_dev(extract_h(dev2, 1).h, f1.h()) < 1e-6);
}

TEST_CASE("three punctures: expansion at the cusp at infinity") {
    DevelopingMap dev(three_puncture_group());

    CuspFourier f = local_fourier(dev, 3);
    CHECK(f.k_min == -1);
    CHECK(f.closure_error < 1e-8 * 100.0);  // samples sit at |w| ~ 60
    CHECK(rel_dev(std::abs(f.coeff(-1)), 1.0 / 16.0) < 1e-8);
    CHECK(rel_dev(f.h(), 1.0 / 256.0) < 1e-8);

    // Phase-free combinations of the expansion at infinity.  The samples sit
    // at |w| ~ 60, so coefficient k inherits noise amplified by |q0|^{-k}
    // times that scale; tolerances widen accordingly with k.
    CHECK(std::abs(f.coeff(0) - cx(0.5)) < 1e-8);                            // a0
    CHECK(std::abs(f.coeff(-1) * f.coeff(1) - cx(5.0 / 64.0)) < 1e-7);       // a(-1) a(1)
    CHECK(std::abs(f.coeff(2)) < 2e-3);                                      // a2 vanishes
    cx m3 = f.coeff(3) * std::pow(f.coeff(-1), 3);
    CHECK(std::abs(m3 - cx(-31.0 / 32768.0)) < 2e-4);
}

TEST_CASE("three punctures: a wider horocycle sharpens the high coefficients") {
    DevelopingMap dev(three_puncture_group());

    FourierOptions opt;
    opt.q0_abs = 3e-3;
    CuspFourier f = local_fourier(dev, 1, opt);
    CHECK(rel_dev(f.h(), 256.0) < 1e-7);
    CHECK(std::abs(mu(f, 4) - cx(-3.0 / 64.0)) < 1e-6);
    CHECK(rel_dev(mu(f, 5).real(), 359.0 / 32768.0) < 1e-3);
    CHECK(std::abs(mu(f, 5).imag()) < 1e-5);
}

TEST_CASE("four punctures: two extraction routes agree and match the residues") {
    DevelopingMap dev(four_puncture_group(cx(0.5)));
    const auto res = build_q(dev.group().cfg, dev.group().c).full_residues();

    double h_fourier[4];
    for (int label = 1; label <= 4; ++label) {
        CuspLimit ex = extract_h(dev, label);
        CuspFourier fo = local_fourier(dev, label);
        CHECK(rel_dev(ex.h, fo.h()) < 1e-5);
        h_fourier[label - 1] = fo.h();

        if (label < 4) {
            // -a2/a1^2 equals the residue of Q at the puncture.
            cx r = -mu(fo, 2);
            CHECK(std::abs(r - res[static_cast<size_t>(label - 1)]) < 1e-6);
        }
    }

    // At the symmetric point the punctures 0 and 1 are exchangeable.
    CHECK(rel_dev(h_fourier[1], h_fourier[2]) < 1e-6);
}
