#include <catch2/catch_amalgamated.hpp>

#include "moduli/develop.hpp"
#include "moduli/modular_lambda.hpp"

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

bool near_integer_matrix(const MoebiusMap& m, double tol) {
    for (cx e : {m.a, m.b, m.c, m.d}) {
        if (std::abs(e.imag()) > tol) return false;
        if (std::abs(e.real() - std::round(e.real())) > tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("three punctures: realized group is the level-two congruence group") {
    FuchsianGroupRep g = three_puncture_group();
    REQUIRE(g.S.size() == 3);
    CHECK(g.realize_residual < 1e-8);

    for (const MoebiusMap& S : g.S) {
        // Entries integral, diagonal odd, off-diagonal even.
        CHECK(near_integer_matrix(S, 1e-7));
        auto odd = [](cx e) { return std::lround(std::abs(e.real())) % 2 == 1; };
        auto even = [](cx e) { return std::lround(std::abs(e.real())) % 2 == 0; };
        CHECK(odd(S.a));
        CHECK(odd(S.d));
        CHECK(even(S.b));
        CHECK(even(S.c));
    }

    // Cusp assignments: the loop around 0 fixes 0, around 1 fixes 1, around
    // infinity fixes infinity.
    CHECK(std::abs(g.S[0].b) < 1e-7);
    CHECK(!g.cusp_fixed[0].inf);
    CHECK(std::abs(g.cusp_fixed[0].z) < 1e-9);
    CHECK(std::abs(g.cusp_fixed[1].z - 1.0) < 1e-9);
    CHECK(g.cusp_fixed[2].inf);
    // The infinity generator is (up to sign) the translation by two.
    CHECK(std::abs(std::abs(g.S[2].b.real()) - 2.0) < 1e-7);

    // Cusp scalings conjugate each generator to a unit translation.
    for (size_t i = 0; i < 3; ++i) {
        MoebiusMap t = g.sigma[i].inverse() * g.S[i] * g.sigma[i];
        CHECK(std::abs(t.c) < 1e-7);
        CHECK(std::abs(std::abs((t.a * t.b).real()) - 1.0) < 1e-7);
        CHECK((g.sigma_sign[i] == 1 || g.sigma_sign[i] == -1));
    }
}

TEST_CASE("three punctures: developing map inverts the modular lambda function") {
    FuchsianGroupRep g = three_puncture_group();
    DevelopingMap dev(g);
    // J(tau(w)) = w closes the whole pipeline: transport, realization,
    // normalization, and the classical Hauptmodul agree point by point.
    for (cx w : {cx(0.3, 0.0), cx(0.5, 0.0), cx(-0.7, 0.4), cx(2.2, -0.6), cx(0.1, 0.1)}) {
        auto e = dev.eval(w);
        CHECK(e.im_tau > 0.0);
        cx back = j3_value(e.tau);
        CHECK(std::abs(back - w) < 1e-8);
    }
    CHECK(dev.wronskian_drift() < 1e-10);
}

TEST_CASE("three punctures: deck transformations act by the realized generators") {
    FuchsianGroupRep g = three_puncture_group();
    PunctureConfig cfg(std::vector<cx>{});
    LoopSystem sys = build_loops(cfg);

    const cx w0 = cx(0.42, 0.37);
    DevelopingMap fresh(g);
    cx tau0 = fresh.eval(w0).tau;

    // Around puncture 0 (label 1): continuation multiplies by S_1.
    DevelopingMap looped(g);
    looped.move_along(sys.loops[0]);
    cx tau1 = looped.eval(w0).tau;
    CHECK(std::abs(tau1 - g.S[0].apply(tau0)) < 1e-8);

    // Around puncture 1 (label 2): continuation multiplies by S_2.
    DevelopingMap looped2(g);
    looped2.move_along(sys.loops[1]);
    cx tau2 = looped2.eval(w0).tau;
    CHECK(std::abs(tau2 - g.S[1].apply(tau0)) < 1e-8);

    // Around everything counterclockwise: the product S_1 S_2.
    std::vector<cx> big;
    for (int k = 0; k <= 48; ++k)
        big.push_back(sys.big_radius * std::exp(cx(0.0, pi / 2.0 + 2.0 * pi * k / 48)));
    DevelopingMap looped3(g);
    looped3.move_along(big);
    cx tau3 = looped3.eval(w0).tau;
    CHECK(std::abs(tau3 - (g.S[0] * g.S[1]).apply(tau0)) < 1e-8);
}

TEST_CASE("four punctures: realization at the symmetric point") {
    FuchsianGroupRep g = four_puncture_group(cx(0.5, 0.0));
    REQUIRE(g.S.size() == 4);
    CHECK(g.realize_residual < 1e-7);
    for (const MoebiusMap& S : g.S) {
        CHECK(S.max_imag() == 0.0);  // zeroed after the residual check
        cx t = S.trace();
        CHECK(std::abs(t * t - 4.0) < 1e-7);
    }
    CHECK(std::abs(g.cusp_fixed[1].z) < 1e-9);        // label 2 = puncture 0
    CHECK(std::abs(g.cusp_fixed[2].z - 1.0) < 1e-9);  // label 3 = puncture 1
    CHECK(g.cusp_fixed[3].inf);                       // label 4 = infinity
    // The movable cusp sits at a finite real point distinct from 0 and 1.
    CHECK(!g.cusp_fixed[0].inf);
    CHECK(std::abs(g.cusp_fixed[0].z.imag()) < 1e-9);
}

TEST_CASE("four punctures: density, holomorphy, and curvature of the metric") {
    FuchsianGroupRep g = four_puncture_group(cx(0.5, 0.0));
    DevelopingMap dev(g);

    const cx w0(0.37, 0.21);
    const double h = 1e-3;

    // Holomorphy of tau: the two Wirtinger difference quotients agree with
    // the reported derivative.
    auto ex = [&](cx w) { return dev.eval(w); };
    cx dre = (ex(w0 + h).tau - ex(w0 - h).tau) / (2.0 * h);
    cx dim = (ex(w0 + cx(0.0, h)).tau - ex(w0 - cx(0.0, h)).tau) / (2.0 * cx(0.0, h));
    auto e0 = ex(w0);
    CHECK(std::abs(dre - e0.dtau) < 1e-5 * std::abs(e0.dtau));
    CHECK(std::abs(dim - e0.dtau) < 1e-5 * std::abs(e0.dtau));
    // The h^2 truncation terms of the two quotients have opposite signs, so
    // their difference is ~ h^2 tau'''/3, not zero.
    CHECK(std::abs(dre - dim) < 2e-5 * std::abs(e0.dtau));

    // phi_w against finite differences of phi = log density.
    auto phi = [&](cx w) { return std::log(dev.eval(w).density); };
    double px = (phi(w0 + h) - phi(w0 - h)) / (2.0 * h);
    double py = (phi(w0 + cx(0.0, h)) - phi(w0 - cx(0.0, h))) / (2.0 * h);
    cx phiw_fd = 0.5 * cx(px, -py);
    CHECK(std::abs(phiw_fd - e0.phi_w) < 1e-4 * std::max(1.0, std::abs(e0.phi_w)));

    // Constant curvature -1: the quarter-Laplacian of phi equals half the
    // density (phi_{w wbar} = e^phi / 2).
    double lap = (phi(w0 + h) + phi(w0 - h) + phi(w0 + cx(0.0, h)) + phi(w0 - cx(0.0, h)) -
                  4.0 * phi(w0)) /
                 (h * h);
    CHECK(std::abs(0.25 * lap - 0.5 * e0.density) < 1e-4 * e0.density);

    // Positivity on a scatter of points across the plane.
    for (int k = 0; k < 40; ++k) {
        double ang = 2.0 * pi * k / 40.0;
        cx w = cx(0.5, 0.0) + (0.15 + 0.04 * k) * std::exp(cx(0.0, ang));
        if (dev.group().cfg.clearance(w) < 0.05) continue;
        auto e = dev.eval(w);
        CHECK(e.im_tau > 0.0);
        CHECK(e.density > 0.0);
    }
}

TEST_CASE("four punctures: realization away from the real locus") {
    SolveResult solved = solve_accessory(PunctureConfig(std::vector<cx>{cx(0.5, 0.3)}));
    FuchsianGroupRep g = realize_fuchsian(solved);
    CHECK(g.realize_residual < 1e-6);
    DevelopingMap dev(g);
    for (cx w : {cx(0.2, 0.0), cx(0.8, 0.6), cx(-0.3, 0.2)}) {
        auto e = dev.eval(w);
        CHECK(e.im_tau > 0.0);
        CHECK(e.density > 0.0);
    }
}
