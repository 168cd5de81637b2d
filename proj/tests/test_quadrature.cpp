#include <catch2/catch_amalgamated.hpp>

#include "moduli/quadrature.hpp"

#include <cmath>
#include <vector>

using namespace moduli;

namespace {

const DomainQuadrature& three_quad() {
    static DomainQuadrature q{PunctureConfig(std::vector<cx>{})};
    return q;
}

const QuadRegion& find_region(const DomainQuadrature& q, QuadRegion::Kind kind, int puncture,
                              int ring) {
    for (const QuadRegion& r : q.regions())
        if (r.kind == kind && r.puncture == puncture && r.ring == ring) return r;
    throw std::runtime_error("region not found");
}

}  // namespace

TEST_CASE("log-radial rings integrate inverse-square profiles exactly") {
    const DomainQuadrature& q = three_quad();
    // Around the puncture at 0: each dyadic ring of 1/|w|^2 gives 2 pi log 2.
    for (int j : {0, 4, 9}) {
        const QuadRegion& r = find_region(q, QuadRegion::Kind::PatchRing, 0, j);
        const double got = q.integrate_region(r, [](cx w) { return 1.0 / std::norm(w); });
        CHECK(got == Catch::Approx(2.0 * pi * std::log(2.0)).epsilon(1e-13));
    }
}

TEST_CASE("cusp-profile ring integrals match the closed form") {
    const DomainQuadrature& q = three_quad();
    // Hyperbolic density of the punctured disk: (r log(1/r))^{-2}; the ring
    // [alpha, beta] has area 2 pi (1/log(1/beta) - 1/log(1/alpha)).
    for (int j : {1, 6, 9}) {
        const QuadRegion& r = find_region(q, QuadRegion::Kind::PatchRing, 0, j);
        const double a = q.delta(j + 1), b = q.delta(j);
        const double exact = 2.0 * pi * (1.0 / std::log(1.0 / b) - 1.0 / std::log(1.0 / a));
        const double got = q.integrate_region(r, [](cx w) {
            const double rr = std::abs(w);
            const double lg = std::log(1.0 / rr);
            return 1.0 / (rr * rr * lg * lg);
        });
        CHECK(got == Catch::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("node groups tile every truncated domain") {
    const DomainQuadrature& q = three_quad();

    // Region spans partition the node list.
    std::size_t covered = 0;
    for (const QuadRegion& r : q.regions()) {
        CHECK(r.first == covered);
        covered += r.count;
    }
    CHECK(covered == q.nodes().size());

    // Areas of the truncated domains are exact: pi (1/delta^2 - 2 delta^2)
    // for the two finite punctures of the three-puncture configuration.
    std::vector<double> region_areas;
    for (const QuadRegion& r : q.regions())
        region_areas.push_back(q.integrate_region(r, [](cx) { return 1.0; }));
    const std::vector<double> areas = q.assemble_schedule(region_areas);
    REQUIRE(static_cast<int>(areas.size()) == q.levels());
    for (int k = 0; k < q.levels(); ++k) {
        const double d = q.delta(k);
        const double exact = pi * (1.0 / (d * d) - 2.0 * d * d);
        CHECK(areas[static_cast<size_t>(k)] == Catch::Approx(exact).epsilon(1e-9));
    }
}

TEST_CASE("smooth decaying integrand over the whole plane") {
    const DomainQuadrature& q = three_quad();
    const double got = q.integrate_all([](cx w) { return 1.0 / sqr(1.0 + std::norm(w)); });
    // The integral over the plane is pi; the truncation beyond 1/delta_10
    // removes about pi delta_10^2 ~ 3e-8.
    CHECK(got == Catch::Approx(pi).epsilon(1e-6));
    CHECK(pi - got > 0.0);
}

TEST_CASE("excision schedule demands clear separation of punctures") {
    CHECK_THROWS_AS(DomainQuadrature(PunctureConfig(std::vector<cx>{cx(0.05, 0.0)})),
                    InvalidConfiguration);
}

TEST_CASE("node budget stays in the expected band") {
    const DomainQuadrature& q = three_quad();
    CHECK(q.nodes().size() > 10000);
    CHECK(q.nodes().size() < 120000);
    for (const QuadNode& nd : q.nodes()) {
        REQUIRE(nd.weight > 0.0);
        REQUIRE(std::isfinite(nd.w.real()));
    }
}
