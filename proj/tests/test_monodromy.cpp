#include <catch2/catch_amalgamated.hpp>

#include "moduli/monodromy.hpp"

using namespace moduli;

namespace {

PunctureConfig three_punctures() { return PunctureConfig(std::vector<cx>{}); }

}  // namespace

TEST_CASE("loop system geometry stays clear of punctures") {
    PunctureConfig cfg(std::vector<cx>{cx(0.3, 0.0), cx(0.6, 0.4)});
    LoopSystem sys = build_loops(cfg);
    REQUIRE(sys.loops.size() == 4);
    REQUIRE(sys.base.imag() > 2.0);
    for (size_t i = 0; i < sys.loops.size(); ++i) {
        const auto& loop = sys.loops[i];
        REQUIRE(loop.size() > 10);
        REQUIRE(std::abs(loop.front() - sys.base) < 1e-12);
        REQUIRE(std::abs(loop.back() - sys.base) < 1e-12);
        // Every segment keeps a positive distance from every puncture.
        for (size_t s = 0; s + 1 < loop.size(); ++s)
            for (size_t j = 0; j < sys.punctures.size(); ++j) {
                double d = segment_point_distance(loop[s], loop[s + 1], sys.punctures[j]);
                REQUIRE(d > 0.02 * sys.radii[j]);
            }
    }
}

TEST_CASE("three punctures: local loops are parabolic and the relation closes") {
    auto cfg = three_punctures();
    RationalQ q = build_q(cfg, AccessoryParams::zeros(3));
    MonodromyRep rep = monodromy(q);

    REQUIRE(rep.M.size() == 3);
    CHECK(rep.max_parabolic_defect < 1e-9);
    CHECK(rep.relation_defect < 1e-8);
    CHECK(rep.wronskian_drift < 1e-9);
    CHECK((rep.order == "positional" || rep.order == "positional-reversed"));

    // The loop at infinity closes the product exactly and is itself parabolic.
    MoebiusMap prod = rep.M[0] * rep.M[1] * rep.M[2];
    CHECK(proj_dist(prod, MoebiusMap::identity()) < 1e-12);
    cx t3 = rep.M[2].trace();
    CHECK(std::abs(t3 * t3 - 4.0) < 1e-8);

    // Pair products wind around two punctures; on the thrice-punctured sphere
    // those are again punctures' neighborhoods, so traces are +-2.
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = i + 1; j < 3; ++j) {
            cx t = (rep.M[i] * rep.M[j]).trace();
            CHECK(std::abs(t * t - 4.0) < 1e-7);
        }
}

TEST_CASE("four punctures at the symmetric point with vanishing accessory parameter") {
    PunctureConfig cfg(std::vector<cx>{cx(0.5, 0.0)});
    RationalQ q = build_q(cfg, AccessoryParams::zeros(4));
    MonodromyRep rep = monodromy(q);

    REQUIRE(rep.M.size() == 4);
    CHECK(rep.max_parabolic_defect < 1e-9);
    CHECK(rep.relation_defect < 1e-8);

    // w = 1/2 with c = 0 is an exactly Fuchsian point: the whole group is
    // conjugate into the reals, so every product has a real trace.
    for (size_t i = 0; i < 4; ++i) {
        cx ti = rep.M[i].trace();
        CHECK(std::abs(ti * ti - 4.0) < 1e-9);
        for (size_t j = i + 1; j < 4; ++j) {
            cx t = (rep.M[i] * rep.M[j]).trace();
            CHECK(std::abs(t.imag()) < 1e-8);
            CHECK(std::abs(t.real()) > 2.0);  // two-puncture loops are hyperbolic
        }
    }
}

TEST_CASE("wrong accessory parameter shows up as complex pair traces") {
    PunctureConfig cfg(std::vector<cx>{cx(0.5, 0.0)});
    RationalQ q = build_q(cfg, AccessoryParams{{cx(0.3, 0.0)}});
    MonodromyRep rep = monodromy(q);

    // Local behavior is unchanged...
    CHECK(rep.max_parabolic_defect < 1e-9);
    CHECK(rep.relation_defect < 1e-8);
    // ...but the group is no longer Fuchsian.
    double worst = 0.0;
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = i + 1; j < 4; ++j)
            worst = std::max(worst, std::abs((rep.M[i] * rep.M[j]).trace().imag()));
    CHECK(worst > 1e-3);
}

TEST_CASE("router detours around a puncture sitting on the straight tail") {
    // The puncture at 0.02 + 0.8i blocks the vertical descent toward 0.
    PunctureConfig cfg(std::vector<cx>{cx(0.02, 0.8)});
    RationalQ q = build_q(cfg, AccessoryParams::zeros(4));
    MonodromyRep rep = monodromy(q);
    CHECK(rep.max_parabolic_defect < 1e-8);
    CHECK(rep.relation_defect < 1e-7);
}

TEST_CASE("monodromy is insensitive to the polygonal resolution of the loops") {
    PunctureConfig cfg(std::vector<cx>{cx(0.4, 0.2)});
    RationalQ q = build_q(cfg, AccessoryParams::zeros(4));
    MonodromyOptions coarse, fine;
    coarse.circle_segments = 16;
    fine.circle_segments = 40;
    MonodromyRep a = monodromy(q, coarse);
    MonodromyRep b = monodromy(q, fine);
    for (size_t i = 0; i < a.M.size(); ++i)
        CHECK(proj_dist(a.M[i], b.M[i]) < 1e-9);
}
