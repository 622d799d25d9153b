#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spinmaser/config.hpp"
#include "spinmaser/constants.hpp"
#include "spinmaser/rng.hpp"
#include "spinmaser/state.hpp"

using namespace spinmaser;

TEST_CASE("physical constants: defaults and sign conventions") {
    PhysicalConstants c;
    CHECK(c.gamma_xe < 0.0);
    CHECK(c.g_n < 0.0);
    CHECK(c.gamma_abs() == doctest::Approx(1.18e7));

    // unit-conversion round trips exact to 1e-12
    const double e = 3.7;
    CHECK(std::abs((e * c.ev_to_joule) / c.ev_to_joule - e) <= 1e-12 * e);
    const double b = 56.15; // nT display value
    CHECK(std::abs((b * nano) / nano - b) <= 1e-12 * b);
}

TEST_CASE("larmor_frequency") {
    CHECK(larmor_frequency(750e-9) == doctest::Approx(8.85).epsilon(1e-12));
    CHECK(larmor_frequency(0.0) == 0.0);
    // 8.915 Hz corresponds to ~755.5 nT under the default gamma
    CHECK(larmor_frequency(755.5e-9) == doctest::Approx(8.915).epsilon(1e-3));
    // sign of b0 does not change the reported magnitude
    CHECK(larmor_frequency(-755.5e-9) == larmor_frequency(755.5e-9));

    // linearity f(2x) = 2 f(x) to 1e-12
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double b0 = (rng.next_unit() - 0.5) * 2e-6;
        const double f1 = larmor_frequency(b0);
        const double f2 = larmor_frequency(2.0 * b0);
        CHECK(std::abs(f2 - 2.0 * f1) <= 1e-12 * (std::abs(f2) + 1e-30));
    }
}

TEST_CASE("modulation_index") {
    CHECK(modulation_index(56.15e-9, 0.050) == doctest::Approx(13.2).epsilon(5e-3));
    CHECK(modulation_index(56.15e-9, 0.010) == doctest::Approx(66.0).epsilon(5e-3));
    CHECK(modulation_index(0.0, 3.0) == 0.0);
    CHECK_THROWS_AS(modulation_index(1e-9, 0.0), std::domain_error);

    // m * nu == |gamma| * b up to round-off
    PhysicalConstants c;
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double b = rng.next_unit() * 1e-7;
        const double nu = 1e-3 + rng.next_unit() * 10.0;
        const double lhs = modulation_index(b, nu, c) * nu;
        CHECK(lhs == doctest::Approx(c.gamma_abs() * b).epsilon(1e-14));
    }
}

TEST_CASE("validate_config") {
    ExperimentConfig good;
    good.t2 = 13.65;
    good.t1 = 21.5;
    good.b0 = 750e-9;
    good.sample_rate = 200.0;
    CHECK(validate_config(good).empty());

    SUBCASE("t2 = 0 violates") {
        auto c = good;
        c.t2 = 0.0;
        const auto v = validate_config(c);
        REQUIRE(!v.empty());
        CHECK(v.front().field == "t2");
    }
    SUBCASE("undersampled Larmor violates sample_rate") {
        auto c = good;
        c.sample_rate = 10.0; // 4*|gamma*b0| = 35.4 Hz at 750 nT
        bool hit = false;
        for (const auto& v : validate_config(c))
            if (v.field == "sample_rate") hit = true;
        CHECK(hit);
    }
    SUBCASE("tip angle bound") {
        auto c = good;
        c.theta0 = 3.5;
        REQUIRE(!validate_config(c).empty());
        CHECK(validate_config(c).front().field == "theta0");
    }
    SUBCASE("validation is pure") {
        auto c = good;
        c.t2 = -1.0;
        c.duration = 0.0;
        const auto a = validate_config(c);
        const auto b = validate_config(c);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].field == b[i].field);
            CHECK(a[i].message == b[i].message);
        }
    }
}

TEST_CASE("apply_tip") {
    const PolarizationState up{0.0, 0.0, 1.0};

    SUBCASE("pi inverts") {
        const auto s = apply_tip(up, pi);
        CHECK(std::abs(s.pz + 1.0) <= 1e-15);
        CHECK(std::abs(s.px) <= 1e-15);
        CHECK(std::abs(s.py) <= 1e-15);
    }
    SUBCASE("pi/2 lands on -y (documented sense)") {
        const auto s = apply_tip(up, pi / 2);
        CHECK(std::abs(s.py + 1.0) <= 1e-15);
        CHECK(std::abs(s.pz) <= 1e-15);
    }
    SUBCASE("small tip cosine projection") {
        const auto s = apply_tip(up, pi / 15);
        CHECK(s.pz == doctest::Approx(std::cos(pi / 15)).epsilon(1e-14));
        CHECK(s.pz == doctest::Approx(0.9781).epsilon(1e-4));
    }
    SUBCASE("norm preserved for random states and angles") {
        Rng rng(3);
        for (int i = 0; i < 200; ++i) {
            PolarizationState s{rng.next_gauss(), rng.next_gauss(), rng.next_gauss()};
            const double theta = (rng.next_unit() - 0.5) * 2.0 * pi;
            const auto r = apply_tip(s, theta);
            CHECK(r.norm() == doctest::Approx(s.norm()).epsilon(1e-14));
        }
    }
}

TEST_CASE("polarization state physical bound") {
    CHECK(PolarizationState{0.6, 0.0, 0.8}.physical());
    CHECK(PolarizationState{0.6, 0.0, 0.8000005}.physical()); // inside integration slack
    CHECK_FALSE(PolarizationState{1.2, 0.0, 0.0}.physical());
}
