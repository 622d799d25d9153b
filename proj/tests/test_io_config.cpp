#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "spinmaser/config.hpp"
#include "spinmaser/rng.hpp"
#include "spinmaser/timeseries.hpp"

using namespace spinmaser;

TEST_CASE("csv round trip preserves doubles exactly") {
    Rng rng(404);
    TimeSeries ts{0.0, 1.0 / 200.0, {}, "V"};
    for (int i = 0; i < 500; ++i) ts.values.push_back(rng.next_gauss() * std::pow(10.0, i % 7 - 3));

    std::ostringstream out;
    write_timeseries_csv(out, ts, "detected_v");
    std::istringstream in(out.str());
    const auto back = read_timeseries_csv(in, "detected_v");

    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(back.values[i] == ts.values[i]);
    CHECK(back.dt == doctest::Approx(ts.dt).epsilon(1e-12));
}

TEST_CASE("csv errors") {
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK_THROWS_AS(read_timeseries_csv(in), std::runtime_error);
    }
    SUBCASE("non-uniform grid") {
        std::istringstream in("t,value\n0,1\n0.1,1\n0.35,1\n");
        CHECK_THROWS_AS(read_timeseries_csv(in), std::runtime_error);
    }
    SUBCASE("missing column") {
        std::istringstream in("t,value\n0,1\n0.1,1\n");
        CHECK_THROWS_AS(read_timeseries_csv(in, "nope"), std::runtime_error);
    }
}

TEST_CASE("config json round trip") {
    ExperimentConfig c;
    c.b0 = -755.5e-9;
    c.b_ac = 56.15e-9;
    c.nu_ac = 0.9;
    c.chi = -3.2e-7;
    c.t1 = std::numeric_limits<double>::infinity();
    c.t2 = 13.65;
    c.gamma_se = 0.005;
    c.p_rb = -0.6;
    c.p0 = 0.0582;
    c.theta0 = 0.0;
    c.seed_transverse = 1e-6;
    c.noise_rms = 4e-5;
    c.duration = 500.0;
    c.rng_seed = 12345;
    c.integrator = IntegratorKind::FixedRK4;
    c.fixed_step = 2e-4;
    c.noise_in_loop = true;
    c.feedback_phase_rad = 0.25;

    const auto j = config_to_json(c);
    const auto back = config_from_json(j);
    CHECK(back.b0 == c.b0);
    CHECK(back.b_ac == c.b_ac);
    CHECK(std::isinf(back.t1));
    CHECK(back.chi == c.chi);
    CHECK(back.p_rb == c.p_rb);
    CHECK(back.rng_seed == c.rng_seed);
    CHECK(back.integrator == IntegratorKind::FixedRK4);
    CHECK(back.noise_in_loop == true);
    CHECK(back.feedback_phase_rad == c.feedback_phase_rad);
}

TEST_CASE("config json rejects unknown keys") {
    nlohmann::json j = {{"b0", 750e-9}, {"t2", 13.65}, {"no_such_field", 1.0}};
    CHECK_THROWS_WITH_AS(config_from_json(j), "config: unknown key 'no_such_field'",
                         std::runtime_error);
}

TEST_CASE("config json accepts 'inf' strings and rejects others") {
    nlohmann::json j = {{"t1", "inf"}, {"t2", 13.65}};
    CHECK(std::isinf(config_from_json(j).t1));
    nlohmann::json bad = {{"t1", "huge"}};
    CHECK_THROWS_AS(config_from_json(bad), std::runtime_error);
}

TEST_CASE("config json integrator names") {
    nlohmann::json j = {{"integrator", "rk4"}};
    CHECK(config_from_json(j).integrator == IntegratorKind::FixedRK4);
    j["integrator"] = "rk45";
    CHECK(config_from_json(j).integrator == IntegratorKind::AdaptiveRK45);
    j["integrator"] = "verlet";
    CHECK_THROWS_AS(config_from_json(j), std::runtime_error);
}

TEST_CASE("load_config rejects missing files") {
    CHECK_THROWS_AS(load_config("/nonexistent/path/config.json"), std::runtime_error);
}
