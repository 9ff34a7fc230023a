#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "roughsde/config.hpp"

using namespace roughsde;

namespace {

ExperimentConfig sample_config() {
    ExperimentConfig c;
    c.name = "sample";
    c.drift = CoefficientSpec{
        "weierstrass",
        {{"alpha", 0.5}, {"amplitude", 1.0}, {"base", 2.0}, {"levels", 12.0}},
        {}};
    c.diffusion = CoefficientSpec{"sin_modulated", {{"mu", 1.0}, {"eps", 0.3}}, {}};
    c.terminal = "cos";
    c.x0 = 0.4;
    c.scheme_ns = {8, 16, 32};
    c.coupling_multiplier = 16;
    c.paths = 1000;
    c.master_seed = 9001;
    c.reference = "fine-em";
    c.estimator = "coupled";
    return c;
}

}  // namespace

TEST_CASE("serialization round-trips byte for byte") {
    const auto c = sample_config();
    const std::string text = serialize_config(c);
    const auto parsed = parse_config(text);
    CHECK(serialize_config(parsed) == text);
    CHECK(parsed.name == "sample");
    CHECK(parsed.drift.family == "weierstrass");
    CHECK(parsed.drift.params.at("alpha") == 0.5);
    CHECK(parsed.scheme_ns == std::vector<int>{8, 16, 32});
    CHECK(parsed.paths == 1000);
    CHECK(parsed.master_seed == 9001);
    CHECK(config_hash(parsed) == config_hash(c));
}

TEST_CASE("defaults survive a minimal document") {
    const auto c = parse_config(R"({
        "name": "minimal",
        "drift": {"family": "zero"},
        "diffusion": {"family": "constant", "params": {"mu": 1.0}},
        "terminal": "cos",
        "x0": 0.0,
        "scheme_ns": [8, 16],
        "paths": 100,
        "master_seed": 1
    })");
    CHECK(c.dimension == 1);
    CHECK(c.coupling_multiplier == 16);
    CHECK(c.reference == "pde");
    CHECK(c.estimator == "coupled");
    CHECK(c.sub_steps == 16);
    CHECK(c.moment_p == 2);
    CHECK(c.schauder_gamma == 1);
    CHECK(c.terminal_beta == 1.0);
    CHECK(c.probe.family == "sin");
    CHECK(c.probe.params.at("frequency") == 4.0);
    CHECK(c.reference_accuracy == 1e-6);
    CHECK(c.output_dir == ".");
    CHECK(c.fine_n() == 256);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("the hash is sensitive to every numeric field") {
    const auto base = sample_config();
    const auto h0 = config_hash(base);

    auto seed = base;
    seed.master_seed += 1;
    CHECK(config_hash(seed) != h0);

    auto x0 = base;
    x0.x0 += 1e-9;
    CHECK(config_hash(x0) != h0);

    auto alpha = base;
    alpha.drift.params["alpha"] = 0.25;
    CHECK(config_hash(alpha) != h0);

    auto copy = base;
    CHECK(config_hash(copy) == h0);
}

TEST_CASE("validation refuses malformed experiments") {
    auto bad = sample_config();
    bad.scheme_ns = {8, 12};  // not a power of two
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.scheme_ns = {16, 8};  // not increasing
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.coupling_multiplier = 12;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.paths = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.reference = "oracle";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.estimator = "mlmc";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.sub_steps = 4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sample_config();
    bad.schauder_gamma = 3;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(parse_config("{not json"), std::invalid_argument);
}

TEST_CASE("factories build the declared families") {
    const auto c = sample_config();
    const auto problem = make_problem(c);
    CHECK(problem.start.size() == 1);
    CHECK(problem.start[0] == 0.4);
    CHECK(problem.drift.regularity.alpha == 0.5);
    CHECK(problem.diffusion.ellipticity.lambda > 0.0);

    const auto g = make_terminal("sqrt_abs_sin", 1);
    CHECK(g.regularity.alpha == 0.5);
    CHECK_THROWS_AS(make_terminal("parabola", 1), std::invalid_argument);
    CHECK_THROWS_AS(make_drift(CoefficientSpec{"perlin", {}, {}}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_diffusion(CoefficientSpec{"perlin", {}, {}}, 1),
                    std::invalid_argument);
}

TEST_CASE("probe factory produces matched value and derivative") {
    Vec x(1);
    x[0] = 0.37;

    const auto sine = make_probe(CoefficientSpec{"sin", {{"frequency", 3.0}}, {}}, 1);
    CHECK(sine.value.evaluate(x) == doctest::Approx(std::sin(3.0 * 0.37)).epsilon(1e-15));
    CHECK(sine.derivative.evaluate(x) ==
          doctest::Approx(3.0 * std::cos(3.0 * 0.37)).epsilon(1e-15));

    const auto ladder = make_probe(
        CoefficientSpec{"lacunary", {{"base", 2.0}, {"levels", 4.0}}, {}}, 1);
    const double fd = (ladder.value.evaluate((Vec(1) << 0.37 + 5e-7).finished()) -
                       ladder.value.evaluate((Vec(1) << 0.37 - 5e-7).finished())) /
                      1e-6;
    CHECK(ladder.derivative.evaluate(x) == doctest::Approx(fd).epsilon(1e-5));

    CHECK_THROWS_AS(make_probe(CoefficientSpec{"gauss", {}, {}}, 1),
                    std::invalid_argument);
}

TEST_CASE("config files load from disk") {
    const auto c = sample_config();
    const std::string path = "test_config_tmp.json";
    {
        std::ofstream out(path);
        out << serialize_config(c);
    }
    const auto loaded = load_config_file(path);
    CHECK(config_hash(loaded) == config_hash(c));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config_file("does_not_exist.json"), std::runtime_error);
}
