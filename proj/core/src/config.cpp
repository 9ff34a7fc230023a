#include "roughsde/config.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace roughsde {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
}

double get_param(const CoefficientSpec& spec, const std::string& key) {
    const auto it = spec.params.find(key);
    require(it != spec.params.end(),
            spec.family + " needs parameter '" + key + "'");
    return it->second;
}

double get_param_or(const CoefficientSpec& spec, const std::string& key,
                    double fallback) {
    const auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

int get_int_param(const CoefficientSpec& spec, const std::string& key) {
    const double v = get_param(spec, key);
    const int i = static_cast<int>(std::llround(v));
    require(std::abs(v - i) < 1e-9, "parameter '" + key + "' must be an integer");
    return i;
}

json spec_to_json(const CoefficientSpec& spec) {
    json j;
    j["family"] = spec.family;
    j["params"] = spec.params;
    if (!spec.phases.empty()) j["phases"] = spec.phases;
    return j;
}

CoefficientSpec spec_from_json(const json& j) {
    CoefficientSpec spec;
    spec.family = j.at("family").get<std::string>();
    if (j.contains("params"))
        spec.params = j.at("params").get<std::map<std::string, double>>();
    if (j.contains("phases")) spec.phases = j.at("phases").get<std::vector<double>>();
    return spec;
}

}  // namespace

int ExperimentConfig::fine_n() const {
    require(!scheme_ns.empty(), "no scheme resolutions");
    return coupling_multiplier * scheme_ns.back();
}

void ExperimentConfig::validate() const {
    require(dimension >= 1 && dimension <= kMaxDim, "dimension out of range");
    require(!scheme_ns.empty(), "no scheme resolutions");
    int prev = 0;
    for (int n : scheme_ns) {
        require(n > prev, "scheme resolutions must be strictly increasing");
        require(std::has_single_bit(static_cast<unsigned>(n)),
                "scheme resolutions must be powers of two");
        prev = n;
    }
    require(coupling_multiplier >= 1 &&
                std::has_single_bit(static_cast<unsigned>(coupling_multiplier)),
            "coupling multiplier must be a power of two");
    for (int n : scheme_ns)
        require(fine_n() % n == 0, "fine resolution must divide by every n");
    require(paths > 0, "paths must be positive");
    require(reference == "pde" || reference == "fine-em",
            "reference policy must be 'pde' or 'fine-em'");
    require(estimator == "coupled" || estimator == "uncoupled",
            "estimator must be 'coupled' or 'uncoupled'");
    require(sub_steps >= 8, "sub_steps must be at least 8");
    require(moment_p >= 1, "moment_p must be at least 1");
    require(schauder_gamma == 1 || schauder_gamma == 2, "schauder_gamma must be 1 or 2");
    require(terminal_beta > 0.0 && terminal_beta <= 2.0, "terminal_beta out of range");
    require(reference_accuracy > 0.0, "reference_accuracy must be positive");
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["dimension"] = c.dimension;
    j["drift"] = spec_to_json(c.drift);
    j["diffusion"] = spec_to_json(c.diffusion);
    j["terminal"] = c.terminal;
    j["x0"] = c.x0;
    j["scheme_ns"] = c.scheme_ns;
    j["coupling_multiplier"] = c.coupling_multiplier;
    j["paths"] = c.paths;
    j["master_seed"] = c.master_seed;
    j["reference"] = c.reference;
    j["estimator"] = c.estimator;
    j["sub_steps"] = c.sub_steps;
    j["moment_p"] = c.moment_p;
    j["schauder_gamma"] = c.schauder_gamma;
    j["terminal_beta"] = c.terminal_beta;
    j["probe"] = spec_to_json(c.probe);
    j["probe_t_lo"] = c.probe_t_lo;
    j["probe_t_hi"] = c.probe_t_hi;
    j["reference_accuracy"] = c.reference_accuracy;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    c.name = j.value("name", std::string{});
    c.dimension = j.value("dimension", 1);
    c.drift = spec_from_json(j.at("drift"));
    c.diffusion = spec_from_json(j.at("diffusion"));
    c.terminal = j.at("terminal").get<std::string>();
    c.x0 = j.at("x0").get<double>();
    c.scheme_ns = j.at("scheme_ns").get<std::vector<int>>();
    c.coupling_multiplier = j.value("coupling_multiplier", 16);
    c.paths = j.at("paths").get<std::int64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.reference = j.value("reference", std::string("pde"));
    c.estimator = j.value("estimator", std::string("coupled"));
    c.sub_steps = j.value("sub_steps", 16);
    c.moment_p = j.value("moment_p", 2);
    c.schauder_gamma = j.value("schauder_gamma", 1);
    c.terminal_beta = j.value("terminal_beta", 1.0);
    if (j.contains("probe")) c.probe = spec_from_json(j.at("probe"));
    c.probe_t_lo = j.value("probe_t_lo", 0.0);
    c.probe_t_hi = j.value("probe_t_hi", 0.0);
    c.reference_accuracy = j.value("reference_accuracy", 1e-6);
    c.output_dir = j.value("output_dir", std::string("."));
    c.validate();
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    const std::string canonical = serialize_config(config);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : canonical) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

VectorField make_drift(const CoefficientSpec& spec, int dimension) {
    if (spec.family == "weierstrass")
        return make_weierstrass_drift(get_param(spec, "alpha"),
                                      get_param(spec, "amplitude"),
                                      get_int_param(spec, "base"),
                                      get_int_param(spec, "levels"), spec.phases,
                                      dimension);
    if (spec.family == "sin")
        return make_sin_drift(get_param_or(spec, "amplitude", 1.0), dimension);
    if (spec.family == "zero") return make_zero_drift(dimension);
    if (spec.family == "constant") {
        Vec v(dimension);
        v.setConstant(get_param(spec, "value"));
        return make_constant_drift(v);
    }
    if (spec.family == "linear")
        return make_linear_drift(get_param(spec, "rate"), dimension);
    throw std::invalid_argument("config: unknown drift family '" + spec.family + "'");
}

MatrixField make_diffusion(const CoefficientSpec& spec, int dimension) {
    if (spec.family == "constant") {
        Mat m(dimension, dimension);
        m.setZero();
        m.diagonal().setConstant(get_param(spec, "mu"));
        return make_constant_matrix(m);
    }
    if (spec.family == "sin_modulated")
        return make_elliptic_diffusion(get_param(spec, "mu"), get_param(spec, "eps"),
                                       make_sin_modulation(dimension), 1.0);
    throw std::invalid_argument("config: unknown diffusion family '" + spec.family +
                                "'");
}

ScalarField make_terminal(const std::string& name, int dimension) {
    if (name == "coordinate") return make_coordinate_terminal(dimension);
    if (name == "cos") return make_cos_terminal(dimension);
    if (name == "sin") return make_sin_terminal(dimension);
    if (name == "sqrt_abs_sin") return make_sqrt_abs_sin_terminal(dimension);
    throw std::invalid_argument("config: unknown terminal '" + name + "'");
}

C1TestFunction make_probe(const CoefficientSpec& spec, int dimension) {
    if (spec.family == "sin") {
        const double f = get_param_or(spec, "frequency", 4.0);
        require(f > 0.0, "probe frequency must be positive");
        C1TestFunction fn;
        fn.value.dimension = dimension;
        fn.value.regularity = {1.0, 1.0, f};
        fn.value.evaluate = [f](const Vec& x) { return std::sin(f * x[0]); };
        fn.derivative.dimension = dimension;
        fn.derivative.regularity = {1.0, f, f * f};
        fn.derivative.evaluate = [f](const Vec& x) { return f * std::cos(f * x[0]); };
        return fn;
    }
    if (spec.family == "lacunary")
        return make_lacunary_c1(get_int_param(spec, "base"),
                                get_int_param(spec, "levels"), spec.phases, dimension);
    throw std::invalid_argument("config: unknown probe family '" + spec.family + "'");
}

SdeProblem make_problem(const ExperimentConfig& config) {
    Vec start(config.dimension);
    start.setConstant(config.x0);
    return SdeProblem{make_drift(config.drift, config.dimension),
                      make_diffusion(config.diffusion, config.dimension), start};
}

}  // namespace roughsde
