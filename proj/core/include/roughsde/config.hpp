#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/sde.hpp"

namespace roughsde {

// Coefficient family by name plus a flat parameter map; the factory
// functions below translate specs into fields. Parameters that are
// conceptually integers (levels, base) are stored as doubles and validated
// on construction.
struct CoefficientSpec {
    std::string family;
    std::map<std::string, double> params;
    std::vector<double> phases;  // weierstrass ladders only
};

struct ExperimentConfig {
    std::string name;
    int dimension = 1;
    CoefficientSpec drift;
    CoefficientSpec diffusion;
    std::string terminal;  // "coordinate" | "cos" | "sin" | "sqrt_abs_sin"
    double x0 = 0.0;

    std::vector<int> scheme_ns;     // strictly increasing powers of two
    int coupling_multiplier = 16;   // fine_n = multiplier * max n
    std::int64_t paths = 0;
    std::uint64_t master_seed = 0;
    std::string reference = "pde";  // "pde" | "fine-em"
    std::string estimator = "coupled";

    // Study-specific knobs, serialized with defaults.
    int sub_steps = 16;
    int moment_p = 2;
    int schauder_gamma = 1;
    double terminal_beta = 1.0;
    CoefficientSpec probe{"sin", {{"frequency", 4.0}}, {}};  // smoothing-study G
    double probe_t_lo = 0.0;            // probe window; 0 means full grid
    double probe_t_hi = 0.0;
    double reference_accuracy = 1e-6;

    std::string output_dir = ".";

    int fine_n() const;
    void validate() const;
};

std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// FNV-1a over the canonical serialization; reports embed it so runs are
// attributable to an exact configuration.
std::uint64_t config_hash(const ExperimentConfig& config);

VectorField make_drift(const CoefficientSpec& spec, int dimension);
MatrixField make_diffusion(const CoefficientSpec& spec, int dimension);
ScalarField make_terminal(const std::string& name, int dimension);
C1TestFunction make_probe(const CoefficientSpec& spec, int dimension);

SdeProblem make_problem(const ExperimentConfig& config);

}  // namespace roughsde
