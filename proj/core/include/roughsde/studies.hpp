#pragma once

#include <map>
#include <string>

#include "roughsde/config.hpp"

namespace roughsde {

// A finished study: deterministic artifact bytes keyed by filename, plus the
// summary text (duplicated from files for convenience) and the process exit
// code the CLI should return. Timestamps never enter `files`; they live in
// meta.json, which write_study_outputs composes at write time.
struct StudyOutput {
    int exit_code = 0;  // 0 pass, 2 numerical failure, 3 acceptance failure
    std::map<std::string, std::string> files;
    std::string summary;
};

StudyOutput run_rate_study(const ExperimentConfig& config, int threads = 1);
StudyOutput run_wasserstein_study(const ExperimentConfig& config, int threads = 1);
StudyOutput run_quadrature_study(const ExperimentConfig& config, int threads = 1);
StudyOutput run_smoothing_study(const ExperimentConfig& config, int threads = 1);
StudyOutput run_pde_check(const ExperimentConfig& config, int threads = 1);

void write_study_outputs(const StudyOutput& output, const std::string& out_dir,
                         double elapsed_seconds, int threads);

}  // namespace roughsde
