#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoquad/experiment.hpp"
#include "isoquad/lasso.hpp"

namespace isoquad {

// Raised on malformed config/input files; the message names the offending
// field or line so the CLI can print it and exit with the usage code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All JSON emitted here has sorted keys and shortest round-trip floats, so
// identical inputs produce byte-identical files.
std::string constant_result_json(const ConstantResult& r, const ConeSpec& cone,
                                 uint64_t matrix_fingerprint);
std::string bound_report_json(const BoundReport& rep, const BoundParams& q);
std::string oracle_record_json(const OracleInequalityRecord& rec);
std::string report_json(const ExperimentReport& rep);
std::string report_csv(const ExperimentReport& rep);

// Writes <prefix>.csv (the design) plus <prefix>.json describing how it was
// produced. read_design_sidecar regenerates the sample from the sidecar.
void write_design_with_sidecar(const std::string& prefix,
                               const EnsembleSpec& spec, int n, uint64_t seed,
                               const DesignSample& sample);
DesignSample regenerate_from_sidecar(const std::string& sidecar_path);

EnsembleSpec ensemble_spec_from_json(const std::string& text,
                                     const std::string& origin);
EnsembleSpec ensemble_spec_from_file(const std::string& path);

// Accepts either a single experiment object or {"experiments": [...]}.
std::vector<ExperimentConfig> experiment_configs_from_file(
    const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace isoquad
