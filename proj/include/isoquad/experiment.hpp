#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isoquad/bounds.hpp"
#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"

namespace isoquad {

// Tuning knobs consumed by individual checks; defaults match the shipped
// suite. Anything not referenced by a requested check is ignored.
struct ExperimentOptions {
  std::vector<int> n_grid;          // per-n trend checks (sandwich, uniform dev)
  int transfer_d = 2;
  int transfer_directions = 100;
  double transfer_shrink = 0.5;     // A = gram - (1 - shrink) Sigma0
  int transfer_n = 6;               // rows per candidate matrix
  int oracle_budget = 400;
  int directions = 50;              // admissible u per moment-bound check
  int moment_draws = 4000;          // row draws per direction
  int w_draws = 500;                // draws for the E||W||_inf estimate
  int dev_directions = 1000;        // sampled u per uniform-deviation trial
  int lasso_noisy = 200;
  int lasso_noiseless = 50;
  double noise_sd = 1.0;
  double lambda_rule = 2.0;         // lambda = rule * lambda0 on noisy fits
  double noiseless_lambda = 0.05;
  double u0_magnitude = 1.0;
  int lasso_s = 2;
};

struct ExperimentConfig {
  std::string name;
  EnsembleSpec ensemble;
  int n = 100;
  int trials = 100;
  BoundParams bound_params;
  bool bound_params_from_ensemble = true;  // fill constants from the ensemble
  ConeSpec cone;
  uint64_t master_seed = 0;
  bool seed_set = false;  // mc configs must spell the seed out
  std::vector<std::string> checks;
  ExperimentOptions options;
};

// One row per trial per check; timing stays in memory and is never
// serialized, so reports are a pure function of the config.
struct TrialRow {
  long long trial = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct CheckResult {
  std::string experiment;
  std::string check;
  bool pass = true;
  std::vector<std::string> notes;
  std::vector<std::pair<std::string, double>> aggregates;
  std::vector<TrialRow> rows;
  double elapsed_seconds = 0.0;  // excluded from reports
};

struct ExperimentReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

std::vector<std::string> known_checks();

// Per-trial binomial acceptance rule shared by every probabilistic check:
// rate <= target + 3 sqrt(target (1-target) / trials).
double rate_gate(double target, long long trials);

CheckResult run_check(const std::string& name, const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);
ExperimentReport run_experiments(const std::vector<ExperimentConfig>& cfgs);

}  // namespace isoquad
