#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isoquad/bounds.hpp"
#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"
#include "isoquad/experiment.hpp"
#include "isoquad/lasso.hpp"
#include "isoquad/serialize.hpp"

using namespace isoquad;

namespace {

struct GenArgs {
  std::string ensemble, out;
  int n = 0;
  uint64_t seed = 0;
};

struct ConstantsArgs {
  std::string matrix;
  std::vector<int> S;  // 1-based on the command line
  double L = 1.0;
  std::string mode = "compat";
};

struct BoundsArgs {
  std::string name;
  BoundParams q;
  double delta_n = 0.0;
  bool has_delta_n = false;
  double c1 = 1.0;
};

struct McArgs {
  std::string config, out;
  std::string format = "json";
};

struct LassoArgs {
  std::string ensemble;
  int n = 100, s = 1;
  double magnitude = 1.0, noise_sd = 1.0, lambda = 0.0, lambda_rule = 2.0;
  uint64_t seed = 0;
};

int run_gen(const GenArgs& a) {
  EnsembleSpec spec = ensemble_spec_from_file(a.ensemble);
  DesignSample ds = sample(spec, a.n, a.seed);
  write_design_with_sidecar(a.out, spec, a.n, a.seed, ds);
  std::cout << "wrote " << a.out << ".csv and " << a.out << ".json\n";
  return 0;
}

int run_constants(const ConstantsArgs& a) {
  SymMatrix mat = read_matrix_csv(a.matrix);
  ConeSpec cone;
  for (int j : a.S) cone.S.push_back(j - 1);
  cone.L = a.L;
  cone.mode = norm_mode_from_name(a.mode);
  validate(cone, mat.dim());
  ConstantResult r = cone_constant(mat, cone);
  std::cout << constant_result_json(r, cone, matrix_hash(mat));
  return 0;
}

int run_bounds(const BoundsArgs& a) {
  BoundParams q = a.q;
  if (a.has_delta_n) q.delta_n = a.delta_n;
  BoundReport rep = eval_bound_by_name(a.name, q, a.c1);
  std::cout << bound_report_json(rep, q);
  return 0;
}

int run_mc(const McArgs& a) {
  std::vector<ExperimentConfig> cfgs = experiment_configs_from_file(a.config);
  ExperimentReport rep = run_experiments(cfgs);
  std::string js = report_json(rep);
  std::string cs = report_csv(rep);
  if (!a.out.empty()) {
    write_text_file(a.out + ".json", js);
    write_text_file(a.out + ".csv", cs);
  }
  std::cout << (a.format == "csv" ? cs : js);
  return rep.all_pass ? 0 : 1;
}

int run_lasso_check(const LassoArgs& a) {
  EnsembleSpec spec = ensemble_spec_from_file(a.ensemble);
  LassoProblem prob = make_lasso_problem(spec, a.n, a.s, a.magnitude, a.noise_sd,
                                         a.lambda, a.lambda_rule, a.seed);
  LassoFit fit = lasso_fit(prob);
  OracleInequalityRecord rec;
  if (prob.lambda > prob.lambda0) {
    double l = (prob.lambda + prob.lambda0) / (prob.lambda - prob.lambda0);
    ConstantResult compat =
        compat_constant(prob.design.gram, ConeSpec{prob.S, l, NormMode::l1_on_S});
    rec = oracle_inequality_check(prob, fit, compat);
  } else {
    ConstantResult empty;
    rec = oracle_inequality_check(prob, fit, empty);
  }
  std::cout << oracle_record_json(rec);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sparse quadratic-form constants, probabilistic bounds, and Monte Carlo "
      "validation. ISOQUAD_THREADS caps worker parallelism."};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "sample a design matrix and write csv + sidecar");
  cgen->add_option("--ensemble", gen.ensemble, "ensemble spec json")->required();
  cgen->add_option("--n", gen.n, "rows")->required()->check(CLI::PositiveNumber);
  cgen->add_option("--seed", gen.seed, "master seed")->required();
  cgen->add_option("--out", gen.out, "output prefix")->required();

  ConstantsArgs con;
  CLI::App* ccon = app.add_subcommand("constants", "compute a cone constant of a matrix");
  ccon->add_option("--matrix", con.matrix, "square csv")->required();
  ccon->add_option("--S", con.S, "support indices, 1-based")->required();
  ccon->add_option("--L", con.L, "cone slack");
  ccon->add_option("--mode", con.mode, "compat | re | l2_on_u | adaptive");

  BoundsArgs bnd;
  CLI::App* cbnd = app.add_subcommand("bounds", "evaluate a named closed-form bound");
  std::string names;
  for (const auto& n : bound_names()) names += (names.empty() ? "" : ", ") + n;
  cbnd->add_option("name", bnd.name, "one of: " + names)->required();
  cbnd->add_option("--m", bnd.q.m);
  cbnd->add_option("--m0", bnd.q.m0);
  cbnd->add_option("--Cm", bnd.q.C_m);
  cbnd->add_option("--Ctilde_m", bnd.q.Ctilde_m);
  cbnd->add_option("--C", bnd.q.C);
  cbnd->add_option("--sigma_X", bnd.q.sigma_X);
  cbnd->add_option("--K_X", bnd.q.K_X);
  cbnd->add_option("--kappa1", bnd.q.kappa1);
  cbnd->add_option("--alpha", bnd.q.alpha);
  cbnd->add_option("--eta", bnd.q.eta);
  cbnd->add_option("--c0_universal", bnd.q.c0_universal);
  cbnd->add_option("--c0_poly", bnd.q.c0_poly);
  cbnd->add_option("--M", bnd.q.M);
  cbnd->add_option("--t", bnd.q.t);
  cbnd->add_option("--n", bnd.q.n);
  cbnd->add_option("--p", bnd.q.p);
  cbnd->add_option("--L", bnd.q.L);
  cbnd->add_option("--s", bnd.q.s);
  cbnd->add_option("--eps", bnd.q.eps);
  cbnd->add_option("--Delta", bnd.q.Delta);
  cbnd->add_option("--mu_m", bnd.q.mu_m);
  cbnd->add_option("--K", bnd.q.K);
  CLI::Option* odn = cbnd->add_option("--delta_n", bnd.delta_n, "override the computed delta_n");
  cbnd->add_option("--c1", bnd.c1, "universal constant for uniform_deviation_bound");

  McArgs mc;
  CLI::App* cmc = app.add_subcommand("mc", "run an experiment config and print the report");
  cmc->add_option("config", mc.config, "experiment json")->required();
  cmc->add_option("--out", mc.out, "also write <out>.json and <out>.csv");
  cmc->add_option("--format", mc.format, "stdout format: json | csv")
      ->check(CLI::IsMember({"json", "csv"}));

  LassoArgs las;
  CLI::App* clas = app.add_subcommand("lasso-check", "fit one lasso problem and print the oracle-inequality record");
  clas->add_option("--ensemble", las.ensemble, "ensemble spec json")->required();
  clas->add_option("--n", las.n, "rows")->check(CLI::PositiveNumber);
  clas->add_option("--s", las.s, "support size")->check(CLI::PositiveNumber);
  clas->add_option("--magnitude", las.magnitude, "signal magnitude");
  clas->add_option("--noise-sd", las.noise_sd, "noise standard deviation");
  clas->add_option("--lambda", las.lambda, "penalty; <= 0 means lambda_rule * lambda0");
  clas->add_option("--lambda-rule", las.lambda_rule);
  clas->add_option("--seed", las.seed, "master seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  bnd.has_delta_n = odn->count() > 0;

  try {
    if (app.got_subcommand(cgen)) return run_gen(gen);
    if (app.got_subcommand(ccon)) return run_constants(con);
    if (app.got_subcommand(cbnd)) return run_bounds(bnd);
    if (app.got_subcommand(cmc)) return run_mc(mc);
    if (app.got_subcommand(clas)) return run_lasso_check(las);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
