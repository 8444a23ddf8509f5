#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isoquad/ensembles.hpp"
#include "isoquad/linalg.hpp"

using namespace isoquad;

namespace {

// DAG fixture: x1 = e1, x2 = .5 x1 + e2, x3 = .25 x1 - .3 x2 + e3.
EnsembleSpec sem_fixture(double arch_gain = 0.0) {
  EnsembleSpec spec;
  spec.variant = arch_gain > 0.0 ? Variant::sem_arch : Variant::sem_dag;
  spec.p = 3;
  spec.beta = {0.0, 0.5, 0.25, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0};
  spec.omega = {1.0, 0.8, 1.2};
  spec.arch_gain = arch_gain;
  return spec;
}

double col_cov(const DesignSample& ds, int a, int b) {
  Accum acc;
  for (int i = 0; i < ds.n; ++i)
    acc.add(ds.X[static_cast<size_t>(i) * ds.p + a] * ds.X[static_cast<size_t>(i) * ds.p + b]);
  return acc.value() / ds.n;
}

}  // namespace

TEST_CASE("gaussian_abs_moment_root frozen values") {
  CHECK(gaussian_abs_moment_root(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gaussian_abs_moment_root(2.5) == doctest::Approx(1.0874844278957919).epsilon(1e-14));
  CHECK(gaussian_abs_moment_root(3.0) == doctest::Approx(1.1685752549624655).epsilon(1e-14));
  CHECK(gaussian_abs_moment_root(4.0) == doctest::Approx(1.3160740129524925).epsilon(1e-14));
  CHECK(gaussian_abs_moment_root(8.0) == doctest::Approx(1.7891578669708494).epsilon(1e-14));
}

TEST_CASE("variant names round-trip") {
  for (Variant v : {Variant::gaussian, Variant::rademacher, Variant::laplace,
                    Variant::student_t, Variant::sem_dag, Variant::sem_arch})
    CHECK(variant_from_name(variant_name(v)) == v);
  CHECK_THROWS(variant_from_name("cauchy"));
  CHECK(is_sem(Variant::sem_dag));
  CHECK(is_sem(Variant::sem_arch));
  CHECK(!is_sem(Variant::gaussian));
}

TEST_CASE("validate rejects inconsistent specs") {
  EnsembleSpec t;
  t.variant = Variant::student_t;
  t.p = 2;
  t.nu = 2.0;  // needs nu > 2 for a finite variance
  CHECK_THROWS(validate(t));
  t.nu = 5.0;
  CHECK_NOTHROW(validate(t));

  EnsembleSpec bad_beta = sem_fixture();
  bad_beta.beta[3] = 0.1;  // lower-triangular entry, not a DAG order
  CHECK_THROWS(validate(bad_beta));

  EnsembleSpec sem_with_sigma = sem_fixture();
  sem_with_sigma.sigma0 = SymMatrix::identity(3);
  CHECK_THROWS(validate(sem_with_sigma));

  EnsembleSpec notpd;
  notpd.variant = Variant::gaussian;
  notpd.p = 2;
  notpd.sigma0 = SymMatrix(2, {1.0, 2.0, 2.0, 1.0});
  CHECK_THROWS(validate(notpd));
}

TEST_CASE("population_covariance of the DAG fixture") {
  SymMatrix s0 = population_covariance(sem_fixture());
  CHECK(s0(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s0(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s0(0, 2) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(s0(1, 1) == doctest::Approx(0.8900000000000001).epsilon(1e-14));
  CHECK(s0(1, 2) == doctest::Approx(-0.14200000000000002).epsilon(1e-14));
  CHECK(s0(2, 2) == doctest::Approx(1.5076).epsilon(1e-14));
}

TEST_CASE("population_covariance passthrough for explicit sigma0") {
  EnsembleSpec spec;
  spec.variant = Variant::gaussian;
  spec.p = 2;
  spec.sigma0 = SymMatrix(2, {2.0, 0.3, 0.3, 1.0});
  SymMatrix s0 = population_covariance(spec);
  CHECK(s0(0, 0) == 2.0);
  CHECK(s0(0, 1) == 0.3);

  EnsembleSpec id;
  id.variant = Variant::laplace;
  id.p = 3;
  SymMatrix i3 = population_covariance(id);
  CHECK(i3(0, 0) == 1.0);
  CHECK(i3(0, 1) == 0.0);
}

TEST_CASE("ensemble_constants: gaussian") {
  EnsembleSpec spec;
  spec.variant = Variant::gaussian;
  spec.p = 2;
  spec.m = 4.0;
  EnsembleConstants c = ensemble_constants(spec);
  double g4 = 1.3160740129524925;
  CHECK(*c.C_m == doctest::Approx(g4).epsilon(1e-14));
  CHECK(*c.Ctilde_m == doctest::Approx(g4).epsilon(1e-14));
  CHECK(*c.sigma_X == 1.0);
  CHECK(*c.K_X == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(*c.sub_gaussian_C == 1.0);

  spec.sigma0 = SymMatrix(2, {4.0, 0.0, 0.0, 1.0});
  c = ensemble_constants(spec);
  CHECK(*c.sigma_X == 2.0);
  CHECK(*c.K_X == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(*c.sub_gaussian_C == 2.0);
}

TEST_CASE("ensemble_constants: rademacher") {
  EnsembleSpec spec;
  spec.variant = Variant::rademacher;
  spec.p = 4;
  spec.m = 4.0;
  EnsembleConstants c = ensemble_constants(spec);
  CHECK(*c.Ctilde_m == doctest::Approx(1.3160740129524925).epsilon(1e-14));
  CHECK(*c.sigma_X == 1.0);
  CHECK(*c.K_X == 1.0);
  CHECK(*c.sub_gaussian_C == 1.0);

  spec.m = 2.5;  // below the Khintchine comparison, Bernstein moment route
  c = ensemble_constants(spec);
  CHECK(*c.Ctilde_m == doctest::Approx(4.7360679774997897).epsilon(1e-14));
}

TEST_CASE("ensemble_constants: laplace") {
  EnsembleSpec spec;
  spec.variant = Variant::laplace;
  spec.p = 3;
  spec.m = 3.0;
  EnsembleConstants c = ensemble_constants(spec);
  CHECK(*c.Ctilde_m == doctest::Approx(4.5708100863428207).epsilon(1e-14));
  CHECK(*c.C_m == *c.Ctilde_m);
  CHECK(*c.sigma_X == 1.0);
  CHECK(*c.K_X == doctest::Approx(0.70710678118654752).epsilon(1e-15));
  CHECK(!c.sub_gaussian_C.has_value());

  spec.m = 4.0;
  CHECK(*ensemble_constants(spec).Ctilde_m ==
        doctest::Approx(5.6568542494923802).epsilon(1e-14));

  // Bernstein pair is only claimed for independent (diagonal) entries
  spec.sigma0 = SymMatrix(3, {1, 0.5, 0, 0.5, 1, 0, 0, 0, 1});
  c = ensemble_constants(spec);
  CHECK(!c.sigma_X.has_value());
  CHECK(!c.K_X.has_value());
}

TEST_CASE("ensemble_constants: student_t claims nothing") {
  EnsembleSpec spec;
  spec.variant = Variant::student_t;
  spec.p = 2;
  spec.nu = 5.0;
  EnsembleConstants c = ensemble_constants(spec);
  CHECK(!c.C_m.has_value());
  CHECK(!c.Ctilde_m.has_value());
  CHECK(!c.sigma_X.has_value());
  CHECK(!c.sub_gaussian_C.has_value());
  CHECK(!c.mu_m.has_value());
}

TEST_CASE("ensemble_constants: sem variants") {
  EnsembleConstants dag = ensemble_constants(sem_fixture());
  CHECK(*dag.sigma_X == doctest::Approx(std::sqrt(1.5076)).epsilon(1e-14));
  CHECK(*dag.C_m == doctest::Approx(1.3160740129524925).epsilon(1e-14));
  CHECK(*dag.mu_m == doctest::Approx(1.2).epsilon(1e-14));  // g = 0: max omega

  EnsembleConstants arch = ensemble_constants(sem_fixture(0.5));
  CHECK(!arch.C_m.has_value());
  CHECK(!arch.sigma_X.has_value());
  CHECK(*arch.mu_m == doctest::Approx(1.6338549963258902).epsilon(1e-13));
}

TEST_CASE("sem_mu_m matches the frozen recursion") {
  CHECK(sem_mu_m(sem_fixture(0.5), 4.0) ==
        doctest::Approx(1.6338549963258902).epsilon(1e-13));
  CHECK(sem_mu_m(sem_fixture(), 4.0) == doctest::Approx(1.2).epsilon(1e-14));
  EnsembleSpec g;
  g.variant = Variant::gaussian;
  g.p = 2;
  CHECK_THROWS(sem_mu_m(g, 4.0));
}

TEST_CASE("sample is bit-deterministic in (spec, n, seed)") {
  EnsembleSpec spec;
  spec.variant = Variant::gaussian;
  spec.p = 4;
  DesignSample a = sample(spec, 25, 7);
  DesignSample b = sample(spec, 25, 7);
  CHECK(a.X == b.X);
  CHECK(matrix_hash(a.gram) == matrix_hash(b.gram));
  DesignSample c = sample(spec, 25, 8);
  CHECK(a.X != c.X);
}

TEST_CASE("sample gram fields are consistent") {
  DesignSample ds = sample(sem_fixture(), 40, 3);
  SymMatrix g = gram_serial(ds.X, ds.n, ds.p);
  CHECK(matrix_hash(g) == matrix_hash(ds.gram));
  for (int j = 0; j < ds.p; ++j) {
    CHECK(ds.sigma_hat_sq[j] == ds.gram(j, j));
    CHECK(ds.gram_normalized(j, j) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("gaussian sample covariance converges to sigma0") {
  EnsembleSpec spec;
  spec.variant = Variant::gaussian;
  spec.p = 2;
  spec.sigma0 = SymMatrix(2, {1.0, 0.5, 0.5, 1.0});
  DesignSample ds = sample(spec, 20000, 11);
  CHECK(col_cov(ds, 0, 0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(col_cov(ds, 0, 1) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(col_cov(ds, 1, 1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rademacher identity sample is exactly +-1 with unit column norms") {
  EnsembleSpec spec;
  spec.variant = Variant::rademacher;
  spec.p = 3;
  DesignSample ds = sample(spec, 500, 5);
  for (double x : ds.X) CHECK(std::fabs(x) == 1.0);
  for (int j = 0; j < 3; ++j) CHECK(ds.sigma_hat_sq[j] == 1.0);
}

TEST_CASE("laplace and student_t are unit variance after scaling") {
  EnsembleSpec lap;
  lap.variant = Variant::laplace;
  lap.p = 2;
  DesignSample dl = sample(lap, 20000, 13);
  CHECK(col_cov(dl, 0, 0) == doctest::Approx(1.0).epsilon(0.08));

  EnsembleSpec st;
  st.variant = Variant::student_t;
  st.p = 2;
  st.nu = 5.0;  // scale sqrt((nu-2)/nu) = 0.77459666924148338
  DesignSample dt = sample(st, 20000, 17);
  CHECK(col_cov(dt, 0, 0) == doctest::Approx(1.0).epsilon(0.12));
  CHECK(col_cov(dt, 1, 1) == doctest::Approx(1.0).epsilon(0.12));
}

TEST_CASE("sem sample covariance converges to the derived sigma0") {
  DesignSample ds = sample(sem_fixture(), 20000, 19);
  SymMatrix s0 = population_covariance(sem_fixture());
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b)
      CHECK(std::fabs(col_cov(ds, a, b) - s0(a, b)) < 0.07);
}

TEST_CASE("sem_arch sample has the prescribed population covariance") {
  DesignSample ds = sample(sem_fixture(0.5), 20000, 23);
  SymMatrix s0 = population_covariance(sem_fixture(0.5));
  for (int a = 0; a < 3; ++a)
    CHECK(std::fabs(col_cov(ds, a, a) - s0(a, a)) < 0.1);
}

TEST_CASE("rademacher_average is deterministic and p-dimensional") {
  DesignSample ds = sample(sem_fixture(), 60, 29);
  Vector w1 = rademacher_average(ds, 101);
  Vector w2 = rademacher_average(ds, 101);
  Vector w3 = rademacher_average(ds, 102);
  REQUIRE(w1.size() == 3);
  CHECK(w1 == w2);
  CHECK(w1 != w3);
  // scale sanity: entries concentrate at O(1/sqrt(n))
  for (double w : w1) CHECK(std::fabs(w) < 1.0);
}
