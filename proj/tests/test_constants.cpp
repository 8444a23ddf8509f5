#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"
#include "isoquad/linalg.hpp"

using namespace isoquad;

namespace {

SymMatrix m4_fixture() {
  std::vector<double> rows = {2.0, 0.4,  -0.3, 0.1, 0.4, 1.5,  0.2, -0.2,
                              -0.3, 0.2, 1.0,  0.3, 0.1, -0.2, 0.3, 2.5};
  return SymMatrix(4, rows);
}

SymMatrix rho_family(double rho) { return SymMatrix(2, {1.0, rho, rho, 1.0}); }

ConeSpec cone01(NormMode mode, double L = 1.0) {
  ConeSpec c;
  c.S = {0, 1};
  c.L = L;
  c.mode = mode;
  return c;
}

}  // namespace

TEST_CASE("norm mode names round-trip") {
  for (NormMode m : {NormMode::l1_on_S, NormMode::l2_on_uS, NormMode::l2_on_u,
                     NormMode::adaptive})
    CHECK(norm_mode_from_name(norm_mode_name(m)) == m);
  CHECK(norm_mode_from_name("compat") == NormMode::l1_on_S);
  CHECK(norm_mode_from_name("re") == NormMode::l2_on_uS);
  CHECK_THROWS(norm_mode_from_name("l3"));
}

TEST_CASE("cone validation") {
  ConeSpec c;
  c.L = 1.0;
  CHECK_THROWS(validate(c, 4));  // empty S
  c.S = {0, 0};
  CHECK_THROWS(validate(c, 4));  // duplicate
  c.S = {0, 4};
  CHECK_THROWS(validate(c, 4));  // out of range
  c.S = {0, 3};
  c.L = -0.5;
  CHECK_THROWS(validate(c, 4));
  c.L = 0.0;
  CHECK_NOTHROW(validate(c, 4));
}

TEST_CASE("identity returns exactly one for every mode") {
  SymMatrix id = SymMatrix::identity(4);
  for (NormMode m : {NormMode::l1_on_S, NormMode::l2_on_uS, NormMode::l2_on_u,
                     NormMode::adaptive}) {
    ConeSpec c1;
    c1.S = {0};
    c1.L = 1.0;
    c1.mode = m;
    CHECK(cone_constant(id, c1).value == 1.0);
    CHECK(cone_constant(id, cone01(m)).value == 1.0);
  }
}

TEST_CASE("2x2 correlation family hits 1 - rho^2") {
  for (double rho : {0.1, 0.5, 0.9}) {
    SymMatrix a = rho_family(rho);
    ConeSpec c;
    c.S = {0};
    c.L = 1.0;
    double want = 1.0 - rho * rho;
    c.mode = NormMode::l1_on_S;
    CHECK(compat_constant(a, c).value == doctest::Approx(want).epsilon(1e-9));
    c.mode = NormMode::l2_on_uS;
    CHECK(restricted_eigenvalue(a, c).value == doctest::Approx(want).epsilon(1e-9));
    c.mode = NormMode::adaptive;
    CHECK(adaptive_re(a, c).value == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("M4 fixture constants match the frozen grid oracle") {
  SymMatrix a = m4_fixture();
  ConstantResult phi = compat_constant(a, cone01(NormMode::l1_on_S));
  CHECK(phi.value == doctest::Approx(1.1579833559124975).epsilon(1e-7));
  CHECK(phi.certificate == "orthant_exact");
  CHECK(phi.orthant_count == 4);

  ConstantResult kap = restricted_eigenvalue(a, cone01(NormMode::l2_on_uS));
  CHECK(kap.value == doctest::Approx(1.1301124019788567).epsilon(1e-7));
  CHECK(kap.certificate == "iterative");

  ConstantResult ast = adaptive_re(a, cone01(NormMode::adaptive));
  CHECK(ast.value == doctest::Approx(1.1301124019788569).epsilon(1e-7));

  // minimizers are feasible witnesses of their own value
  CHECK(quadratic_form(a, phi.minimizer) * 2.0 ==
        doctest::Approx(phi.value).epsilon(1e-9));
  CHECK(quadratic_form(a, kap.minimizer) == doctest::Approx(kap.value).epsilon(1e-9));
}

TEST_CASE("constrained form infimum matches the frozen value") {
  ConstantResult r =
      constrained_form_infimum(m4_fixture(), SymMatrix::identity(4), 1.5);
  CHECK(r.value == doctest::Approx(0.7649338697505296).epsilon(1e-6));
  // witness feasibility: u'Sigma0 u = 1, ||u||_1 <= M
  double qf = quadratic_form(SymMatrix::identity(4), r.minimizer);
  CHECK(qf == doctest::Approx(1.0).epsilon(1e-6));
  double l1 = 0.0;
  for (double x : r.minimizer) l1 += std::fabs(x);
  CHECK(l1 <= 1.5 + 1e-8);
}

TEST_CASE("oracle agrees with the solvers on the M4 fixture") {
  SymMatrix a = m4_fixture();
  ConstantResult phi = compat_constant(a, cone01(NormMode::l1_on_S));
  ConstantResult o = oracle_minimum(a, cone01(NormMode::l1_on_S), 400, 42);
  CHECK(o.certificate == "oracle");
  CHECK(o.value == doctest::Approx(phi.value).epsilon(1e-4));

  ConstantResult ci =
      constrained_form_infimum(a, SymMatrix::identity(4), 1.5);
  ConstantResult oc = oracle_minimum(a, SymMatrix::identity(4), 1.5, 400, 42);
  CHECK(oc.value == doctest::Approx(ci.value).epsilon(1e-4));
}

TEST_CASE("solver vs oracle across seeded random instances") {
  for (int i = 0; i < 12; ++i) {
    int p = 2 + (i % 4);
    EnsembleSpec spec;
    spec.variant = Variant::gaussian;
    spec.p = p;
    DesignSample ds = sample(spec, 30 + p, 1000 + static_cast<uint64_t>(i));
    ConeSpec c;
    c.S = i % 2 == 0 ? std::vector<int>{i % p} : std::vector<int>{0, p - 1};
    c.L = (i % 3 == 0) ? 0.5 : (i % 3 == 1 ? 1.0 : 2.0);
    double vals[3];
    int k = 0;
    for (NormMode m : {NormMode::l1_on_S, NormMode::l2_on_uS, NormMode::adaptive}) {
      c.mode = m;
      double v = cone_constant(ds.gram, c).value;
      double o = oracle_minimum(ds.gram, c, 300, 9000 + static_cast<uint64_t>(i)).value;
      CHECK(std::fabs(v - o) <= 1e-4 * std::max(1.0, std::fabs(o)));
      vals[k++] = v;
    }
    // adaptive <= RE <= compat, allowing iterative slack at exact ties
    CHECK(vals[2] <= vals[1] * (1.0 + 1e-6) + 1e-9);
    CHECK(vals[1] <= vals[0] * (1.0 + 1e-6) + 1e-9);
  }
}

TEST_CASE("compat is positively homogeneous in the matrix") {
  SymMatrix a = m4_fixture();
  double c = 3.7;
  std::vector<double> scaled = a.values();
  for (double& x : scaled) x *= c;
  SymMatrix ca(4, scaled);
  ConeSpec cone = cone01(NormMode::l1_on_S);
  double v1 = compat_constant(a, cone).value;
  double v2 = compat_constant(ca, cone).value;
  CHECK(v2 == doctest::Approx(c * v1).epsilon(1e-9));

  cone.mode = NormMode::l2_on_uS;
  CHECK(restricted_eigenvalue(ca, cone).value ==
        doctest::Approx(c * restricted_eigenvalue(a, cone).value).epsilon(1e-9));
}

TEST_CASE("constants shrink as the cone widens") {
  SymMatrix a = m4_fixture();
  double prev = 1e300;
  for (double L : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    double v = compat_constant(a, cone01(NormMode::l1_on_S, L)).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("l2_on_u never exceeds l2_on_uS") {
  SymMatrix a = m4_fixture();
  double vs = restricted_eigenvalue(a, cone01(NormMode::l2_on_uS)).value;
  double vu = cone_constant(a, cone01(NormMode::l2_on_u)).value;
  CHECK(vu <= vs * (1.0 + 1e-6) + 1e-9);
}

TEST_CASE("null_space_check flags degenerate designs") {
  CHECK(null_space_check(SymMatrix::identity(3), {0}));
  SymMatrix dead(3, {0.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0});
  CHECK(!null_space_check(dead, {0}));
}

TEST_CASE("compat guards: support cap and PSD requirement") {
  SymMatrix id = SymMatrix::identity(22);
  ConeSpec c;
  for (int j = 0; j < 21; ++j) c.S.push_back(j);
  c.mode = NormMode::l1_on_S;
  CHECK_THROWS(compat_constant(id, c));

  SymMatrix indef(2, {1.0, 0.0, 0.0, -1.0});
  CHECK_THROWS(compat_constant(indef, cone01(NormMode::l1_on_S)));
  CHECK_THROWS(restricted_eigenvalue(indef, cone01(NormMode::l2_on_uS)));
}

TEST_CASE("oracle refuses large dimensions") {
  SymMatrix id = SymMatrix::identity(9);
  ConeSpec c;
  c.S = {0};
  CHECK_THROWS(oracle_minimum(id, c, 100, 1));
}

TEST_CASE("iterative solvers are bit-deterministic") {
  SymMatrix a = m4_fixture();
  ConstantResult r1 = restricted_eigenvalue(a, cone01(NormMode::l2_on_uS));
  ConstantResult r2 = restricted_eigenvalue(a, cone01(NormMode::l2_on_uS));
  CHECK(r1.value == r2.value);
  CHECK(r1.minimizer == r2.minimizer);
  ConstantResult o1 = oracle_minimum(a, cone01(NormMode::l1_on_S), 200, 5);
  ConstantResult o2 = oracle_minimum(a, cone01(NormMode::l1_on_S), 200, 5);
  CHECK(o1.value == o2.value);
}
