#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "isoquad/bounds.hpp"
#include "isoquad/matrix.hpp"

using namespace isoquad;

namespace {

const double kG4 = 1.3160740129524925;  // (E|Z|^4)^{1/4}

double part(const BoundReport& r, const std::string& key) {
  for (const auto& kv : r.parts)
    if (kv.first == key) return kv.second;
  FAIL("missing part '" << key << "' in " << r.name);
  return 0.0;
}

bool has_flag(const BoundReport& r, const std::string& needle) {
  for (const auto& f : r.flags)
    if (f.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("eval_Dm frozen values and domain") {
  CHECK(eval_Dm(3.0, 0.5) == 2.0);
  CHECK(eval_Dm(3.0, 1.0) == doctest::Approx(5.6568542494923802).epsilon(1e-14));
  CHECK(eval_Dm(10.0, 1.0) == doctest::Approx(2.4301344125076889).epsilon(1e-14));
  CHECK(eval_Dm(4.0, kG4) == doctest::Approx(5.451361778496419).epsilon(1e-13));
  CHECK_THROWS(eval_Dm(2.0, 1.0));
  CHECK_THROWS(eval_Dm(1.5, 1.0));
  CHECK_THROWS(eval_Dm(3.0, 0.0));
}

TEST_CASE("eval_delta_n frozen values") {
  CHECK(eval_delta_n(1.0, 1.0, 8, 100) ==
        doctest::Approx(0.26320789172549275).epsilon(1e-14));
  CHECK(eval_delta_n(1.0, std::sqrt(2.0), 5, 400) ==
        doctest::Approx(0.1154391689820431).epsilon(1e-14));
  CHECK(eval_delta_n(1.0, std::sqrt(2.0), 8, 100) ==
        doctest::Approx(0.27469233024183683).epsilon(1e-14));
  CHECK_THROWS(eval_delta_n(1.0, 1.0, 0, 100));
  // shrinks with n
  CHECK(eval_delta_n(1, 1, 8, 400) < eval_delta_n(1, 1, 8, 100));
}

TEST_CASE("lower margin with a pinned delta_n") {
  BoundParams q;
  q.m = 3.0;
  q.C_m = 1.0;
  q.M = 1.0;
  q.t = 1.0;
  q.n = 10000;
  q.delta_n = 0.01;
  BoundReport r = eval_lower_margin(q);
  CHECK(r.value == doctest::Approx(3.2139578989852691).epsilon(1e-13));
  CHECK(r.void_flag);  // margin >= 1 is reported, never hidden
  CHECK(has_flag(r, "void"));
  CHECK(part(r, "delta_n") == 0.01);
}

TEST_CASE("lower margin at the Monte Carlo operating point") {
  BoundParams q;
  q.m = 4.0;
  q.C_m = kG4;
  q.M = 2.0;
  q.t = 2.0;
  q.n = 400;
  q.p = 5;
  q.sigma_X = 1.0;
  q.K_X = std::sqrt(2.0);
  BoundReport r = eval_lower_margin(q);
  CHECK(r.value == doctest::Approx(15.578103981784081).epsilon(1e-13));
  CHECK(r.void_flag);
  CHECK(part(r, "delta_n") == doctest::Approx(0.1154391689820431).epsilon(1e-14));
  CHECK(part(r, "D_m") == doctest::Approx(5.451361778496419).epsilon(1e-13));
  // grows with t
  BoundParams q2 = q;
  q2.t = 4.0;
  CHECK(eval_lower_margin(q2).value > r.value);
}

TEST_CASE("dimension-proportional lower margin") {
  BoundParams q;
  q.m = 3.0;
  q.C_m = 1.0;
  q.t = 0.0;
  q.p = 100;
  q.n = 100;
  CHECK(eval_lower_margin_p(q).value ==
        doctest::Approx(22.627416997969521).epsilon(1e-13));
  q.p = 8;
  q.n = 200;
  q.t = 1.0;
  CHECK(eval_lower_margin_p(q).value ==
        doctest::Approx(16.310163929057309).epsilon(1e-13));
}

TEST_CASE("sub-Gaussian lower margin") {
  BoundParams q;
  q.C = 1.0;
  q.M = 1.0;
  q.p = 8;
  q.n = 10000;
  q.t = 1.0;
  BoundReport r = eval_subgaussian_lower(q);
  CHECK(part(r, "b") == doctest::Approx(0.39091334282868285).epsilon(1e-14));
  CHECK(r.value == doctest::Approx(2.068764798575986).epsilon(1e-13));

  BoundParams vac = q;
  vac.p = 4;
  vac.n = 4;  // b > C: the log argument would flip sign
  CHECK_THROWS(eval_subgaussian_lower(vac));
}

TEST_CASE("entrywise moment bound on E||W||_inf") {
  BoundParams q;
  q.kappa1 = 1.0;
  q.alpha = 1.0;
  q.eta = 2.0;
  q.c0_universal = 1.0;
  q.p = 22026;
  q.n = 1000000;
  BoundReport r = eval_EW_moment_bound(q);
  CHECK(part(r, "c1") == doctest::Approx(6.3380654656113592).epsilon(1e-14));
  double logp = std::log(22026.0);
  CHECK(r.value == doctest::Approx(part(r, "c1") * std::sqrt(logp / 1e6)).epsilon(1e-15));
  CHECK(r.flags.empty());

  BoundParams small = q;
  small.p = 2;  // eta < 2 / log p
  CHECK(has_flag(eval_EW_moment_bound(small), "eta"));
  BoundParams tiny = q;
  tiny.p = 100;
  tiny.n = 5;  // n below k0^max(2a-1,1)
  CHECK(has_flag(eval_EW_moment_bound(tiny), "n >="));
}

TEST_CASE("fourth-moment bound and its admissibility precondition") {
  BoundParams gauss;
  gauss.sigma_X = 1.0;
  gauss.K_X = std::sqrt(2.0);
  gauss.c0_poly = 1.0;
  CHECK(part(eval_fourth_moment_bound(gauss), "c1") ==
        doctest::Approx(9.6568542494923802).epsilon(1e-14));

  BoundParams q;
  q.sigma_X = 1.0;
  q.K_X = 1.0;
  q.c0_poly = 1.0;  // c1 = 8
  q.M = 1.0;
  q.p = 16384;
  BoundReport r = eval_fourth_moment_bound(q);
  CHECK(part(r, "c1") == 8.0);
  CHECK(r.value == doctest::Approx(117.63097721622566).epsilon(1e-13));
  CHECK(part(r, "precondition_lhs") ==
        doctest::Approx(83.177661667193437).epsilon(1e-13));
  CHECK(part(r, "precondition_rhs") == 128.0);
  CHECK(r.flags.empty());

  q.p = 4096;  // lhs 72.09 > rhs 64: flagged, not silently accepted
  CHECK(has_flag(eval_fourth_moment_bound(q), "precondition"));
}

TEST_CASE("upper margin branches") {
  BoundParams q;
  q.m = 6.0;
  q.C_m = 1.0;
  q.sigma_X = 1.0;
  q.K_X = 1.0;
  q.c0_poly = 1.0;
  q.L = 1.0;
  q.s = 4;
  q.p = 8;
  q.t = 2.0;
  q.n = 200;
  BoundReport r = eval_upper_margin(q);
  CHECK(r.value == doctest::Approx(0.17320508075688773).epsilon(1e-14));
  CHECK(part(r, "branch_m_gt_4") == doctest::Approx(r.value).epsilon(1e-15));
  CHECK(part(r, "branch_m_le_4") ==
        doctest::Approx(12.547304236397404).epsilon(1e-13));
  CHECK(has_flag(r, "isotropy alternative"));

  q.m = 3.0;  // no alternative branch below m = 4
  BoundReport r3 = eval_upper_margin(q);
  CHECK(r3.value == doctest::Approx(12.547304236397404).epsilon(1e-13));
  CHECK(has_flag(r3, "m <= 4"));
}

TEST_CASE("upper margin at the sandwich operating point") {
  BoundParams q;
  q.m = 4.0;
  q.sigma_X = 1.0;
  q.K_X = std::sqrt(2.0);
  q.c0_poly = 1.0;
  q.L = 1.0;
  q.s = 2;
  q.p = 5;
  q.t = 2.0;
  q.n = 400;
  CHECK(eval_upper_margin(q).value ==
        doctest::Approx(6.289213802414708).epsilon(1e-13));
}

TEST_CASE("transfer lower margin") {
  BoundParams q;
  q.m = 3.0;
  q.C_m = 1.0;
  q.M = 2.0;
  q.p = 100;
  q.n = 10000;
  q.t = 1.0;
  BoundReport r = eval_transfer_lower_margin(q);
  CHECK(r.value == doctest::Approx(10.2234756193664).epsilon(1e-13));
  CHECK(r.void_flag);

  BoundParams g;
  g.m = 4.0;
  g.C_m = kG4;
  g.M = std::sqrt(2.0);
  g.p = 40;
  g.n = 400;
  g.t = 2.0;
  CHECK(eval_transfer_lower_margin(g).value ==
        doctest::Approx(20.91632496856183).epsilon(1e-13));
  g.C_m = 5.6568542494923802;  // laplace strong-isotropy constant at m = 4
  CHECK(eval_transfer_lower_margin(g).value ==
        doctest::Approx(417.85788898303139).epsilon(1e-12));
}

TEST_CASE("transfer margin collapses to the plain kernel at p = 1") {
  BoundParams q;
  q.m = 3.0;
  q.C_m = 1.0;
  q.M = 2.0;
  q.p = 1;
  q.n = 400;
  q.t = 1.5;
  double e = 0.5;
  double d = eval_Dm(3.0, 1.0);
  double expect = d * std::pow(16.0 * q.M / std::sqrt(400.0) + std::sqrt(3.0 / 400.0), e) +
                  (8.0 * d * d / 3.0) * std::pow(1.5 / 400.0, e);
  CHECK(eval_transfer_lower_margin(q).value == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("sigma tail thresholds") {
  BoundParams q;
  q.C = 1.0;
  q.p = 8;
  q.n = 100;
  q.t = 1.0;
  CHECK(eval_sigma_tail_gauss(q).value ==
        doctest::Approx(3.317033983702418).epsilon(1e-13));
  q.t = 2.0;
  CHECK(eval_sigma_tail_gauss(q).value ==
        doctest::Approx(3.865663133803942).epsilon(1e-13));

  BoundParams mom;  // kappa1 = 1, alpha = 1/2, eta = 2, c0 = 1
  mom.p = 8;
  mom.n = 100;
  mom.t = 1.0;
  BoundReport r = eval_sigma_tail_moments(mom);
  CHECK(part(r, "c1") == doctest::Approx(29.556224395722601).epsilon(1e-13));
  double k0 = part(r, "k0");
  CHECK(r.value == doctest::Approx(1.0 + part(r, "c1") * std::pow(1.0, 2.0 / k0) *
                                             std::sqrt(std::log(8.0) / 100.0))
                       .epsilon(1e-14));

  BoundParams shallow = mom;
  shallow.alpha = 0.2;
  CHECK(has_flag(eval_sigma_tail_moments(shallow), "alpha"));
}

TEST_CASE("truncation level and residual") {
  BoundParams q;
  q.C = 1.0;
  q.p = 8;
  q.n = 100;
  q.m = 4.0;
  q.t = 1.0;
  q.Ctilde_m = kG4;
  BoundReport r = eval_truncation_residual(q);
  CHECK(r.value == doctest::Approx(5.0956705337405722).epsilon(1e-13));
  CHECK(part(r, "level") == r.value);
  CHECK(part(r, "residual") == doctest::Approx(0.010505419189705506).epsilon(1e-13));

  BoundParams q2 = q;
  q2.t = 2.0;
  BoundReport r2 = eval_truncation_residual(q2);
  CHECK(r2.value > r.value);                             // level rises with t
  CHECK(part(r2, "residual") < part(r, "residual"));     // residual decays with t
}

TEST_CASE("uniform deviation bound decomposes as c1 (t1 + t2) + residual") {
  BoundParams q;
  q.M = 1.0;
  q.C = 1.0;
  q.p = 8;
  q.n = 100;
  q.m = 4.0;
  q.t = 1.0;
  q.Ctilde_m = kG4;
  BoundReport r = eval_uniform_deviation_bound(q, 1.0);
  CHECK(r.value == doctest::Approx(60.283284888636555).epsilon(1e-13));
  CHECK(part(r, "term1") == doctest::Approx(7.2796387749976444).epsilon(1e-13));
  CHECK(part(r, "term2") == doctest::Approx(52.993140694449205).epsilon(1e-13));
  CHECK(part(r, "residual") == doctest::Approx(0.010505419189705506).epsilon(1e-13));

  BoundReport r2 = eval_uniform_deviation_bound(q, 2.0);
  CHECK(r2.value ==
        doctest::Approx(2.0 * (part(r, "term1") + part(r, "term2")) +
                        part(r, "residual"))
            .epsilon(1e-14));

  q.M = 0.0;  // both main terms vanish, only the truncation residual is left
  BoundReport r0 = eval_uniform_deviation_bound(q, 1.0);
  CHECK(part(r0, "term1") == 0.0);
  CHECK(part(r0, "term2") == 0.0);
  CHECK(r0.value == doctest::Approx(part(r0, "residual")).epsilon(1e-15));
}

TEST_CASE("martingale moment bounds") {
  BoundParams q;
  q.m = 8.0;
  q.m0 = 4.0;
  q.mu_m = 1.0;
  q.K = 0.5;
  BoundReport r = eval_martingale_moment_bounds(q);
  CHECK(part(r, "subgaussian_F0") == 4.0);
  CHECK(part(r, "subgaussian_general") ==
        doctest::Approx(3.7224194364083984).epsilon(1e-13));
  CHECK(part(r, "bernstein_nonrandom") == 8.0);
  CHECK(part(r, "bernstein_F0") == doctest::Approx(13.454342644059433).epsilon(1e-13));
  CHECK(part(r, "bernstein_general") ==
        doctest::Approx(3457.456475315122).epsilon(1e-12));
  CHECK(has_flag(r, "printed-statement"));

  BoundParams bad = q;
  bad.m0 = 8.0;
  CHECK_THROWS(eval_martingale_moment_bounds(bad));
  bad.m0 = 2.0;
  CHECK_THROWS(eval_martingale_moment_bounds(bad));
}

TEST_CASE("slack_L") {
  CHECK(slack_L(1.0, 0.25, 0.1) == doctest::Approx(2.0976176963403031).epsilon(1e-14));
  CHECK(slack_L(1.0, 0.0, 0.0) == 1.0);
  CHECK_THROWS(slack_L(1.0, 1.0, 0.1));
  CHECK_THROWS(slack_L(1.0, 0.5, -0.1));
}

TEST_CASE("find_M_of_Delta brackets the margin") {
  BoundParams q;
  q.m = 4.0;
  q.C_m = kG4;
  q.p = 40;
  q.n = 400;
  q.t = 2.0;
  // margin already exceeds Delta at M^2 = 2: no admissible radius
  CHECK(!find_M_of_Delta(q, 0.25).has_value());

  BoundParams big;
  big.m = 3.0;
  big.C_m = 1.0;
  big.p = 10;
  big.t = 1.0;
  big.n = 10000000000LL;
  auto all = find_M_of_Delta(big, 0.25);
  REQUIRE(all.has_value());
  CHECK(*all == 10);  // whole range admissible at this n

  big.n = 3000000000LL;
  auto mid = find_M_of_Delta(big, 0.25);
  REQUIRE(mid.has_value());
  auto margin_at = [&](long long msq) {
    BoundParams local = big;
    local.M = std::sqrt(static_cast<double>(msq));
    return eval_transfer_lower_margin(local).value;
  };
  CHECK(margin_at(*mid) <= 0.25);
  if (*mid < big.p) CHECK(margin_at(*mid + 1) > 0.25);

  CHECK_THROWS(find_M_of_Delta(big, 0.0));
  CHECK_THROWS(find_M_of_Delta(big, 1.0));
}

TEST_CASE("normalized floor") {
  BoundParams q;
  q.L = 1.0;
  q.s = 2;
  q.eps = 0.1;
  q.Delta = 0.25;
  BoundReport r = eval_normalized_floor(q, 0.75, 100.0);
  CHECK(r.value == doctest::Approx(0.601010101010101).epsilon(1e-14));
  CHECK(part(r, "slack_L") == doctest::Approx(2.0976176963403031).epsilon(1e-14));
  CHECK_THROWS(eval_normalized_floor(q, 0.75, 1.5));
}

TEST_CASE("transfer floor coefficient") {
  SymMatrix a(3, {2.5, 0.1, 0.0, 0.1, 1.0, -0.2, 0.0, -0.2, 0.5});
  CHECK(transfer_floor_coefficient(a, 2) == -2.5);
  CHECK(transfer_floor_coefficient(a, 3) == -1.25);
  CHECK_THROWS(transfer_floor_coefficient(a, 1));
  CHECK_THROWS(transfer_floor_coefficient(a, 4));
  SymMatrix neg(2, {-0.1, 0.0, 0.0, 1.0});
  CHECK_THROWS(transfer_floor_coefficient(neg, 2));
}

TEST_CASE("bound name registry") {
  auto names = bound_names();
  CHECK(names.size() == 14);
  BoundParams q;
  q.m = 3.0;
  q.C_m = 1.0;
  CHECK(eval_bound_by_name("Dm", q).value == eval_Dm(3.0, 1.0));
  q.sigma_X = 1.0;
  q.K_X = 1.0;
  q.p = 8;
  q.n = 100;
  CHECK(eval_bound_by_name("delta_n", q).value == eval_delta_n(1.0, 1.0, 8, 100));
  for (const auto& name : names) {
    if (name == "subgaussian_lower") continue;  // vacuous at these params, throws
    if (name == "martingale_moment_bounds") {
      BoundParams mq = q;
      mq.m = 8.0;
      mq.m0 = 3.0;
      CHECK(eval_bound_by_name(name, mq).name == name);
      continue;
    }
    CHECK(eval_bound_by_name(name, q).name == name);
  }
  CHECK_THROWS(eval_bound_by_name("no_such_bound", q));
}
