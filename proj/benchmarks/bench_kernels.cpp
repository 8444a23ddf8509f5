// Timing comparison of the parallel kernels against their serial references.
// Informational only; prints a small table and exits 0.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"
#include "isoquad/linalg.hpp"
#include "isoquad/parallel.hpp"

using namespace isoquad;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (el < best) best = el;
  }
  return best;
}

void row(const std::string& name, double serial_s, double parallel_s) {
  std::printf("%-28s %10.4f ms %10.4f ms %8.2fx\n", name.c_str(), serial_s * 1e3,
              parallel_s * 1e3, parallel_s > 0.0 ? serial_s / parallel_s : 0.0);
}

}  // namespace

int main() {
  std::printf("threads: %d (ISOQUAD_THREADS caps this)\n\n", par::thread_cap());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    EnsembleSpec spec;
    spec.variant = Variant::gaussian;
    spec.p = 160;
    DesignSample ds = sample(spec, 3000, 1);
    SymMatrix gs, gp;
    double ts = time_best_of(3, [&] { gs = gram_serial(ds.X, ds.n, ds.p); });
    double tp = time_best_of(3, [&] { gp = gram_parallel(ds.X, ds.n, ds.p); });
    row("gram 3000x160", ts, tp);
    if (matrix_hash(gs) != matrix_hash(gp)) {
      std::printf("ERROR: kernels disagree\n");
      return 1;
    }
  }

  {
    EnsembleSpec spec;
    spec.variant = Variant::gaussian;
    spec.p = 24;
    DesignSample ds = sample(spec, 400, 2);
    ConeSpec cone;
    cone.S = {0, 5, 11};
    cone.L = 1.0;
    cone.mode = NormMode::l1_on_S;
    // orthant subproblems fan out across threads; serial path via thread cap
    double tp = time_best_of(3, [&] { compat_constant(ds.gram, cone); });
    setenv("ISOQUAD_THREADS", "1", 1);
    double ts = time_best_of(3, [&] { compat_constant(ds.gram, cone); });
    unsetenv("ISOQUAD_THREADS");
    row("compat p=24 |S|=3", ts, tp);

    cone.mode = NormMode::l2_on_uS;
    double rp = time_best_of(3, [&] { restricted_eigenvalue(ds.gram, cone); });
    setenv("ISOQUAD_THREADS", "1", 1);
    double rs = time_best_of(3, [&] { restricted_eigenvalue(ds.gram, cone); });
    unsetenv("ISOQUAD_THREADS");
    row("RE multi-start p=24", rs, rp);
  }

  return 0;
}
