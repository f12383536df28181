// Benchmark the OpenMP kernels against their single-threaded reference
// implementations and confirm both produce identical results.
//
//   bench_kernels [repeats]
//
// Times aggregate_shares_mc, assemble_sinogram, and fbp_invert in both
// variants and prints wall times, speedup, and the max absolute difference
// (which must be ~0: the parallel code reduces in a fixed order).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rcdemand/demand.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/fbp.hpp"
#include "rcdemand/phi.hpp"
#include "rcdemand/radon.hpp"

using namespace rcd;

namespace {

double time_of(const std::function<void()>& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s,
            double max_diff) {
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   "
              "max |diff| %.3g\n",
              name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled (serial build)\n");
#endif

  // Shared fixture: a mixture density over (beta2, alpha) and a 3-good menu.
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 3;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::gumbel();
  spec.validate();
  const CoefficientDensity density = CoefficientDensity::mixture(
      {0.6, 0.4}, {CoefficientDensity::gaussian(Eigen::Vector2d(1.0, -1.0),
                                                Eigen::Vector2d(0.09, 0.04)
                                                    .asDiagonal()),
                   CoefficientDensity::gaussian(Eigen::Vector2d(0.2, -0.5),
                                                Eigen::Vector2d(0.04, 0.09)
                                                    .asDiagonal())});
  ProductMenu menu;
  menu.x2 = (Eigen::MatrixXd(3, 1) << 0.5, -0.4, 1.1).finished();
  menu.p = (Eigen::VectorXd(3) << 1.0, 0.8, 1.4).finished();
  menu.delta = (Eigen::VectorXd(3) << 0.3, -0.2, 0.1).finished();

  {  // Monte Carlo aggregate shares, 200k draws.
    const int n = 200000;
    Eigen::VectorXd a, b;
    const double ts = time_of(
        [&] { a = aggregate_shares_mc_serial(spec, density, menu, n, 42); },
        repeats);
    const double tp = time_of(
        [&] { b = aggregate_shares_mc(spec, density, menu, n, 42); }, repeats);
    report("aggregate_shares_mc", ts, tp, (a - b).cwiseAbs().maxCoeff());
  }

  // Projection-CDF assembly for the pure-characteristics slot (2-d).
  ModelSpec pcm;
  pcm.menu = MenuKind::multinomial;
  pcm.n_goods = 1;
  pcm.d_x = 2;
  pcm.sigma_eps = 0.0;
  pcm.eps = EpsSpec::normal_iid(1);
  pcm.validate();
  const CoefficientDensity pcm_density = CoefficientDensity::gaussian(
      Eigen::Vector2d(0.4, -0.3), Eigen::Vector2d(0.25, 0.16).asDiagonal());
  ProductMenu solo;
  solo.x2 = Eigen::MatrixXd::Zero(1, 1);
  solo.p = Eigen::VectorXd::Zero(1);
  solo.delta = Eigen::VectorXd::Zero(1);
  const SphereGrid grid = SphereGrid::uniform_circle(72, -4.0, 4.0, 97);
  PhiOptions opts;
  opts.n_draws = 2048;
  opts.seed = 7;

  Sinogram sino;
  {
    Sinogram a, b;
    const double ts = time_of(
        [&] {
          a = assemble_sinogram_serial(pcm, pcm_density, PhiStrategy::pcm, 0,
                                       solo, grid, opts, nullptr);
        },
        repeats);
    const double tp = time_of(
        [&] {
          b = assemble_sinogram(pcm, pcm_density, PhiStrategy::pcm, 0, solo,
                                grid, opts, nullptr);
        },
        repeats);
    report("assemble_sinogram", ts, tp,
           (a.phi - b.phi).cwiseAbs().maxCoeff());
    sino = differentiate_offset(std::move(b));
  }

  {  // Filtered back projection onto a 61x61 lattice.
    const std::vector<GridAxis> axes{{-2.0, 3.0, 61}, {-2.5, 2.0, 61}};
    DensityGrid a, b;
    const double ts = time_of(
        [&] { a = fbp_invert_serial(sino, axes, {}, nullptr); }, repeats);
    const double tp =
        time_of([&] { b = fbp_invert(sino, axes, {}, nullptr); }, repeats);
    double diff = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i)
      diff = std::max(diff, std::abs(a[i] - b[i]));
    report("fbp_invert", ts, tp, diff);
  }
  return 0;
}
