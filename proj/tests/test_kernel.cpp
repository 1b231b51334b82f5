#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "qcurv/kernel.hpp"

using namespace qcurv;

namespace {

// independent composite-Simpson oracle for the n = 3 sphere average,
// accurate to ~1e-12 for ratios q <= 0.5:
//   A_3(r,s) = -log max - (1/4) int_{-1}^{1} log(1 - 2qt + q^2) dt
double a3_simpson(double r, double s) {
  const double M = std::max(r, s);
  const double q = std::min(r, s) / M;
  const int N = 4000;  // even
  const double h = 2.0 / N;
  auto f = [&](double t) { return std::log(1.0 - 2.0 * q * t + q * q); };
  double acc = f(-1.0) + f(1.0);
  for (int i = 1; i < N; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(-1.0 + i * h);
  return -std::log(M) - 0.25 * (acc * h / 3.0);
}

}  // namespace

TEST_CASE("sphere-average point oracles") {
  // n = 2: exactly -log max
  CHECK(angular_log_average(2, 2.0, 1.0) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(angular_log_average(2, 1.0, 2.0) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(angular_log_average(2, 0.5, 0.5) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // n = 3 closed form, frozen from a 30-digit arbitrary-precision evaluation
  CHECK(angular_log_average(3, 2.0, 1.0) ==
        doctest::Approx(-0.73593882475162341).epsilon(1e-13));
  // coincident radii: -log(2r) + 1/2
  CHECK(angular_log_average(3, 1.0, 1.0) ==
        doctest::Approx(-std::log(2.0) + 0.5).epsilon(1e-13));
  CHECK(angular_log_average(3, 3.0, 3.0) ==
        doctest::Approx(-std::log(6.0) + 0.5).epsilon(1e-13));

  // n = 4: exact -log max - q^2/4, frozen value for (2,1)
  CHECK(angular_log_average(4, 2.0, 1.0) ==
        doctest::Approx(-std::log(2.0) - 0.0625).epsilon(1e-11));

  // one argument at the origin: plain -log of the other
  CHECK(angular_log_average(2, 0.0, 3.0) == doctest::Approx(-std::log(3.0)));
  CHECK(angular_log_average(4, 3.0, 0.0) == doctest::Approx(-std::log(3.0)));
}

TEST_CASE("sphere-average property suite: 1000 random samples") {
  std::mt19937 gen(12345);
  std::uniform_real_distribution<double> logr(-3.0, 3.0);
  std::uniform_real_distribution<double> ratio(0.02, 0.98);
  std::uniform_real_distribution<double> scale(0.2, 5.0);

  for (int trial = 0; trial < 1000; ++trial) {
    const double r = std::exp(logr(gen));
    const double q = ratio(gen);
    const double s = r * q;
    for (int n : {2, 3, 4}) {
      CAPTURE(trial);
      CAPTURE(n);
      CAPTURE(r);
      CAPTURE(q);
      const double a = angular_log_average(n, r, s);
      // symmetry
      const double b = angular_log_average(n, s, r);
      CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)));
      // homogeneity A(tr, ts) = A(r,s) - log t
      const double t = scale(gen);
      const double at = angular_log_average(n, t * r, t * s);
      CHECK(std::abs(at - (a - std::log(t))) <= 1e-10 * (1.0 + std::abs(a)));
      // monotone decrease in the larger radius
      const double grow = angular_log_average(n, 1.1 * r, s);
      CHECK(grow < a);
    }
    // n = 2 closed form
    CHECK(angular_log_average(2, r, s) ==
          doctest::Approx(-std::log(r)).epsilon(1e-12));
    // n = 4 closed form (independent of the panel quadrature inside)
    CHECK(std::abs(angular_log_average(4, r, s) -
                   (-std::log(r) - 0.25 * q * q)) <= 1e-10);
  }
}

TEST_CASE("n = 3 quadrature cross-check on 1000 samples") {
  std::mt19937 gen(777);
  std::uniform_real_distribution<double> logr(-2.0, 2.0);
  std::uniform_real_distribution<double> ratio(0.02, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double r = std::exp(logr(gen));
    const double s = r * ratio(gen);
    CAPTURE(r);
    CAPTURE(s);
    CHECK(std::abs(angular_log_average(3, r, s) - a3_simpson(r, s)) <= 1e-10);
  }
}

TEST_CASE("kernel reproduces the flat bubble potential") {
  const ModelParams P = make_params(2, 0.0);
  const RadialGrid G = make_grid(2048, 1e-6, 1e4, 0.0, 2);
  const KernelMatrix K = build_kernel(P, G, 2);
  CHECK(K.kernel_scale == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::ArrayXd d(G.size()), u(G.size());
  for (int j = 0; j < G.size(); ++j) {
    const double r = G.nodes[j];
    u[j] = std::log(2.0 / (1.0 + r * r));
    d[j] = std::exp(2.0 * u[j]);
  }
  const RadialField Pfield = apply_kernel(K, d);
  // the bubble is normal: u - potential must be constant; fix the constant
  // at the origin and look on r <= 100 (truncation perturbs the far edge)
  const double c = std::log(2.0) - Pfield.u0;
  double worst = 0.0;
  for (int j = 0; j < G.size(); ++j) {
    if (G.nodes[j] > 100.0) break;
    worst = std::max(worst, std::abs(u[j] - (Pfield.values[j] + c)));
  }
  CHECK(worst < 1e-3);
  // total curvature 4 pi <=> far-field slope 2
  CHECK(Pfield.tail_slope == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("kernel reproduces the singular bubble, alpha = -1/2") {
  const double alpha = -0.5;
  const ModelParams P = make_params(2, alpha);
  const RadialGrid G = make_grid(2048, 1e-6, 1e4, alpha, 2);
  const KernelMatrix K = build_kernel(P, G, 2);
  Eigen::ArrayXd d(G.size()), u(G.size());
  for (int j = 0; j < G.size(); ++j) {
    const double r = G.nodes[j];
    u[j] = std::log(2.0 * (1.0 + alpha)) - std::log1p(std::pow(r, 2.0 * (1.0 + alpha)));
    d[j] = std::pow(r, 2.0 * alpha) * std::exp(2.0 * u[j]);
  }
  const RadialField Pfield = apply_kernel(K, d);
  const double c = std::log(2.0 * (1.0 + alpha)) - Pfield.u0;
  double worst = 0.0;
  for (int j = 0; j < G.size(); ++j) {
    if (G.nodes[j] > 100.0) break;
    worst = std::max(worst, std::abs(u[j] - (Pfield.values[j] + c)));
  }
  CHECK(worst < 2e-3);
  CHECK(Pfield.tail_slope == doctest::Approx(2.0 * (1.0 + alpha)).epsilon(2e-3));
}

TEST_CASE("zero density maps to the zero potential") {
  const ModelParams P = make_params(3, 0.0);
  const RadialGrid G = make_grid(64, 1e-2, 1e2, 0.0, 3);
  const KernelMatrix K = build_kernel(P, G);
  const RadialField f = apply_kernel(K, Eigen::ArrayXd::Zero(G.size()));
  CHECK(f.values.abs().maxCoeff() == 0.0);
  CHECK(f.u0 == 0.0);
  CHECK(f.tail_slope == 0.0);
}

TEST_CASE("n = 4 assembly matches the closed sphere average") {
  const ModelParams P = make_params(4, 0.0);
  const RadialGrid G = make_grid(96, 1e-2, 1e2, 0.0, 4);
  const KernelMatrix K = build_kernel(P, G);
  std::mt19937 gen(99);
  std::uniform_int_distribution<int> pick(0, G.size() - 1);
  for (int t = 0; t < 200; ++t) {
    const int i = pick(gen), j = pick(gen);
    const double ri = G.nodes[i], rj = G.nodes[j];
    const double M = std::max(ri, rj), q = std::min(ri, rj) / M;
    const double a4 = -std::log(M) - 0.25 * q * q;
    const double expect = K.kernel_scale * G.weights[j] * (a4 + std::log1p(rj));
    CHECK(K.entries(i, j) == doctest::Approx(expect).epsilon(1e-9));
  }
  // origin row: A(0, s) = -log s
  for (int j = 0; j < G.size(); j += 7) {
    const double expect = K.kernel_scale * G.weights[j] *
                          (-std::log(G.nodes[j]) + std::log1p(G.nodes[j]));
    CHECK(K.origin_row[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("kernel cache round-trips bitwise and rejects stale keys") {
  const ModelParams P = make_params(4, 0.25);
  const RadialGrid G = make_grid(64, 1e-2, 1e2, 0.25, 4);
  const KernelMatrix K = build_kernel(P, G);
  const std::string path = "kernel_cache_test.bin";
  save_kernel_cache(path, K);

  const auto back = load_kernel_cache(path, P, G);
  REQUIRE(back.has_value());
  CHECK((back->entries - K.entries).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back->origin_row - K.origin_row).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back->n == 4);
  CHECK(back->kernel_scale == K.kernel_scale);

  // a different grid must invalidate the cache
  const RadialGrid G2 = make_grid(64, 1e-2, 2e2, 0.25, 4);
  CHECK_FALSE(load_kernel_cache(path, P, G2).has_value());
  const ModelParams P3 = make_params(3, 0.25);
  const RadialGrid G3 = make_grid(64, 1e-2, 1e2, 0.25, 3);
  CHECK_FALSE(load_kernel_cache(path, P3, G3).has_value());
  CHECK_FALSE(load_kernel_cache("no_such_cache_file.bin", P, G).has_value());
  std::remove(path.c_str());
}

TEST_CASE("threaded and serial builds agree bitwise") {
  const ModelParams P = make_params(4, 0.0);
  const RadialGrid G = make_grid(72, 1e-2, 1e2, 0.0, 4);
  const KernelMatrix K1 = build_kernel(P, G, 1);
  const KernelMatrix K4 = build_kernel(P, G, 4);
  CHECK((K1.entries - K4.entries).cwiseAbs().maxCoeff() == 0.0);
  CHECK((K1.origin_row - K4.origin_row).cwiseAbs().maxCoeff() == 0.0);
}
