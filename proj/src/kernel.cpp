#include "qcurv/kernel.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qcurv {
namespace {

// Gauss-Legendre nodes/weights on [-1,1], 12- and 6-point rules; the pair
// difference serves as the panel error estimate.
constexpr double kGl12X[6] = {0.125233408511469, 0.367831498998180,
                              0.587317954286617, 0.769902674194305,
                              0.904117256370475, 0.981560634246719};
constexpr double kGl12W[6] = {0.249147045813403, 0.233492536538355,
                              0.203167426723066, 0.160078328543346,
                              0.106939325995318, 0.047175336386512};
constexpr double kGl6X[3] = {0.238619186083197, 0.661209386466265,
                             0.932469514203152};
constexpr double kGl6W[3] = {0.467913934572691, 0.360761573048139,
                             0.171324492379170};

double int_pow(double x, int e) {
  double y = 1.0;
  for (int i = 0; i < e; ++i) y *= x;
  return y;
}

// integrand of the regular part: log(1 - 2q cos t + q^2) sin^{n-2} t
double regular_part(double t, double q, int n) {
  const double a = 1.0 - q, sh = std::sin(0.5 * t);
  // 1 - 2q cos t + q^2 = (1-q)^2 + 4q sin^2(t/2); the half-angle form stays
  // exact down to t ~ 1e-13 where 1 - cos t would round to zero
  const double val = a * a + 4.0 * q * sh * sh;
  return std::log(val) * int_pow(std::sin(t), n - 2);
}

struct PanelSums {
  double fine = 0.0;
  double err = 0.0;
};

PanelSums gl_panel(double a, double b, double q, int n) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s12 = 0.0, s6 = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double d = half * kGl12X[i];
    s12 += kGl12W[i] * (regular_part(mid - d, q, n) + regular_part(mid + d, q, n));
  }
  for (int i = 0; i < 3; ++i) {
    const double d = half * kGl6X[i];
    s6 += kGl6W[i] * (regular_part(mid - d, q, n) + regular_part(mid + d, q, n));
  }
  return {half * s12, std::abs(half * (s12 - s6))};
}

// D_n(q) = -(c_n/2) int_0^pi log(1 - 2q cos t + q^2) sin^{n-2} t dt,
// so that A_n(r,s) = -log max(r,s) + D_n(min/max).  The integrand is
// analytic except at t = 0 when q = 1 (integrable log); dyadic panels
// toward 0 resolve it, with the leftover [0, t_min] bounded analytically.
double regular_average(int n, double q) {
  if (q == 0.0) return 0.0;
  const double c_n =
      std::tgamma(0.5 * n) / (std::sqrt(M_PI) * std::tgamma(0.5 * (n - 1)));
  // dyadic panel boundaries pi, pi/2, ... down past the analyticity scale
  const double t_stop = std::max(0.25 * (1.0 - q), 1e-13);
  std::vector<double> edges{M_PI};
  double t = M_PI;
  while (t > t_stop) {
    t *= 0.5;
    edges.push_back(t);
  }
  double leftover = 0.0;
  if (q > 1.0 - 1e-12) {
    // int_0^t |log((1-q)^2 + q t'^2)| t'^{n-2} dt' = O(t^{n-1} |log t|)
    leftover = std::pow(t, n - 1) * (2.0 * std::abs(std::log(t)) + 2.0) / (n - 1);
  }
  for (int round = 0; round < 4; ++round) {
    double sum = 0.0, err = leftover;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
      const PanelSums p = gl_panel(edges[i + 1], edges[i], q, n);
      sum += p.fine;
      err += p.err;
    }
    {
      const PanelSums p = gl_panel(0.0, edges.back(), q, n);
      sum += p.fine;
      err += p.err;
    }
    if (err * 0.5 * c_n < 1e-11) return -0.5 * c_n * sum;
    // halve every panel and retry
    std::vector<double> finer;
    finer.reserve(edges.size() * 2);
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
      finer.push_back(edges[i]);
      finer.push_back(0.5 * (edges[i] + edges[i + 1]));
    }
    finer.push_back(edges.back());
    finer.push_back(0.5 * edges.back());
    edges = std::move(finer);
  }
  throw std::runtime_error("angular_log_average: quadrature failed to reach "
                           "1e-10 at q = " + std::to_string(q));
}

// closed form of the n=3 average away from the diagonal; for small q the
// antiderivative cancels catastrophically, so a fast series is used there:
//   D_3(q) = -sum_{m>=1} q^{2m} / (2m (4m^2-1))
double a3_series(double q) {
  double sum = 0.0, q2 = q * q, pw = 1.0;
  for (int m = 1; m < 400; ++m) {
    pw *= q2;
    const double term = pw / (2.0 * m * (4.0 * m * m - 1.0));
    sum += term;
    if (term < 1e-18 * (1.0 + sum)) break;
  }
  return -sum;
}

double a3_value(double r, double s) {
  const double q = s / r;  // caller guarantees s <= r, r > 0
  if (q < 0.3) return -std::log(r) + a3_series(q);
  if (r == s) return -std::log(2.0 * r) + 0.5;
  const double sp = r + s, sm = r - s;
  return -(sp * sp * (2.0 * std::log(sp) - 1.0) -
           sm * sm * (2.0 * std::log(std::abs(sm)) - 1.0)) /
         (8.0 * r * s);
}

bool is_geometric(const RadialGrid& g, double* step_out) {
  const int m = g.size();
  const double step = std::log(g.r_max / g.r_min) / (m - 1);
  for (int j = 1; j < m; ++j) {
    const double expect = std::log(g.r_min) + step * j;
    if (std::abs(std::log(g.nodes[j]) - expect) > 1e-9 * (1.0 + std::abs(expect)))
      return false;
  }
  *step_out = step;
  return true;
}

uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t grid_hash(int n, const RadialGrid& g) {
  uint64_t h = fnv1a(&n, sizeof n);
  h = fnv1a(g.nodes.data(), sizeof(double) * g.nodes.size(), h);
  h = fnv1a(g.weights.data(), sizeof(double) * g.weights.size(), h);
  h = fnv1a(&g.r_min, sizeof(double), h);
  h = fnv1a(&g.r_max, sizeof(double), h);
  return h;
}

}  // namespace

double angular_log_average(int n, double r, double s) {
  if (n < 2) throw std::invalid_argument("angular_log_average: n >= 2");
  if (r < s) std::swap(r, s);  // symmetric; now s <= r
  if (r <= 0.0)
    throw std::invalid_argument("angular_log_average: (r,s) = (0,0)");
  if (s == 0.0) return -std::log(r);
  if (n == 2) return -std::log(r);  // mean value property of log on circles
  if (n == 3) return a3_value(r, s);
  return -std::log(r) + regular_average(n, s / r);
}

KernelMatrix build_kernel(const ModelParams& params, const RadialGrid& grid,
                          int threads) {
  const int m = grid.size();
  if (m == 0) throw std::invalid_argument("build_kernel: empty grid");
  KernelMatrix K;
  K.n = params.n;
  K.kernel_scale = params.omega / params.gamma_n;
  K.grid = grid;
  K.entries.resize(m, m);
  K.origin_row.resize(m);

  // On a geometric grid A_n(r_i,r_j) = -log max + D_n(ratio^{|i-j|}), so one
  // D_n value per lag covers the whole matrix.
  double step = 0.0;
  std::vector<double> lag;
  const bool geo = (params.n >= 4) && is_geometric(grid, &step);
  if (geo) {
    lag.resize(m);
    for (int d = 0; d < m; ++d) lag[d] = regular_average(params.n, std::exp(-step * d));
  }

  const Eigen::ArrayXd logw = (1.0 + grid.nodes).log();
  auto fill_rows = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const double ri = grid.nodes[i];
      for (int j = 0; j < m; ++j) {
        const double rj = grid.nodes[j];
        const double a = geo ? -std::log(std::max(ri, rj)) + lag[std::abs(i - j)]
                             : angular_log_average(params.n, ri, rj);
        K.entries(i, j) = K.kernel_scale * grid.weights[j] * (a + logw[j]);
      }
    }
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    const int chunk = (m + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk, hi = std::min(m, lo + chunk);
      if (lo < hi) pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  } else {
    fill_rows(0, m);
  }
  for (int j = 0; j < m; ++j)
    K.origin_row[j] =
        K.kernel_scale * grid.weights[j] * (-std::log(grid.nodes[j]) + logw[j]);
  return K;
}

RadialField apply_kernel(const KernelMatrix& kernel,
                         const Eigen::ArrayXd& density) {
  if (density.size() != kernel.grid.size())
    throw std::invalid_argument("apply_kernel: density length mismatch");
  RadialField f;
  f.values = (kernel.entries * density.matrix()).array();
  f.u0 = kernel.origin_row.dot(density.matrix());
  f.tail_slope = kernel.kernel_scale * (kernel.grid.weights * density).sum();
  return f;
}

namespace {
constexpr char kCacheMagic[8] = {'Q', 'K', 'R', 'N', 'C', 'H', '0', '1'};
}

void save_kernel_cache(const std::string& path, const KernelMatrix& kernel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_kernel_cache: cannot open " + path);
  const int64_t n = kernel.n, m = kernel.grid.size();
  const uint64_t h = grid_hash(kernel.n, kernel.grid);
  out.write(kCacheMagic, 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&m), 8);
  out.write(reinterpret_cast<const char*>(&h), 8);
  out.write(reinterpret_cast<const char*>(&kernel.kernel_scale), 8);
  out.write(reinterpret_cast<const char*>(kernel.entries.data()),
            8 * static_cast<std::streamsize>(m) * m);
  out.write(reinterpret_cast<const char*>(kernel.origin_row.data()), 8 * m);
  if (!out) throw std::runtime_error("save_kernel_cache: short write to " + path);
}

std::optional<KernelMatrix> load_kernel_cache(const std::string& path,
                                              const ModelParams& params,
                                              const RadialGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  int64_t n = 0, m = 0;
  uint64_t h = 0;
  double scale = 0.0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&m), 8);
  in.read(reinterpret_cast<char*>(&h), 8);
  in.read(reinterpret_cast<char*>(&scale), 8);
  if (!in || std::memcmp(magic, kCacheMagic, 8) != 0) return std::nullopt;
  if (n != params.n || m != grid.size() || h != grid_hash(params.n, grid))
    return std::nullopt;
  KernelMatrix K;
  K.n = params.n;
  K.kernel_scale = scale;
  K.grid = grid;
  K.entries.resize(m, m);
  K.origin_row.resize(m);
  in.read(reinterpret_cast<char*>(K.entries.data()),
          8 * static_cast<std::streamsize>(m) * m);
  in.read(reinterpret_cast<char*>(K.origin_row.data()), 8 * m);
  if (!in) return std::nullopt;
  return K;
}

}  // namespace qcurv
