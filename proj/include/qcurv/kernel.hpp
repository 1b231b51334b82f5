#pragma once

#include <optional>
#include <string>

#include "qcurv/model.hpp"

namespace qcurv {

// Sphere average of log(1/|r e1 - s w|) over unit vectors w:
//   A_n(r,s) = -(c_n/2) int_0^pi log(r^2+s^2-2rs cos t) sin^{n-2}t dt,
//   c_n = Gamma(n/2)/(sqrt(pi) Gamma((n-1)/2)).
// Closed forms for n=2,3; adaptive panel quadrature for n>=4.  Exact
// limits A_n(r,0) = -log r and A_n(0,s) = -log s.  Throws std::runtime_error
// when the quadrature cannot certify 1e-10 absolute accuracy.
double angular_log_average(int n, double r, double s);

// Dense Nystrom matrix of the normal-solution integral operator:
//   entries(i,j) = (omega/gamma_n) w_j (A_n(r_i,r_j) + log(1+r_j)),
// plus the origin row built from A_n(0,s) = -log s.  Applying it to the
// radial density samples of |y|^{n a} Q e^{nu} yields the potential
//   (1/gamma_n) int log((1+|y|)/|x-y|) dens(y) dy  at each node and at 0.
struct KernelMatrix {
  Eigen::MatrixXd entries;
  Eigen::VectorXd origin_row;
  int n = 2;
  double kernel_scale = 0.0;  // omega/gamma_n
  RadialGrid grid;
};

KernelMatrix build_kernel(const ModelParams& params, const RadialGrid& grid,
                          int threads = 1);

RadialField apply_kernel(const KernelMatrix& kernel,
                         const Eigen::ArrayXd& density);

// Optional binary cache: little-endian doubles with a small header keyed by
// (n, grid hash); never required for correctness.  load returns nothing on
// any mismatch or read failure.
void save_kernel_cache(const std::string& path, const KernelMatrix& kernel);
std::optional<KernelMatrix> load_kernel_cache(const std::string& path,
                                              const ModelParams& params,
                                              const RadialGrid& grid);

}  // namespace qcurv
