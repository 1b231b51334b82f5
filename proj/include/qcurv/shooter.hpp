#pragma once

#include <string>
#include <vector>

#include "qcurv/kernel.hpp"
#include "qcurv/model.hpp"

namespace qcurv {

// Adaptive radial initial-value integration of the two-dimensional equation
// u'' + u'/r = -Q(r) r^{2a} e^{2u}, carrying the accumulated curvature
// integral as an extra state component.
struct ShootResult {
  Eigen::ArrayXd radii;          // accepted-step radii, ascending
  RadialField field;             // u on radii; u0 is the prescribed u(0)
  Eigen::ArrayXd u_prime;        // du/dr on radii
  double total_curvature = 0.0;  // 2*pi int_0^{r_end} Q r^{1+2a} e^{2u} dr
  bool blowup_flag = false;      // |u| > 500 guard tripped, stopped early
  double r_end = 0.0;            // last radius reached
  double rho = 0.0;              // prescribed origin value
  double alpha = 0.0;            // weight exponent used
  QProfile profile;              // curvature profile used (for re-evaluation)
};

// Integrate from a series start near 0 with u(0) = rho out to r_max with
// local error tolerance tol. Integration restarts at profile corner radii.
ShootResult shoot(const QProfile& profile, double alpha, double rho,
                  double r_max, double tol);

struct ScanRow {
  double k = 0.0;
  double total_curvature = 0.0;
  double interior_dev = 0.0;  // max over r <= 1 of |u - u(0)|
  bool ok = true;
  std::string error;
};

// cubic Hermite sample of the shoot solution at radius r; flat below the
// series start, log-linear with the terminal slope beyond the last step
double shoot_interp_u(const ShootResult& shot, double r);

// case_id 1: tent profile with u(0) = k; case_id 2: spike family with peak
// 1+k and u(0) = log 2. One shoot per k (alpha = 0), rows sorted by k;
// per-row failures are recorded in the row, never thrown.
std::vector<ScanRow> remark62_scan(int case_id,
                                   const std::vector<double>& k_values,
                                   double r_max, int threads = 1);

// Normality deviation: w = u_shoot - (kernel applied to the shoot density),
// returned as sup_j |w_j - mean(w)| over the kernel grid. Near zero iff the
// shoot solution coincides with a normal solution up to a constant.
double cross_validate(const ShootResult& shot, const KernelMatrix& kernel,
                      double tol);

}  // namespace qcurv
