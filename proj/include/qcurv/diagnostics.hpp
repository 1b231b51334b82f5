#pragma once

#include "qcurv/kernel.hpp"
#include "qcurv/model.hpp"

namespace qcurv {

// Radial integral split into the quadrature part over the grid and the
// analytic power-law tail beyond r_max.  truncation_flagged marks results
// whose tail model failed to converge or dominates the grid part (> 1%).
struct Integral {
  double value = 0.0;  // grid part + tail
  double tail = 0.0;
  bool truncation_flagged = false;
};

// Total volume int |x|^{n a} e^{nu} dx.  The tail uses the field's
// far-field slope: converges iff tail_slope > 1 + alpha.
Integral total_volume(const RadialField& u, const RadialGrid& grid,
                      const ModelParams& params);

// Total curvature int Q |x|^{n a} e^{nu} dx; Q evaluated with the given
// cutoffs, tail terms from the profile's large-r expansion.
Integral total_curvature(const RadialField& u, const QProfile& profile,
                         const RadialGrid& grid, const ModelParams& params,
                         const CutoffConfig& cutoffs = {});

// beta = total_curvature / gamma_n, the far-field log coefficient.
double beta_of(const RadialField& u, const QProfile& profile,
               const RadialGrid& grid, const ModelParams& params,
               const CutoffConfig& cutoffs = {});

// Least-squares slope of u against log r over the last fit_window decades,
// returned as beta_fit = -slope.
double farfield_slope(const RadialField& u, const RadialGrid& grid,
                      double fit_window_decades = 2.0);

// Scaling identity for normal solutions:
//   Lambda(Lambda - 2 gamma_n)/(2 gamma_n)
//     = alpha Lambda_R + int_0^R r h'(r) dmu,   dmu = |x|^{n a} e^{nu} dx,
// where h = u - v and v is the potential of the weight-one density
// |y|^{n a} e^{nu}.  Evaluated at R = r_max with h' by centered differences
// on the log grid; truncation_estimate bounds the neglected tail.
struct PohozaevReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;          // lhs - rhs
  double flux_term = 0.0;         // the int r h' dmu part of rhs
  double truncation_estimate = 0.0;
  bool estimate_dominates = false;  // truncation_estimate > 10 |residual|
};

PohozaevReport pohozaev_residual(const RadialField& u, const QProfile& profile,
                                 const KernelMatrix& kernel,
                                 const RadialGrid& grid,
                                 const ModelParams& params);

// Singular-weight variant for the two-term curvature 1 + r^{-n alpha}:
//   Lambda*(Lambda* - 2 gamma_n)/(2 gamma_n) - alpha int |x|^{n a} e^{nu}.
double pohozaev_singular(const RadialField& u, const RadialGrid& grid,
                         const ModelParams& params, double lambda_star);

// Volume dichotomy: Q <= 1 forces Lambda >= Lambda_1 (1+alpha), Q >= 1 the
// reverse, equality only for Q == 1.  NotApplicable when the profile
// certifies neither sign.
BolVerdict bol_verdict(const RadialField& u, const QProfile& profile,
                       const RadialGrid& grid, const ModelParams& params,
                       double tol_rel = 1e-2);

// sup over nodes r >= 1 of r^{n a} e^{nu}; requires alpha > 0.
double pointwise_bound_check(const RadialField& u, const RadialGrid& grid,
                             const ModelParams& params);

// true iff beta > 1 + alpha whenever the profile certifies Q >= 1
// (vacuously true otherwise).
bool beta_gap_check(const RadialField& u, const QProfile& profile,
                    const RadialGrid& grid, const ModelParams& params);

}  // namespace qcurv
