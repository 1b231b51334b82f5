#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace qcurv {

// Dimension-dependent constants of the curvature problem.
//   gamma_n  = ((n-1)!/2)|S^n|   normalizer of the log kernel
//   lambda_1 = (n-1)!|S^n|       volume quantum of the round sphere, = 2 gamma_n
//   omega    = |S^{n-1}|         area of the unit sphere in R^n
struct ModelParams {
  int n = 2;
  double alpha = 0.0;  // singular weight exponent in |x|^{n*alpha}, > -1
  double gamma_n = 0.0;
  double lambda_1 = 0.0;
  double omega = 0.0;
};

// |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
double sphere_area(int k);

// Throws std::domain_error for n < 2 or alpha <= -1.
ModelParams make_params(int n, double alpha);

// Geometric radial grid with product-quadrature weights for
//   int_0^{r_max} f(s) s^{n-1} ds  ~=  sum_j w_j f(r_j).
// The weights are exact (to rounding) on f = 1 and f = s^{n*alpha}; the
// first panel [0, r_1] is integrated in closed form treating f as
// proportional to s^{n*alpha} there.
struct RadialGrid {
  Eigen::ArrayXd nodes;    // strictly increasing, positive
  Eigen::ArrayXd weights;  // nonnegative
  double r_min = 0.0;
  double r_max = 0.0;
  int size() const { return static_cast<int>(nodes.size()); }
};

// Throws std::invalid_argument when m < 16 or the spacing is coarser than
// 8 nodes per decade ("grid too coarse"), or on bad radii/alpha.
RadialGrid make_grid(int m, double r_min, double r_max, double alpha, int n);

// u sampled at grid nodes, its (finite) origin value, and the far-field
// log slope:  u(r) ~= u(r_M) - tail_slope * log(r/r_M)  for r > r_M.
struct RadialField {
  Eigen::ArrayXd values;
  double u0 = 0.0;
  double tail_slope = 0.0;
};

// Cutoffs of the truncated/regularized problems.
//   phi ramp:    0 on [0,1), t-1 on [1,2), 1 on [2,inf)
//   phi_delta(r) = phi(r/delta), inner truncation  (delta = 0 disables)
//   psi_eps(r)   = 1 - phi(eps*r), outer truncation (eps = 0 disables)
//   p in (0,1):  exponent of the self-scaled curvature factor e^{-n p u(0)}
struct CutoffConfig {
  double eps = 0.0;
  double delta = 0.0;
  double p = 0.5;
};

double ramp(double t);  // the phi above

enum class QKind {
  Constant,      // c0
  PowerSum,      // c0 + c1 r^p + c2 exp(-r)
  InversePower,  // 1 + r^expo with expo = -n*alpha > 0
  OnePlusGauss,  // 1 + c0 exp(-r^2)
  OnePlusExp,    // 1 + c0 exp(-r)
  Tent,          // (r-1)(2-r) on 1<r<2, else 0
  SpikeFamily,   // 1 off (1,2); 2k(r-1)+1 on [1,3/2); -2k(r-2)+1 on [3/2,2)
  SelfScaled,    // 1 + e^{-n p u0} r^expo phi_delta(r), expo = n*alpha
  Tabulated,     // piecewise-linear through samples, flat beyond the ends
};

struct QProfile {
  QKind kind = QKind::Constant;
  double c0 = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;     // exponential-term coefficient for PowerSum
  double p = 0.0;      // power for PowerSum; exponent for InversePower/SelfScaled
  int n = 2;           // dimension, used by SelfScaled
  std::vector<std::pair<double, double>> samples;  // Tabulated only

  static QProfile constant(double c);
  static QProfile power_sum(double c0, double c1, double p, double c2 = 0.0);
  static QProfile inverse_power(int n, double alpha);  // alpha < 0
  static QProfile one_plus_gauss(double a);
  static QProfile one_plus_exp(double a);
  static QProfile tent();
  static QProfile spike_family(double k);
  static QProfile self_scaled(int n, double alpha);
  static QProfile tabulated(std::vector<std::pair<double, double>> samples);

  std::string describe() const;
};

// Effective curvature factor at radius r.  u0 is the field's origin value
// (only SelfScaled uses it); psi_eps multiplies every kind when eps > 0.
double eval_q(const QProfile& profile, double r, double u0,
              const CutoffConfig& cutoffs);

// Conservative sign certificates decided from the parameters alone
// (no cutoffs; a psi_eps cutoff would void the >=1 certificate).
bool certifies_q_at_least_one(const QProfile& profile);
bool certifies_q_at_most_one(const QProfile& profile);

// Large-r behaviour of Q as a sum of c * r^p terms (decaying exponential
// parts dropped).  Empty when the eps cutoff compactifies the support or
// when the profile vanishes at infinity.  u0 as in eval_q.
std::vector<std::pair<double, double>> q_tail_terms(const QProfile& profile,
                                                    double u0,
                                                    const CutoffConfig& cutoffs);

// Radii where Q or a cutoff is only piecewise smooth; ODE integration and
// quadrature split at these.  Sorted, deduplicated, positive.
std::vector<double> q_breakpoints(const QProfile& profile,
                                  const CutoffConfig& cutoffs);

enum class BolVerdict { LowerBoundHolds, UpperBoundHolds, NotApplicable, Violated };

const char* to_string(BolVerdict v);

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // sup-norm of the last Picard update
  double c = 0.0;         // additive normalization constant
  double lambda_vol = 0.0;   // int |x|^{n a} e^{nu}
  double lambda_star = 0.0;  // int Q |x|^{n a} e^{nu}
  double beta = 0.0;         // lambda_star / gamma_n
  double beta_fit = 0.0;     // fitted far-field slope
  double pohozaev_lhs = 0.0;
  double pohozaev_rhs = 0.0;
  double pohozaev_residual = 0.0;
  double truncation_estimate = 0.0;
  BolVerdict bol_verdict = BolVerdict::NotApplicable;
  bool tail_flagged = false;    // truncation-dominated integrals
  bool clipped = false;         // density overflow clip was active at exit
  bool identity_flagged = false;  // post-rescale identity check failed
  int stage_failed = -1;        // continuation stage index, -1 if none
  std::string cause;            // non-convergence cause, empty if converged
};

}  // namespace qcurv
