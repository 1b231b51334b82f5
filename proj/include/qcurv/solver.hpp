#pragma once

#include "qcurv/diagnostics.hpp"
#include "qcurv/kernel.hpp"
#include "qcurv/model.hpp"

namespace qcurv {

// Gauge selection for the additive constant of the integral equation.
struct Normalization {
  enum class Mode { FixedConstant, FixedOrigin, FixedVolume };
  Mode mode = Mode::FixedOrigin;
  double value = 0.0;

  static Normalization fixed_constant(double c) { return {Mode::FixedConstant, c}; }
  static Normalization fixed_origin(double rho) { return {Mode::FixedOrigin, rho}; }
  static Normalization fixed_volume(double lambda_star);  // requires > 0
};

struct SolverOptions {
  double damping = 0.5;   // Picard blend factor theta
  double tol = 1e-9;      // sup-norm tolerance on the damped update
  int max_iter = 2000;
  CutoffConfig cutoffs;
  double gaussian_eps = 0.0;  // density regularizer e^{-eps r^2}
};

// One damped Picard step u -> (1-theta) u + theta T[u] where
// T[u] = kernel * density(u) + c and c realizes the normalization
// (closed form for FixedVolume with u0-independent Q; monotone bisection
// for the self-scaled curvature).
struct PicardResult {
  RadialField next;
  double update_norm = 0.0;  // theta * sup|T[u] - u|
  double raw_norm = 0.0;     // sup|T[u] - u|
  double c = 0.0;
  bool clipped = false;      // density hit the 1e300 overflow clip
  bool rootfind_ok = true;   // FixedVolume bracket/bisection succeeded
};

PicardResult picard_step(const RadialField& u, const KernelMatrix& kernel,
                         const QProfile& profile, const ModelParams& params,
                         const Normalization& norm, const SolverOptions& opts);

struct SolveResult {
  RadialField field;
  SolveReport report;
};

// Damped Picard iteration to a normal solution.  The damping halves when
// successive updates oppose (oscillation) and relaxes back on smooth
// progress.  kernel/init may be supplied to reuse an assembled matrix or
// to warm-start; both default to internal construction.
SolveResult solve_normal(const QProfile& profile, const ModelParams& params,
                         const RadialGrid& grid, const Normalization& norm,
                         const SolverOptions& opts,
                         const KernelMatrix* kernel = nullptr,
                         const RadialField* init = nullptr);

// eps is lowered first at the widest delta, then delta is lowered at the
// final eps; {0} sequences degenerate to a single unregularized stage.
struct ContinuationSchedule {
  std::vector<double> eps_seq{1e-1, 1e-2, 1e-3, 0.0};
  std::vector<double> delta_seq{1e-1, 1e-2, 0.0};
};

// Prescribed-total-curvature branch: solves the self-scaled problem
// (weight exponent zero, curvature 1 + e^{-n p u(0)} r^{n alpha} phi_delta,
// psi_eps outer cutoff) with FixedVolume(lambda_star) along the schedule,
// then rescales u(x) -> u(lambda x) + log lambda with
// lambda = e^{(p/alpha) u(0)} and re-verifies the total curvature and the
// singular scaling identity on the rescaled field.  Requires
// alpha in (-1,0), p in (0,1), p + alpha > 0.
SolveResult continuation_solve(double lambda_star, double alpha, double p,
                               const ModelParams& params, const RadialGrid& grid,
                               const ContinuationSchedule& schedule,
                               const SolverOptions& opts,
                               const RadialField* init = nullptr);

}  // namespace qcurv
