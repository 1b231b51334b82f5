#include "qcurv/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace qcurv {
namespace {

// tail of int_R^inf coef r^{pow} r^{n a} e^{n(u_R - beta log(r/R))} omega r^{n-1} dr;
// converges iff n*beta > n(1+alpha) + pow.  Returns false on divergence.
bool tail_term(double coef, double pow_term, double u_end, double beta,
               const RadialGrid& grid, const ModelParams& p, double* out) {
  const double denom = p.n * (beta - 1.0 - p.alpha) - pow_term;
  if (!(denom > 1e-9)) return false;
  const double expo = pow_term + p.n * (1.0 + p.alpha);
  *out = p.omega * coef * std::exp(p.n * u_end) * std::pow(grid.r_max, expo) / denom;
  return true;
}

}  // namespace

Integral total_volume(const RadialField& u, const RadialGrid& grid,
                      const ModelParams& params) {
  const int m = grid.size();
  if (u.values.size() != m)
    throw std::invalid_argument("total_volume: field/grid size mismatch");
  const double na = params.n * params.alpha;
  const Eigen::ArrayXd dens = grid.nodes.pow(na) * (params.n * u.values).exp();
  Integral out;
  out.value = params.omega * (grid.weights * dens).sum();
  double tail = 0.0;
  if (tail_term(1.0, 0.0, u.values[m - 1], u.tail_slope, grid, params, &tail)) {
    out.tail = tail;
    out.value += tail;
    if (!(tail <= 0.01 * (out.value - tail))) out.truncation_flagged = true;
  } else {
    out.truncation_flagged = true;
  }
  if (!std::isfinite(out.value)) out.truncation_flagged = true;
  return out;
}

Integral total_curvature(const RadialField& u, const QProfile& profile,
                         const RadialGrid& grid, const ModelParams& params,
                         const CutoffConfig& cutoffs) {
  const int m = grid.size();
  if (u.values.size() != m)
    throw std::invalid_argument("total_curvature: field/grid size mismatch");
  const double na = params.n * params.alpha;
  double grid_part = 0.0;
  for (int j = 0; j < m; ++j) {
    const double q = eval_q(profile, grid.nodes[j], u.u0, cutoffs);
    grid_part += grid.weights[j] * q * std::pow(grid.nodes[j], na) *
                 std::exp(params.n * u.values[j]);
  }
  Integral out;
  out.value = params.omega * grid_part;
  for (const auto& [coef, pw] : q_tail_terms(profile, u.u0, cutoffs)) {
    if (coef == 0.0) continue;
    double tail = 0.0;
    if (tail_term(coef, pw, u.values[m - 1], u.tail_slope, grid, params, &tail)) {
      out.tail += tail;
    } else {
      out.truncation_flagged = true;
    }
  }
  out.value += out.tail;
  if (!(out.tail <= 0.01 * (out.value - out.tail))) out.truncation_flagged = true;
  if (!std::isfinite(out.value)) out.truncation_flagged = true;
  return out;
}

double beta_of(const RadialField& u, const QProfile& profile,
               const RadialGrid& grid, const ModelParams& params,
               const CutoffConfig& cutoffs) {
  return total_curvature(u, profile, grid, params, cutoffs).value / params.gamma_n;
}

double farfield_slope(const RadialField& u, const RadialGrid& grid,
                      double fit_window_decades) {
  const int m = grid.size();
  const double r_lo = grid.r_max * std::pow(10.0, -fit_window_decades);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int k = 0;
  for (int j = 0; j < m; ++j) {
    if (grid.nodes[j] < r_lo) continue;
    const double x = std::log(grid.nodes[j]), y = u.values[j];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return 0.0;
  const double denom = sxx - sx * sx / k;
  if (denom <= 0.0) return 0.0;
  return -(sxy - sx * sy / k) / denom;
}

PohozaevReport pohozaev_residual(const RadialField& u, const QProfile& profile,
                                 const KernelMatrix& kernel,
                                 const RadialGrid& grid,
                                 const ModelParams& params) {
  (void)profile;  // enters only through u; kept for interface symmetry
  const int m = grid.size();
  const double na = params.n * params.alpha;
  const Eigen::ArrayXd dens1 = grid.nodes.pow(na) * (params.n * u.values).exp();
  const RadialField v = apply_kernel(kernel, dens1);
  const Eigen::ArrayXd h = u.values - v.values;

  // h' on the log grid: centered in the interior, one-sided at the ends
  Eigen::ArrayXd hp(m);
  for (int j = 1; j + 1 < m; ++j)
    hp[j] = (h[j + 1] - h[j - 1]) / (grid.nodes[j + 1] - grid.nodes[j - 1]);
  hp[0] = (h[1] - h[0]) / (grid.nodes[1] - grid.nodes[0]);
  hp[m - 1] = (h[m - 1] - h[m - 2]) / (grid.nodes[m - 1] - grid.nodes[m - 2]);

  const Integral vol = total_volume(u, grid, params);
  const double lambda_grid = vol.value - vol.tail;

  PohozaevReport rep;
  rep.flux_term =
      params.omega * (grid.weights * grid.nodes * hp * dens1).sum();
  rep.lhs = vol.value * (vol.value - 2.0 * params.gamma_n) / (2.0 * params.gamma_n);
  rep.rhs = params.alpha * lambda_grid + rep.flux_term;
  rep.residual = rep.lhs - rep.rhs;
  rep.truncation_estimate =
      (std::abs(params.alpha) + std::abs(grid.nodes[m - 1] * hp[m - 1])) * vol.tail;
  rep.estimate_dominates = rep.truncation_estimate > 10.0 * std::abs(rep.residual);
  return rep;
}

double pohozaev_singular(const RadialField& u, const RadialGrid& grid,
                         const ModelParams& params, double lambda_star) {
  const double vol = total_volume(u, grid, params).value;
  return lambda_star * (lambda_star - 2.0 * params.gamma_n) /
             (2.0 * params.gamma_n) -
         params.alpha * vol;
}

BolVerdict bol_verdict(const RadialField& u, const QProfile& profile,
                       const RadialGrid& grid, const ModelParams& params,
                       double tol_rel) {
  const bool geq1 = certifies_q_at_least_one(profile);
  const bool leq1 = certifies_q_at_most_one(profile);
  if (!geq1 && !leq1) return BolVerdict::NotApplicable;
  const double lam = total_volume(u, grid, params).value;
  const double bound = params.lambda_1 * (1.0 + params.alpha);
  if (geq1 && leq1)  // Q == 1: equality case, both bounds within tolerance
    return std::abs(lam - bound) <= tol_rel * bound ? BolVerdict::UpperBoundHolds
                                                    : BolVerdict::Violated;
  if (geq1)
    return lam <= bound * (1.0 + tol_rel) ? BolVerdict::UpperBoundHolds
                                          : BolVerdict::Violated;
  return lam >= bound * (1.0 - tol_rel) ? BolVerdict::LowerBoundHolds
                                        : BolVerdict::Violated;
}

double pointwise_bound_check(const RadialField& u, const RadialGrid& grid,
                             const ModelParams& params) {
  if (!(params.alpha > 0.0))
    throw std::domain_error("pointwise_bound_check requires alpha > 0");
  const double na = params.n * params.alpha;
  double sup = -1.0;
  for (int j = 0; j < grid.size(); ++j) {
    if (grid.nodes[j] < 1.0) continue;
    sup = std::max(sup,
                   std::pow(grid.nodes[j], na) * std::exp(params.n * u.values[j]));
  }
  if (sup < 0.0)
    throw std::invalid_argument("pointwise_bound_check: no nodes with r >= 1");
  return sup;
}

bool beta_gap_check(const RadialField& u, const QProfile& profile,
                    const RadialGrid& grid, const ModelParams& params) {
  if (!certifies_q_at_least_one(profile)) return true;  // hypothesis not met
  return beta_of(u, profile, grid, params) > 1.0 + params.alpha;
}

}  // namespace qcurv
