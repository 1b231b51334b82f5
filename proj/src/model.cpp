#include "qcurv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcurv {

double sphere_area(int k) {
  // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
  const double half = 0.5 * (k + 1);
  return 2.0 * std::pow(M_PI, half) / std::tgamma(half);
}

ModelParams make_params(int n, double alpha) {
  if (n < 2) throw std::domain_error("make_params: dimension n must be >= 2");
  if (!(alpha > -1.0))
    throw std::domain_error("make_params: alpha must be > -1");
  ModelParams p;
  p.n = n;
  p.alpha = alpha;
  p.gamma_n = 0.5 * std::tgamma(static_cast<double>(n)) * sphere_area(n);
  p.lambda_1 = 2.0 * p.gamma_n;
  p.omega = sphere_area(n - 1);
  return p;
}

RadialGrid make_grid(int m, double r_min, double r_max, double alpha, int n) {
  if (m < 16) throw std::invalid_argument("make_grid: need at least 16 nodes");
  if (!(r_min > 0.0) || !(r_min < r_max))
    throw std::invalid_argument("make_grid: need 0 < r_min < r_max");
  if (!(alpha > -1.0)) throw std::invalid_argument("make_grid: alpha must be > -1");
  if (n < 2) throw std::invalid_argument("make_grid: dimension n must be >= 2");
  const double decades = std::log10(r_max / r_min);
  if (m - 1 < 8.0 * decades) {
    std::ostringstream msg;
    msg << "make_grid: grid too coarse: " << (m - 1) / decades
        << " nodes/decade over " << decades << " decades, need >= 8";
    throw std::invalid_argument(msg.str());
  }

  RadialGrid g;
  g.r_min = r_min;
  g.r_max = r_max;
  g.nodes.resize(m);
  g.weights = Eigen::ArrayXd::Zero(m);
  const double step = std::log(r_max / r_min) / (m - 1);
  for (int j = 0; j < m; ++j) g.nodes[j] = r_min * std::exp(step * j);
  g.nodes[m - 1] = r_max;

  const double na = n * alpha;
  // First panel [0, r_1]: integrate s^{n-1+na} exactly; the density is
  // treated as f(r_1) * (s/r_1)^{na} there (f continuous at 0 times the
  // singular factor), so the weight multiplies f(r_1).
  g.weights[0] += std::pow(r_min, n) / (n + na);
  // Interior panels: two-point rule exact on f in span{1, s^{na}} against
  // s^{n-1} ds (plain {1, s} when the singular weight degenerates).
  for (int j = 0; j + 1 < m; ++j) {
    const double a = g.nodes[j], b = g.nodes[j + 1];
    const double i0 = (std::pow(b, n) - std::pow(a, n)) / n;
    double wb;
    if (std::abs(na) > 1e-10) {
      const double i1 = (std::pow(b, n + na) - std::pow(a, n + na)) / (n + na);
      wb = (i1 - i0 * std::pow(a, na)) / (std::pow(b, na) - std::pow(a, na));
    } else {
      const double i1 = (std::pow(b, n + 1) - std::pow(a, n + 1)) / (n + 1);
      wb = (i1 - i0 * a) / (b - a);
    }
    g.weights[j] += i0 - wb;
    g.weights[j + 1] += wb;
  }
  return g;
}

double ramp(double t) { return std::clamp(t - 1.0, 0.0, 1.0); }

QProfile QProfile::constant(double c) {
  QProfile q;
  q.kind = QKind::Constant;
  q.c0 = c;
  return q;
}

QProfile QProfile::power_sum(double c0, double c1, double p, double c2) {
  QProfile q;
  q.kind = QKind::PowerSum;
  q.c0 = c0;
  q.c1 = c1;
  q.p = p;
  q.c2 = c2;
  return q;
}

QProfile QProfile::inverse_power(int n, double alpha) {
  if (!(alpha < 0.0))
    throw std::invalid_argument("inverse_power profile needs alpha < 0");
  QProfile q;
  q.kind = QKind::InversePower;
  q.n = n;
  q.p = -n * alpha;  // positive exponent of the r^{-n alpha} term
  return q;
}

QProfile QProfile::one_plus_gauss(double a) {
  QProfile q;
  q.kind = QKind::OnePlusGauss;
  q.c0 = a;
  return q;
}

QProfile QProfile::one_plus_exp(double a) {
  QProfile q;
  q.kind = QKind::OnePlusExp;
  q.c0 = a;
  return q;
}

QProfile QProfile::tent() {
  QProfile q;
  q.kind = QKind::Tent;
  return q;
}

QProfile QProfile::spike_family(double k) {
  QProfile q;
  q.kind = QKind::SpikeFamily;
  q.c0 = k;
  return q;
}

QProfile QProfile::self_scaled(int n, double alpha) {
  QProfile q;
  q.kind = QKind::SelfScaled;
  q.n = n;
  q.p = n * alpha;  // (negative) exponent of the singular term
  return q;
}

QProfile QProfile::tabulated(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("tabulated profile needs >= 2 samples");
  for (size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first))
      throw std::invalid_argument("tabulated profile radii must increase");
  QProfile q;
  q.kind = QKind::Tabulated;
  q.samples = std::move(samples);
  return q;
}

std::string QProfile::describe() const {
  std::ostringstream s;
  switch (kind) {
    case QKind::Constant: s << "Q=" << c0; break;
    case QKind::PowerSum:
      s << "Q=" << c0 << "+" << c1 << "*r^" << p;
      if (c2 != 0.0) s << "+" << c2 << "*exp(-r)";
      break;
    case QKind::InversePower: s << "Q=1+r^-" << p; break;
    case QKind::OnePlusGauss: s << "Q=1+" << c0 << "*exp(-r^2)"; break;
    case QKind::OnePlusExp: s << "Q=1+" << c0 << "*exp(-r)"; break;
    case QKind::Tent: s << "Q=tent"; break;
    case QKind::SpikeFamily: s << "Q=spike(k=" << c0 << ")"; break;
    case QKind::SelfScaled: s << "Q=self-scaled(r^" << p << ")"; break;
    case QKind::Tabulated: s << "Q=tabulated[" << samples.size() << "]"; break;
  }
  return s.str();
}

static double eval_base(const QProfile& q, double r, double u0,
                        const CutoffConfig& cut) {
  switch (q.kind) {
    case QKind::Constant:
      return q.c0;
    case QKind::PowerSum:
      return q.c0 + q.c1 * std::pow(r, q.p) + q.c2 * std::exp(-r);
    case QKind::InversePower:
      return 1.0 + std::pow(r, -q.p);
    case QKind::OnePlusGauss:
      return 1.0 + q.c0 * std::exp(-r * r);
    case QKind::OnePlusExp:
      return 1.0 + q.c0 * std::exp(-r);
    case QKind::Tent:
      return (r > 1.0 && r < 2.0) ? (r - 1.0) * (2.0 - r) : 0.0;
    case QKind::SpikeFamily: {
      if (r <= 1.0 || r >= 2.0) return 1.0;
      const double k = q.c0;
      return r < 1.5 ? 2.0 * k * (r - 1.0) + 1.0 : -2.0 * k * (r - 2.0) + 1.0;
    }
    case QKind::SelfScaled: {
      const double phi = cut.delta > 0.0 ? ramp(r / cut.delta) : 1.0;
      if (phi == 0.0) return 1.0;
      return 1.0 + std::exp(-q.n * cut.p * u0) * std::pow(r, q.p) * phi;
    }
    case QKind::Tabulated: {
      const auto& s = q.samples;
      if (r <= s.front().first) return s.front().second;
      if (r >= s.back().first) return s.back().second;
      auto it = std::upper_bound(
          s.begin(), s.end(), r,
          [](double x, const std::pair<double, double>& e) { return x < e.first; });
      const auto& [rb, qb] = *it;
      const auto& [ra, qa] = *(it - 1);
      return qa + (qb - qa) * (r - ra) / (rb - ra);
    }
  }
  return 0.0;  // unreachable
}

double eval_q(const QProfile& profile, double r, double u0,
              const CutoffConfig& cutoffs) {
  double q = eval_base(profile, r, u0, cutoffs);
  if (cutoffs.eps > 0.0) q *= 1.0 - ramp(cutoffs.eps * r);
  return q;
}

bool certifies_q_at_least_one(const QProfile& q) {
  switch (q.kind) {
    case QKind::Constant: return q.c0 >= 1.0;
    case QKind::PowerSum:
      return q.c0 >= 1.0 && q.c1 >= 0.0 && q.p >= 0.0 && q.c2 >= 0.0;
    case QKind::InversePower: return true;
    case QKind::OnePlusGauss:
    case QKind::OnePlusExp: return q.c0 >= 0.0;
    case QKind::Tent: return false;
    case QKind::SpikeFamily: return q.c0 >= 0.0;
    case QKind::SelfScaled: return true;  // 1 + nonnegative term
    case QKind::Tabulated: {
      for (const auto& [r, v] : q.samples)
        if (v < 1.0) return false;
      return true;  // piecewise linear: node minimum is the global minimum
    }
  }
  return false;
}

bool certifies_q_at_most_one(const QProfile& q) {
  switch (q.kind) {
    case QKind::Constant: return q.c0 <= 1.0;
    case QKind::PowerSum:
      return q.c0 <= 1.0 && q.c1 <= 0.0 && q.p >= 0.0 && q.c2 <= 0.0;
    case QKind::InversePower: return false;
    case QKind::OnePlusGauss:
    case QKind::OnePlusExp: return q.c0 <= 0.0;
    case QKind::Tent: return true;  // 0 <= Q <= 1/4
    case QKind::SpikeFamily: return q.c0 <= 0.0;
    case QKind::SelfScaled: return false;
    case QKind::Tabulated: {
      for (const auto& [r, v] : q.samples)
        if (v > 1.0) return false;
      return true;
    }
  }
  return false;
}

std::vector<std::pair<double, double>> q_tail_terms(const QProfile& q, double u0,
                                                    const CutoffConfig& cutoffs) {
  if (cutoffs.eps > 0.0) return {};  // compact support beyond 2/eps
  switch (q.kind) {
    case QKind::Constant: return {{q.c0, 0.0}};
    case QKind::PowerSum: return {{q.c0, 0.0}, {q.c1, q.p}};  // exp term decays
    case QKind::InversePower: return {{1.0, 0.0}, {1.0, -q.p}};
    case QKind::OnePlusGauss:
    case QKind::OnePlusExp: return {{1.0, 0.0}};
    case QKind::Tent: return {};
    case QKind::SpikeFamily: return {{1.0, 0.0}};
    case QKind::SelfScaled:
      return {{1.0, 0.0}, {std::exp(-q.n * cutoffs.p * u0), q.p}};
    case QKind::Tabulated: return {{q.samples.back().second, 0.0}};
  }
  return {};
}

std::vector<double> q_breakpoints(const QProfile& q, const CutoffConfig& cutoffs) {
  std::vector<double> b;
  switch (q.kind) {
    case QKind::Tent: b = {1.0, 2.0}; break;
    case QKind::SpikeFamily: b = {1.0, 1.5, 2.0}; break;
    case QKind::Tabulated:
      for (const auto& [r, v] : q.samples) b.push_back(r);
      break;
    default: break;
  }
  if (cutoffs.delta > 0.0) {
    b.push_back(cutoffs.delta);
    b.push_back(2.0 * cutoffs.delta);
  }
  if (cutoffs.eps > 0.0) {
    b.push_back(1.0 / cutoffs.eps);
    b.push_back(2.0 / cutoffs.eps);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.erase(std::remove_if(b.begin(), b.end(), [](double x) { return x <= 0.0; }),
          b.end());
  return b;
}

const char* to_string(BolVerdict v) {
  switch (v) {
    case BolVerdict::LowerBoundHolds: return "LowerBoundHolds";
    case BolVerdict::UpperBoundHolds: return "UpperBoundHolds";
    case BolVerdict::NotApplicable: return "NotApplicable";
    case BolVerdict::Violated: return "Violated";
  }
  return "NotApplicable";
}

}  // namespace qcurv
