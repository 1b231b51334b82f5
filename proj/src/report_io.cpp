#include "qcurv/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "qcurv/scenario.hpp"

namespace qcurv {

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string body;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) body += ',';
    body += header[i];
  }
  body += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("csv row width mismatch for '" + path + "'");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) body += ',';
      body += row[i];
    }
    body += '\n';
  }
  write_text_file(path, body);
}

void emit_profile(const RadialField& field, const RadialGrid& grid,
                  const QProfile& profile, const ModelParams& params,
                  const CutoffConfig& cutoffs, double gaussian_eps,
                  const std::string& path) {
  const int m = grid.size();
  if (m == 0 || field.values.size() != m)
    throw std::invalid_argument("emit_profile: empty or mismatched field");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(m);
  for (int j = 0; j < m; ++j) {
    const double r = grid.nodes[j];
    const double u = field.values[j];
    // the Gaussian regularizer is folded into the Q column so that
    // density = Q * r^{n alpha} * e^{n u} holds exactly among the columns
    const double q = eval_q(profile, r, field.u0, cutoffs) *
                     (gaussian_eps > 0.0 ? std::exp(-gaussian_eps * r * r) : 1.0);
    const double dens =
        q * std::pow(r, params.n * params.alpha) * std::exp(params.n * u);
    rows.push_back({fmt_g17(r), fmt_g17(u), fmt_g17(dens), fmt_g17(q)});
  }
  write_csv(path, {"r", "u", "density", "Q"}, rows);
}

}  // namespace qcurv
