#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace qcurv {

// shortest exact decimal form of a double (17 significant digits)
std::string fmt_g17(double x);

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace qcurv
