#include "miflow/result_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <system_error>

#include "miflow/errors.hpp"

namespace miflow::experiments {

std::string format_double(double v, int significant) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant);
  return std::string(buf, res.ptr);
}

bool ResultTable::has_column(std::string_view column) noexcept {
  return std::find(kColumns.begin(), kColumns.end(), column) != kColumns.end();
}

double ResultTable::value(const ResultRow& row, std::string_view column) {
  if (column == "layer") return row.layer == 0 ? kMissing : static_cast<double>(row.layer);
  if (column == "sigma_w") return row.sigma_w;
  if (column == "sigma_b") return row.sigma_b;
  if (column == "q") return row.q;
  if (column == "q_c") return row.q_c;
  if (column == "rho") return row.rho;
  if (column == "analytic_bound_per_unit") return row.analytic_bound_per_unit;
  if (column == "sampled_bound_per_unit") return row.sampled_bound_per_unit;
  if (column == "stderr") return row.stderr_per_unit;
  throw ConfigError("unknown result column '" + std::string(column) + "'");
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.layer != 0) out += std::to_string(row.layer);
    for (std::size_t i = 1; i < kColumns.size(); ++i) {
      out += ',';
      const double v = value(row, kColumns[i]);
      if (!std::isnan(v)) out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace miflow::experiments
