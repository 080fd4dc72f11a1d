#pragma once

#include <array>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace miflow::experiments {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One (grid point, layer) row. NaN marks a quantity the mode did not compute; layer 0 marks
/// rows that are not tied to a layer (edge-of-chaos points).
struct ResultRow {
  int layer = 0;
  double sigma_w = kMissing;
  double sigma_b = kMissing;
  double q = kMissing;
  double q_c = kMissing;
  double rho = kMissing;
  double analytic_bound_per_unit = kMissing;
  double sampled_bound_per_unit = kMissing;
  double stderr_per_unit = kMissing;
};

class ResultTable {
 public:
  static constexpr std::array<std::string_view, 9> kColumns{
      "layer", "sigma_w", "sigma_b", "q", "q_c", "rho", "analytic_bound_per_unit", "sampled_bound_per_unit", "stderr"};

  std::vector<ResultRow> rows;

  static bool has_column(std::string_view column) noexcept;
  /// Value of a named column; throws ConfigError for unknown names.
  static double value(const ResultRow& row, std::string_view column);

  /// Header plus one line per row; doubles with 17 significant digits, missing values empty.
  std::string to_csv() const;
};

/// "%.17g" formatting, independent of the global locale.
std::string format_double(double v, int significant = 17);

}  // namespace miflow::experiments
