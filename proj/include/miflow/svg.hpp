#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "miflow/result_table.hpp"

namespace miflow::experiments {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Self-contained SVG: one polyline per series with a marker on every point, labelled axes
/// and a legend. Throws ConfigError when no series has a finite point.
std::string render_svg(const LineChart& chart);

/// Which slice of a ResultTable to draw: x against each y column, one series per value of
/// `group_column` (all distinct values if `groups` is empty; no grouping if the column is empty).
struct ViewSpec {
  std::string name;  // file stem
  std::string title;
  std::string x_column;
  std::vector<std::string> y_columns;
  std::string group_column;
  std::vector<double> groups;
};

LineChart chart_from_table(const ResultTable& table, const ViewSpec& view);
std::string emit_svg(const ResultTable& table, const ViewSpec& view);

/// Axis label for a column: name plus unit where it has one.
std::string column_label(const std::string& column);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace miflow::experiments
