#include "miflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "miflow/errors.hpp"

namespace miflow::experiments {

namespace {

constexpr double kWidth = 720, kHeight = 460;
constexpr double kLeft = 80, kRight = 190, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return format_double(v, 6); }

// Tick positions at 1/2/5 x 10^k spacing.
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= 6.0) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

void padded_range(double& lo, double& hi) {
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(0.5, 0.1 * std::abs(hi));
    lo -= pad;
    hi += pad;
    return;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

std::string short_label(const std::string& column) {
  if (column == "analytic_bound_per_unit") return "analytic";
  if (column == "sampled_bound_per_unit") return "sampled";
  return column;
}

}  // namespace

std::string column_label(const std::string& column) {
  if (column == "analytic_bound_per_unit" || column == "sampled_bound_per_unit" || column == "stderr") {
    return column + " (nats per coordinate)";
  }
  if (column == "q" || column == "q_c") return column + " (signal variance)";
  return column;
}

std::string render_svg(const LineChart& chart) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  std::size_t finite = 0;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      ++finite;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (finite == 0) throw ConfigError("SVG view '" + chart.title + "' selects no data");
  padded_range(xmin, xmax);
  padded_range(ymin, ymax);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(chart.title)
    << "</text>\n";

  // Axes, ticks and grid.
  o << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n"
    << "</g>\n";
  for (const double t : ticks(xmin, xmax)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(sx(t)) << "\" y2=\""
      << kTop + ph + 5 << "\" stroke=\"black\"/>"
      << "<text x=\"" << num(sx(t)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << num(t)
      << "</text>\n";
  }
  for (const double t : ticks(ymin, ymax)) {
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << num(sy(t)) << "\" stroke=\"#dddddd\"/>"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(sy(t) + 4) << "\" text-anchor=\"end\">" << num(t)
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n"
    << "<text transform=\"translate(20," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(chart.y_label) << "</text>\n";

  // Series and legend.
  std::size_t idx = 0;
  for (const auto& s : chart.series) {
    const char* colour = kPalette[idx % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : s.points) {
      if (std::isfinite(p.first) && std::isfinite(p.second)) pts.push_back(p);
    }
    o << "<g class=\"series\" data-label=\"" << escape(s.label) << "\">\n";
    if (pts.size() >= 2) {
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) o << ' ';
        o << num(sx(pts[i].first)) << ',' << num(sy(pts[i].second));
      }
      o << "\"/>\n";
    }
    for (const auto& [x, y] : pts) {
      o << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"2.8\" fill=\"" << colour << "\"/>\n";
    }
    o << "</g>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(idx);
    o << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 40 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>"
      << "<text class=\"legend\" x=\"" << kLeft + pw + 46 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
      << "</text>\n";
    ++idx;
  }
  o << "</svg>\n";
  return o.str();
}

LineChart chart_from_table(const ResultTable& table, const ViewSpec& view) {
  if (!ResultTable::has_column(view.x_column)) throw ConfigError("SVG view: unknown x column '" + view.x_column + "'");
  if (view.y_columns.empty()) throw ConfigError("SVG view '" + view.name + "' has no y columns");
  for (const auto& y : view.y_columns) {
    if (!ResultTable::has_column(y)) throw ConfigError("SVG view: unknown y column '" + y + "'");
  }
  if (!view.group_column.empty() && !ResultTable::has_column(view.group_column)) {
    throw ConfigError("SVG view: unknown group column '" + view.group_column + "'");
  }

  std::vector<double> groups = view.groups;
  if (!view.group_column.empty() && groups.empty()) {
    for (const auto& row : table.rows) {
      const double g = ResultTable::value(row, view.group_column);
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
  }

  LineChart chart;
  chart.title = view.title;
  chart.x_label = column_label(view.x_column);
  chart.y_label = view.y_columns.size() == 1 ? column_label(view.y_columns.front())
                  : view.y_columns.front().find("bound") != std::string::npos
                      ? std::string("bound per unit (nats per coordinate)")
                      : std::string("value");

  auto add_series = [&](const std::string& y, bool grouped, double g) {
    Series s;
    if (grouped) {
      s.label = view.group_column + "=" + format_double(g, 6);
      if (view.y_columns.size() > 1) s.label += " " + short_label(y);
    } else {
      s.label = short_label(y);
    }
    for (const auto& row : table.rows) {
      if (grouped && ResultTable::value(row, view.group_column) != g) continue;
      const double x = ResultTable::value(row, view.x_column);
      const double v = ResultTable::value(row, y);
      if (std::isfinite(x) && std::isfinite(v)) s.points.emplace_back(x, v);
    }
    if (!s.points.empty()) chart.series.push_back(std::move(s));
  };

  if (view.group_column.empty()) {
    for (const auto& y : view.y_columns) add_series(y, false, 0.0);
  } else {
    for (const double g : groups) {
      for (const auto& y : view.y_columns) add_series(y, true, g);
    }
  }
  if (chart.series.empty()) throw ConfigError("SVG view '" + view.name + "' selects no rows");
  return chart;
}

std::string emit_svg(const ResultTable& table, const ViewSpec& view) {
  return render_svg(chart_from_table(table, view));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

}  // namespace miflow::experiments
