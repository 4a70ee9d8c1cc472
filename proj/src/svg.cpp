#include "selfdiff/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#2e8b57", "#8c5aa8",
                          "#c98a1c", "#4d4d4d"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

struct ChartOptions {
  std::string title, xlabel, ylabel;
  int width = 640, height = 480;
  bool equal_axes = false;  // same scale on x and y (planar curves)
  bool zero_lines = true;
};

// Shared polyline chart: margins, axis box, ticks, legend, one polyline per
// series. All coordinates go through fmt() so the byte output is stable.
std::string line_chart(const std::vector<Series>& series,
                       const ChartOptions& opt) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (const auto& [x, y] : s.pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax) || !(ymin <= ymax))
    throw ValidationError("plot: no finite data points");
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  if (opt.equal_axes) {
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double half = 0.5 * std::max(xmax - xmin, ymax - ymin);
    xmin = cx - half; xmax = cx + half;
    ymin = cy - half; ymax = cy + half;
  }
  const double mx = 0.05 * (xmax - xmin), my = 0.05 * (ymax - ymin);
  xmin -= mx; xmax += mx; ymin -= my; ymax += my;

  const double L = 60, R = 20, T = 36, B = 46;
  const double pw = opt.width - L - R, ph = opt.height - T - B;
  auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return T + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width
      << " " << opt.height << "\">\n";
  svg << "<rect width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << opt.width / 2 << "\" y=\"20\" font-size=\"14\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\">"
      << opt.title << "</text>\n";
  svg << "<rect x=\"" << fmt(L) << "\" y=\"" << fmt(T) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + i * (xmax - xmin) / 4;
    const double yv = ymin + i * (ymax - ymin) / 4;
    svg << "<text x=\"" << fmt(X(xv)) << "\" y=\"" << fmt(T + ph + 16)
        << "\" font-size=\"10\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">" << fmt(xv) << "</text>\n";
    svg << "<text x=\"" << fmt(L - 6) << "\" y=\"" << fmt(Y(yv) + 3)
        << "\" font-size=\"10\" text-anchor=\"end\" "
           "font-family=\"sans-serif\">" << fmt(yv) << "</text>\n";
  }
  svg << "<text x=\"" << opt.width / 2 << "\" y=\"" << opt.height - 8
      << "\" font-size=\"12\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">" << opt.xlabel << "</text>\n";
  svg << "<text x=\"14\" y=\"" << opt.height / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 14 "
      << opt.height / 2 << ")\">" << opt.ylabel << "</text>\n";

  if (opt.zero_lines) {
    if (xmin < 0.0 && xmax > 0.0)
      svg << "<line x1=\"" << fmt(X(0)) << "\" y1=\"" << fmt(T) << "\" x2=\""
          << fmt(X(0)) << "\" y2=\"" << fmt(T + ph)
          << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    if (ymin < 0.0 && ymax > 0.0)
      svg << "<line x1=\"" << fmt(L) << "\" y1=\"" << fmt(Y(0)) << "\" x2=\""
          << fmt(L + pw) << "\" y2=\"" << fmt(Y(0))
          << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[s].pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      svg << fmt(X(x)) << "," << fmt(Y(y)) << " ";
    }
    svg << "\"/>\n";
    if (!series[s].label.empty()) {
      const double ly = T + 14 + 14 * s;
      svg << "<line x1=\"" << fmt(L + pw - 110) << "\" y1=\"" << fmt(ly)
          << "\" x2=\"" << fmt(L + pw - 92) << "\" y2=\"" << fmt(ly)
          << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
      svg << "<text x=\"" << fmt(L + pw - 88) << "\" y=\"" << fmt(ly + 3)
          << "\" font-size=\"10\" font-family=\"sans-serif\">"
          << series[s].label << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

int require_column(const CsvTable& t, const std::string& name) {
  const int c = t.column(name);
  if (c < 0)
    throw ValidationError("plot: required column `" + name + "` missing");
  return c;
}

void require_rows(const CsvTable& t) {
  if (t.rows.empty()) throw ValidationError("plot: table has no data rows");
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      t.header = cells;
      have_header = true;
      continue;
    }
    std::vector<double> nums(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        std::size_t pos = 0;
        nums[i] = std::stod(cells[i], &pos);
        if (pos != cells[i].size()) nums[i] = std::numeric_limits<double>::quiet_NaN();
      } catch (const std::exception&) {
        nums[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    t.rows.push_back(std::move(nums));
    t.raw.push_back(std::move(cells));
  }
  if (!have_header) throw ValidationError("csv file has no header: " + path);
  return t;
}

std::optional<PlotKind> plot_kind_from(const std::string& name) {
  if (name == "jcurve") return PlotKind::JCurve;
  if (name == "portrait") return PlotKind::Portrait;
  if (name == "overlay") return PlotKind::Overlay;
  if (name == "phase-strip") return PlotKind::PhaseStrip;
  return std::nullopt;
}

std::string plot_kind_name(PlotKind kind) {
  switch (kind) {
    case PlotKind::JCurve: return "jcurve";
    case PlotKind::Portrait: return "portrait";
    case PlotKind::Overlay: return "overlay";
    case PlotKind::PhaseStrip: return "phase-strip";
  }
  return "?";
}

std::string render_jcurve_svg(const CsvTable& table) {
  require_rows(table);
  const int ca = require_column(table, "alpha");
  const int cj = require_column(table, "J");
  const int cp = table.column("Jprime_fd");
  std::vector<Series> series(1);
  series[0].label = "J(alpha)";
  for (const auto& row : table.rows) series[0].pts.emplace_back(row[ca], row[cj]);
  if (cp >= 0) {
    Series sp;
    sp.label = "J'(alpha)";
    for (const auto& row : table.rows) sp.pts.emplace_back(row[ca], row[cp]);
    series.push_back(std::move(sp));
  }
  ChartOptions opt;
  opt.title = "Reduced drift J";
  opt.xlabel = "alpha";
  opt.ylabel = "J";
  return line_chart(series, opt);
}

std::string render_portrait_svg(const CsvTable& table) {
  require_rows(table);
  const int cs = require_column(table, "start");
  const int ca = require_column(table, "alpha");
  const int cg = require_column(table, "sigma");
  std::vector<Series> series;
  double cur = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : table.rows) {
    if (series.empty() || row[cs] != cur) {
      cur = row[cs];
      series.push_back({"start " + fmt(cur), {}});
    }
    series.back().pts.emplace_back(0.5 * row[ca] * std::cos(row[cg]),
                                   0.5 * row[ca] * std::sin(row[cg]));
  }
  ChartOptions opt;
  opt.title = "Reduced phase portrait (alpha/2) v(sigma)";
  opt.xlabel = "m_x";
  opt.ylabel = "m_y";
  opt.equal_axes = true;
  return line_chart(series, opt);
}

std::string render_overlay_svg(
    const std::vector<std::pair<std::string, CsvTable>>& labeled) {
  if (labeled.empty()) throw ValidationError("plot: overlay needs >= 1 table");
  std::vector<Series> series;
  for (const auto& [label, table] : labeled) {
    require_rows(table);
    int cx = table.column("mean_x"), cy = table.column("mean_y");
    if (cx < 0 || cy < 0) { cx = table.column("meanmu_1"); cy = table.column("meanmu_2"); }
    if (cx < 0 || cy < 0) { cx = table.column("m_x"); cy = table.column("m_y"); }
    if (cx < 0 || cy < 0)
      throw ValidationError("plot: table `" + label +
                            "` lacks mean columns (mean_x/mean_y, "
                            "meanmu_1/meanmu_2 or m_x/m_y)");
    Series s;
    s.label = label;
    for (const auto& row : table.rows) s.pts.emplace_back(row[cx], row[cy]);
    series.push_back(std::move(s));
  }
  ChartOptions opt;
  opt.title = "Mean trajectories";
  opt.xlabel = "x";
  opt.ylabel = "y";
  opt.equal_axes = true;
  return line_chart(series, opt);
}

std::string render_phase_strip_svg(const CsvTable& table) {
  require_rows(table);
  const int ct = require_column(table, "theta");
  const int cc = require_column(table, "cos_theta_m2");
  const int cr = require_column(table, "regime");
  const int width = 640, height = 160;
  const double L = 40, R = 20, T = 40, B = 50;
  const double pw = width - L - R, ph = height - T - B;

  double tmin = table.rows.front()[ct], tmax = table.rows.back()[ct];
  if (!(tmax > tmin)) { tmin -= 0.5; tmax += 0.5; }
  auto X = [&](double th) { return L + (th - tmin) / (tmax - tmin) * pw; };

  auto color_of = [&](const std::string& regime) {
    if (regime == "converge_to_gamma") return "#7fb2d9";
    if (regime == "converge_to_random_fixed") return "#e0a3ad";
    return "#9cd0a9";  // circling
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" font-size=\"14\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\">Regimes over "
         "theta</text>\n";

  const std::size_t n = table.rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double th = table.rows[i][ct];
    const double lo = i == 0 ? th : 0.5 * (table.rows[i - 1][ct] + th);
    const double hi = i + 1 == n ? th : 0.5 * (th + table.rows[i + 1][ct]);
    svg << "<rect x=\"" << fmt(X(lo)) << "\" y=\"" << fmt(T) << "\" width=\""
        << fmt(std::max(X(hi) - X(lo), 0.5)) << "\" height=\"" << fmt(ph)
        << "\" fill=\"" << color_of(table.raw[i][cr]) << "\"/>\n";
  }
  // Mark the critical crossings of cos(theta) m2 = -1 between samples.
  for (std::size_t i = 1; i < n; ++i) {
    const double a = table.rows[i - 1][cc] + 1.0, b = table.rows[i][cc] + 1.0;
    if (a == 0.0 || (a < 0.0) == (b < 0.0)) continue;
    const double th = table.rows[i - 1][ct] +
                      (table.rows[i][ct] - table.rows[i - 1][ct]) * a / (a - b);
    svg << "<line x1=\"" << fmt(X(th)) << "\" y1=\"" << fmt(T - 4) << "\" x2=\""
        << fmt(X(th)) << "\" y2=\"" << fmt(T + ph + 4)
        << "\" stroke=\"#333\" stroke-dasharray=\"3 2\"/>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double th = tmin + i * (tmax - tmin) / 4;
    svg << "<text x=\"" << fmt(X(th)) << "\" y=\"" << fmt(T + ph + 16)
        << "\" font-size=\"10\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">" << fmt(th) << "</text>\n";
  }
  const char* names[] = {"converge_to_gamma", "converge_to_random_fixed",
                         "circling"};
  for (int i = 0; i < 3; ++i) {
    const double lx = L + i * 200;
    svg << "<rect x=\"" << fmt(lx) << "\" y=\"" << height - 24
        << "\" width=\"10\" height=\"10\" fill=\"" << color_of(names[i])
        << "\"/>\n";
    svg << "<text x=\"" << fmt(lx + 14) << "\" y=\"" << height - 15
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << names[i]
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace selfdiff
