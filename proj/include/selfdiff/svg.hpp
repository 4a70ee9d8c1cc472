#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace selfdiff {

// Loose CSV table: numeric cells parsed to double (NaN when not a number),
// raw strings kept for label columns such as the regime name.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::string>> raw;
  int column(const std::string& name) const;  // -1 when absent
  std::size_t size() const { return rows.size(); }
};

CsvTable read_csv_table(const std::string& path);

enum class PlotKind { JCurve, Portrait, Overlay, PhaseStrip };
std::optional<PlotKind> plot_kind_from(const std::string& name);
std::string plot_kind_name(PlotKind kind);

// Renderers return deterministic SVG text (fixed formatting, no timestamps)
// and throw ValidationError when the table lacks the required columns or is
// empty.

// Expects columns (alpha, J); Jprime_fd is overlaid when present.
std::string render_jcurve_svg(const CsvTable& table);

// Expects columns (start, t, alpha, sigma); draws the planar curves
// (alpha/2) v(sigma), one polyline per start.
std::string render_portrait_svg(const CsvTable& table);

// Each table contributes one labeled mean curve; accepted column pairs are
// (mean_x, mean_y), (meanmu_1, meanmu_2) or (m_x, m_y).
std::string render_overlay_svg(
    const std::vector<std::pair<std::string, CsvTable>>& labeled);

// Expects columns (theta, cos_theta_m2, regime); colors the theta axis by
// regime with the critical crossings marked.
std::string render_phase_strip_svg(const CsvTable& table);

}  // namespace selfdiff
