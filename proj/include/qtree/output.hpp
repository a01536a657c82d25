#pragma once

// CSV tables and static SVG plots.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace qtree {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

/// 17 significant digits, so every double round-trips.
std::string format_double(double x);

std::string to_csv(const Table& table);
void write_text(const std::string& path, const std::string& text);

enum class PlotKind { density, gamma_vs_eta, exceedance_vs_lambda };

/// Self-contained SVG. One polyline per series (one marker for a single
/// point). Rows whose plotted values are not finite are skipped.
std::string render_svg(const Table& table, PlotKind kind);

void emit_plotdata(const Table& table, PlotKind kind, const std::string& path);

}  // namespace qtree
