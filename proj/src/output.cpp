#include "qtree/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qtree/error.hpp"

namespace qtree {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return csv_field(std::get<std::string>(c));
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

struct PlotSpec {
  const char* x;
  const char* y;
  const char* group;  // nullptr: single series
  bool log_x;
};

PlotSpec plot_spec(PlotKind kind) {
  switch (kind) {
    case PlotKind::density:
      return {"E", "rho", nullptr, false};
    case PlotKind::gamma_vs_eta:
      return {"eta", "gamma_hat", "lambda", true};
    case PlotKind::exceedance_vs_lambda:
      return {"lambda", "exceedance", "eta", false};
  }
  return {"x", "y", nullptr, false};
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, std::size_t col) const {
  const Cell& c = rows.at(row).at(col);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return NAN;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += csv_field(table.columns[j]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += cell_text(row[j]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

std::string render_svg(const Table& table, PlotKind kind) {
  if (table.rows.empty()) throw ValidationError("plot: empty table");
  const PlotSpec ps = plot_spec(kind);
  const std::size_t xc = table.column(ps.x);
  const std::size_t yc = table.column(ps.y);
  const bool has_status =
      std::find(table.columns.begin(), table.columns.end(), "status") != table.columns.end();
  const std::size_t sc = has_status ? table.column("status") : 0;

  // Series keyed by the group value, in order of first appearance.
  std::vector<double> keys;
  std::map<double, std::vector<std::pair<double, double>>> series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (has_status) {
      const auto* s = std::get_if<std::string>(&table.rows[r][sc]);
      if (s != nullptr && *s != "ok") continue;
    }
    double x = table.number(r, xc);
    const double y = table.number(r, yc);
    if (ps.log_x) x = x > 0.0 ? std::log10(x) : NAN;
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    const double g = ps.group ? table.number(r, table.column(ps.group)) : 0.0;
    if (!series.count(g)) keys.push_back(g);
    series[g].emplace_back(x, y);
  }

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& [g, pts] : series) {
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  const double W = 640, H = 400, ml = 70, mr = 20, mt = 20, mb = 50;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
  auto f2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  const std::string xlab = ps.log_x ? std::string("log10 ") + ps.x : ps.x;
  svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">" << xlab << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 " << (mt + H - mb) / 2
      << ")\">" << ps.y << "</text>\n";
  svg << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\">" << short_num(x0)
      << "</text>\n";
  svg << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16
      << "\" text-anchor=\"end\" font-size=\"11\">" << short_num(x1) << "</text>\n";
  svg << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb
      << "\" text-anchor=\"end\" font-size=\"11\">" << short_num(y0) << "</text>\n";
  svg << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 10
      << "\" text-anchor=\"end\" font-size=\"11\">" << short_num(y1) << "</text>\n";

  std::size_t idx = 0;
  for (double g : keys) {
    const auto& pts = series[g];
    const char* color = kColors[idx++ % (sizeof kColors / sizeof kColors[0])];
    if (pts.size() == 1) {
      svg << "<circle cx=\"" << f2(px(pts[0].first)) << "\" cy=\"" << f2(py(pts[0].second))
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k) svg << ' ';
        svg << f2(px(pts[k].first)) << ',' << f2(py(pts[k].second));
      }
      svg << "\"/>\n";
    }
    if (ps.group) {
      svg << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 14 * idx
          << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << ps.group << '='
          << short_num(g) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plotdata(const Table& table, PlotKind kind, const std::string& path) {
  write_text(path, render_svg(table, kind));
}

}  // namespace qtree
