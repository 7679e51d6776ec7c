#include "devsplit/export.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "devsplit/errors.hpp"

namespace devsplit::bench {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string trace_csv_header(int dim, bool diagnostics) {
  std::string h = "n,dist,fp_res";
  for (int i = 0; i < dim; ++i) h += ",p_" + std::to_string(i);
  for (int i = 0; i < dim; ++i) h += ",y_" + std::to_string(i);
  if (diagnostics) h += ",V,ell,delta";
  return h;
}

std::string trace_csv_row(const TraceRow& row, bool diagnostics) {
  std::string s = std::to_string(row.n);
  s += ',' + format_double(row.dist);
  s += ',' + format_double(row.fp_res);
  for (double v : row.p) s += ',' + format_double(v);
  for (double v : row.y) s += ',' + format_double(v);
  if (diagnostics) {
    for (const auto& opt : {row.V, row.ell, row.delta}) {
      s += ',';
      if (opt) s += format_double(*opt);
    }
  }
  return s;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int dim,
                     bool diagnostics) {
  os << trace_csv_header(dim, diagnostics) << '\n';
  for (const auto& row : trace) os << trace_csv_row(row, diagnostics) << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "param,iterations,converged\n";
  for (const auto& row : result.rows) {
    os << format_double(row.value) << ',' << row.iterations << ',' << (row.converged ? 1 : 0)
       << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

const std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                              "#bcbd22", "#17becf"};

std::string num(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6g", v);
  return buf.data();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void finalize() {
    if (!std::isfinite(x0)) { x0 = 0.0; x1 = 1.0; y0 = 0.0; y1 = 1.0; }
    if (x1 - x0 <= 0.0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 <= 0.0) { y0 -= 0.5; y1 += 0.5; }
  }
};

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series, SvgMode mode,
                       const std::string& title) {
  std::vector<std::vector<std::pair<double, double>>> points(series.size());
  Bounds b;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (const auto& row : series[s].rows) {
      double x = 0.0;
      double y = 0.0;
      if (mode == SvgMode::trajectory) {
        if (row.p.size() != 2) {
          throw UsageError("trajectory plots need two-dimensional iterates, got dimension " +
                           std::to_string(row.p.size()));
        }
        x = row.p(0);
        y = row.p(1);
      } else {
        if (!(row.dist > 0.0) || !std::isfinite(row.dist)) continue;
        x = static_cast<double>(row.n);
        y = std::log10(row.dist);
      }
      points[s].emplace_back(x, y);
      b.add(x, y);
    }
  }
  b.finalize();
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto sx = [&](double x) { return kMargin + (x - b.x0) / (b.x1 - b.x0) * pw; };
  auto sy = [&](double y) { return kHeight - kMargin - (y - b.y0) / (b.y1 - b.y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
  }
  os << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kHeight - kMargin) << "\" x2=\""
     << num(kWidth - kMargin) << "\" y2=\"" << num(kHeight - kMargin) << "\"/>\n"
     << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(kMargin)
     << "\" y2=\"" << num(kHeight - kMargin) << "\"/>\n</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = b.x0 + (b.x1 - b.x0) * i / 4.0;
    const double fy = b.y0 + (b.y1 - b.y0) * i / 4.0;
    os << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(kHeight - kMargin + 16)
       << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
    os << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(sy(fy) + 4)
       << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  const char* xlabel = mode == SvgMode::trajectory ? "p_0" : "n";
  const char* ylabel = mode == SvgMode::trajectory ? "p_1" : "log10 dist";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 12)
     << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(kHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << num(kHeight / 2) << ")\">" << ylabel << "</text>\n</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPalette.size()];
    if (!points[s].empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < points[s].size(); ++i) {
        if (i) os << ' ';
        os << num(sx(points[s][i].first)) << ',' << num(sy(points[s][i].second));
      }
      os << "\"/>\n";
    }
    const double ly = kMargin + 14.0 * static_cast<double>(s);
    os << "<line x1=\"" << num(kWidth - kMargin - 90) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(kWidth - kMargin - 70) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(kWidth - kMargin - 66) << "\" y=\"" << num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[s].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void export_svg(const std::string& path, const std::vector<SvgSeries>& series, SvgMode mode,
                const std::string& title) {
  const std::string svg = render_svg(series, mode, title);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << svg;
}

}  // namespace devsplit::bench
