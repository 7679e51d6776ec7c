#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "devsplit/bench.hpp"
#include "devsplit/engine.hpp"

namespace devsplit::bench {

/// Shortest round-trip text for a double: 17 significant digits.
std::string format_double(double v);

/// Header: n,dist,fp_res,p_0..p_{d-1},y_0..y_{d-1}[,V,ell,delta].
/// Diagnostic columns are emitted when `diagnostics` is true; missing values
/// are written as empty fields.
std::string trace_csv_header(int dim, bool diagnostics);
std::string trace_csv_row(const TraceRow& row, bool diagnostics);
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int dim,
                     bool diagnostics);

/// Header: param,iterations,converged
void write_sweep_csv(std::ostream& os, const SweepResult& result);

enum class SvgMode { trajectory, distance };

struct SvgSeries {
  std::string label;
  std::vector<TraceRow> rows;
};

/// Standalone SVG; deterministic for fixed input. Trajectory mode plots
/// (p_0, p_1) and needs two-dimensional iterates; distance mode plots
/// log10 ||p_n - x_star|| against n. Empty input gives empty axes.
std::string render_svg(const std::vector<SvgSeries>& series, SvgMode mode,
                       const std::string& title = "");
void export_svg(const std::string& path, const std::vector<SvgSeries>& series, SvgMode mode,
                const std::string& title = "");

}  // namespace devsplit::bench
