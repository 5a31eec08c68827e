#pragma once

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "fenrir/bench.hpp"

namespace fenrir {

/// "%.17g", which round-trips every double; "inf", "-inf" and "nan" for
/// non-finite values.
std::string format_double(double v);

/// Linear-interpolation (type 7) quantile of unsorted finite values; NaN
/// when empty.
double quantile(std::vector<double> values, double q);

/// One row per fit. Header line `# fenrir <version> config_hash=<hex>`, then
/// the column names
///   kind,model,candidate,method,replicate,seed,start,status,nll,trmse,
///   evaluations,iterations,params,abs_errors,error
/// where params and abs_errors are `name=value` lists joined by ';'. Wall
/// times are kept out of this file so it is byte-reproducible.
void write_fits_csv(const ExperimentResult& result, std::ostream& out);

/// Per (candidate, method, parameter): count of finite errors, median and
/// 10% / 90% quantiles of the absolute error. A final row per (candidate,
/// method) with param = "trmse" summarises the tRMSE itself.
///   model,candidate,method,param,n,median_abs_err,q10,q90
void write_summary_csv(const ExperimentResult& result, std::ostream& out);

/// replicate,seed,<candidate NLL columns...>,winner
void write_selection_csv(const ExperimentResult& result, std::ostream& out);

/// kind,model,candidate,method,replicate,start,wall_time_s
void write_timing_csv(const ExperimentResult& result, std::ostream& out);

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool markers = false;  ///< scatter instead of a line
};

struct Band {
  std::vector<double> x, lower, upper;
};

/// Static SVG line chart with optional shaded bands and a vertical marker.
std::string svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, const std::vector<Band>& bands = {},
                      double x_marker = std::numeric_limits<double>::quiet_NaN());

/// Writes fits.csv, summary.csv, timing.csv, config.json, selection.csv (model
/// selection only) and the SVG plots into `dir`, creating it. Throws Error
/// when the directory cannot be written.
void emit_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace fenrir
