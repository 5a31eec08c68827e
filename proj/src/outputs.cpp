#include "fenrir/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fenrir {
namespace {

std::string fmt_g(double v, int digits = 6) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string start_field(double start) { return std::isfinite(start) ? format_double(start) : ""; }

std::string joined(const std::vector<std::string>& names, const std::vector<double>& values) {
  std::string s;
  for (size_t i = 0; i < names.size() && i < values.size(); ++i) {
    if (i) s += ';';
    s += names[i] + "=" + format_double(values[i]);
  }
  return s;
}

// Errors may contain commas or quotes; CSV-quote them.
std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void write_fits_csv(const ExperimentResult& result, std::ostream& out) {
  out << "# fenrir " << FENRIR_VERSION << " config_hash=" << result.config_hash << "\n";
  out << "kind,model,candidate,method,replicate,seed,start,status,nll,trmse,evaluations,iterations,params,"
         "abs_errors,error\n";
  const char* kind = to_string(result.config.kind);
  for (const RunRecord& r : result.records) {
    out << kind << ',' << r.model << ',' << r.candidate << ',' << to_string(r.method) << ',' << r.replicate << ','
        << r.seed << ',' << start_field(r.start) << ',' << r.status << ',' << format_double(r.nll) << ','
        << format_double(r.trmse) << ',' << r.evaluations << ',' << r.iterations << ','
        << joined(r.param_names, r.params) << ',' << joined(r.param_names, r.abs_errors) << ',' << quoted(r.error)
        << '\n';
  }
}

void write_summary_csv(const ExperimentResult& result, std::ostream& out) {
  out << "model,candidate,method,param,n,median_abs_err,q10,q90\n";
  // Groups in first-appearance order so the file order follows the records.
  std::vector<std::pair<std::string, Method>> groups;
  for (const RunRecord& r : result.records) {
    const auto key = std::make_pair(r.candidate, r.method);
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [cand, method] : groups) {
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> errors;
    std::vector<double> trmses;
    std::string model;
    for (const RunRecord& r : result.records) {
      if (r.candidate != cand || r.method != method) continue;
      model = r.model;
      for (size_t i = 0; i < r.param_names.size(); ++i) {
        if (std::find(names.begin(), names.end(), r.param_names[i]) == names.end()) names.push_back(r.param_names[i]);
        if (std::isfinite(r.abs_errors[i])) errors[r.param_names[i]].push_back(r.abs_errors[i]);
      }
      if (std::isfinite(r.trmse)) trmses.push_back(r.trmse);
    }
    auto row = [&](const std::string& param, const std::vector<double>& v) {
      out << model << ',' << cand << ',' << to_string(method) << ',' << param << ',' << v.size() << ','
          << format_double(quantile(v, 0.5)) << ',' << format_double(quantile(v, 0.1)) << ','
          << format_double(quantile(v, 0.9)) << '\n';
    };
    // Parameters without a true value (kappa) keep their row with n = 0.
    for (const std::string& n : names) row(n, errors[n]);
    row("trmse", trmses);
  }
}

void write_selection_csv(const ExperimentResult& result, std::ostream& out) {
  std::vector<std::string> cands;
  for (const RunRecord& r : result.records)
    if (std::find(cands.begin(), cands.end(), r.candidate) == cands.end()) cands.push_back(r.candidate);
  out << "replicate,seed";
  for (const auto& c : cands) out << ",nll_" << c;
  out << ",winner\n";
  for (size_t rep = 0; rep < result.winners.size(); ++rep) {
    std::uint64_t seed = 0;
    std::vector<double> nll(cands.size(), std::numeric_limits<double>::quiet_NaN());
    for (const RunRecord& r : result.records) {
      if (r.replicate != static_cast<int>(rep) || r.method != Method::Fenrir) continue;
      seed = r.seed;
      const size_t i = static_cast<size_t>(std::find(cands.begin(), cands.end(), r.candidate) - cands.begin());
      nll[i] = r.nll;
    }
    out << rep << ',' << seed;
    for (double v : nll) out << ',' << format_double(v);
    out << ',' << result.winners[rep] << '\n';
  }
}

void write_timing_csv(const ExperimentResult& result, std::ostream& out) {
  out << "kind,model,candidate,method,replicate,start,wall_time_s\n";
  const char* kind = to_string(result.config.kind);
  for (const RunRecord& r : result.records)
    out << kind << ',' << r.model << ',' << r.candidate << ',' << to_string(r.method) << ',' << r.replicate << ','
        << start_field(r.start) << ',' << fmt_g(r.wall_time) << '\n';
}

std::string svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, const std::vector<Band>& bands, double x_marker) {
  constexpr double W = 720, H = 440, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto extend = [](double v, double& lo, double& hi) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& s : series) {
    for (double v : s.x) extend(v, x0, x1);
    for (double v : s.y) extend(v, y0, y1);
  }
  for (const auto& b : bands) {
    for (double v : b.x) extend(v, x0, x1);
    for (double v : b.lower) extend(v, y0, y1);
    for (double v : b.upper) extend(v, y0, y1);
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << fmt_g(xv, 4) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << fmt_g(yv, 4) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\">" << xml_escape(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">" << xml_escape(y_label)
    << "</text>\n";

  for (const auto& b : bands) {
    o << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < b.x.size(); ++i) o << fmt_g(px(b.x[i])) << ',' << fmt_g(py(b.upper[i])) << ' ';
    for (size_t i = b.x.size(); i-- > 0;) o << fmt_g(px(b.x[i])) << ',' << fmt_g(py(b.lower[i])) << ' ';
    o << "\"/>\n";
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colours[k % 5];
    if (s.markers) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << fmt_g(px(s.x[i])) << "\" cy=\"" << fmt_g(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << c
          << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i])) o << fmt_g(px(s.x[i])) << ',' << fmt_g(py(s.y[i])) << ' ';
      o << "\"/>\n";
    }
    o << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 16 * k << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"12\" fill=\"" << c << "\">" << xml_escape(s.label) << "</text>\n";
  }
  if (std::isfinite(x_marker) && x_marker >= x0 && x_marker <= x1) {
    o << "<line x1=\"" << fmt_g(px(x_marker)) << "\" x2=\"" << fmt_g(px(x_marker)) << "\" y1=\"" << T << "\" y2=\""
      << H - B << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_outputs(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());

  std::ostringstream fits, summary, timing;
  write_fits_csv(result, fits);
  write_summary_csv(result, summary);
  write_timing_csv(result, timing);
  write_file(root / "fits.csv", fits.str());
  write_file(root / "summary.csv", summary.str());
  write_file(root / "timing.csv", timing.str());
  write_file(root / "config.json", config_json(result.config) + "\n");
  if (result.config.kind == ExperimentKind::ModelSelect) {
    std::ostringstream sel;
    write_selection_csv(result, sel);
    write_file(root / "selection.csv", sel.str());
  }
  if (!result.plots.empty()) {
    fs::create_directories(root / "plots", ec);
    if (ec) throw Error("cannot create plot directory: " + ec.message());
    for (const Plot& p : result.plots) write_file(root / "plots" / p.file, p.svg);
  }
}

}  // namespace fenrir
