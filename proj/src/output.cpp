#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "gafocus/harness.hpp"

namespace gafocus {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::logic_error("format_double failed");
  return std::string(buf, ptr);
}

// ------------------------------------------------------------------ summary

RunSummary summarize(const RunTrace& trace, std::optional<std::uint64_t> seed) {
  trace.validate();
  const auto eta = convergence_efficiency(trace);
  const std::uint64_t n_g = effective_n_g(trace);
  const std::uint64_t k = optimal_stop(trace);
  const TraceRecord& at_k = trace.records[k - 1];

  RunSummary s;
  s.final_zeta = trace.records.back().enhancement;
  s.max_eta = *std::max_element(eta.begin(), eta.end());
  s.k_star = k;
  s.f_at_k_star = at_k.enhancement / trace.records[n_g - 1].enhancement;
  s.total_measurements = trace.records.back().cum_measurements;
  s.model_time_at_k_star_us = at_k.model_time_us;
  s.seed = seed;
  return s;
}

nlohmann::ordered_json RunSummary::to_json() const {
  nlohmann::ordered_json j;
  j["final_zeta"] = final_zeta;
  j["max_eta"] = max_eta;
  j["k_star"] = k_star;
  j["f_at_k_star"] = f_at_k_star;
  j["total_measurements"] = total_measurements;
  j["model_time_at_k_star_us"] =
      model_time_at_k_star_us ? nlohmann::ordered_json(*model_time_at_k_star_us) : nullptr;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nullptr;
  return j;
}

RunSummary RunSummary::from_json(const nlohmann::json& j) {
  RunSummary s;
  try {
    s.final_zeta = j.at("final_zeta").get<double>();
    s.max_eta = j.at("max_eta").get<double>();
    s.k_star = j.at("k_star").get<std::uint64_t>();
    s.f_at_k_star = j.at("f_at_k_star").get<double>();
    s.total_measurements = j.at("total_measurements").get<std::uint64_t>();
    if (const auto& t = j.at("model_time_at_k_star_us"); !t.is_null()) {
      s.model_time_at_k_star_us = t.get<double>();
    }
    if (const auto& sd = j.at("seed"); !sd.is_null()) s.seed = sd.get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed summary: ") + e.what());
  }
  return s;
}

// ------------------------------------------------------------------ trace CSV

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.best_digitized << ',' << format_double(r.best_intensity) << ','
        << format_double(r.enhancement) << ',' << r.mutation_rate_num << ','
        << r.cum_measurements << ',';
    if (r.model_time_us) out << format_double(*r.model_time_us);
    out << '\n';
  }
}

namespace {

template <class T>
T field_as(const std::string& text, std::size_t row, const char* name) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw TraceParseError("trace row " + std::to_string(row) + ": bad " + name + " '" + text +
                          "'");
  }
  return v;
}

}  // namespace

RunTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceParseError("trace row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw TraceParseError("trace row 1: unexpected header '" + line + "'");

  RunTrace trace;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) {
      throw TraceParseError("trace row " + std::to_string(row) + ": expected 7 fields, got " +
                            std::to_string(f.size()));
    }
    TraceRecord r;
    r.iteration = field_as<std::uint64_t>(f[0], row, "iteration");
    r.best_digitized = field_as<std::uint64_t>(f[1], row, "best_digitized");
    r.best_intensity = field_as<double>(f[2], row, "best_intensity");
    r.enhancement = field_as<double>(f[3], row, "enhancement");
    r.mutation_rate_num = field_as<std::uint32_t>(f[4], row, "mutation_rate_num");
    r.cum_measurements = field_as<std::uint64_t>(f[5], row, "cum_measurements");
    if (!f[6].empty()) r.model_time_us = field_as<double>(f[6], row, "model_time_us");
    if (r.iteration != trace.records.size() + 1) {
      throw TraceParseError("trace row " + std::to_string(row) + ": expected iteration " +
                            std::to_string(trace.records.size() + 1) + ", got " +
                            std::to_string(r.iteration));
    }
    if (!(r.enhancement >= 0.0) || !std::isfinite(r.enhancement)) {
      throw TraceParseError("trace row " + std::to_string(row) + ": enhancement must be >= 0");
    }
    trace.records.push_back(r);
  }
  if (trace.records.empty()) throw TraceParseError("trace has no iteration rows");

  trace.baseline = 1.0;
  for (const auto& r : trace.records) {
    if (r.enhancement > 0.0 && r.best_intensity > 0.0) {
      trace.baseline = r.best_intensity / r.enhancement;
      break;
    }
  }
  return trace;
}

// ------------------------------------------------------------------ files

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move into place '" + path.string() + "'");
  }
}

void append_log(const std::filesystem::path& dir, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream log(dir / "gafocus.log", std::ios::app);
  if (!log) return;  // logging never fails a command
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  log << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << ' ' << message << '\n';
}

// ------------------------------------------------------------------ SVG

std::string svg_line_plot(const std::string& title, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
  static const char* const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                       "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::size_t n = 1;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  lo = std::min(lo, 0.0);
  if (hi <= lo) hi = lo + 1.0;
  const double pw = W - L - R, ph = H - T - B;
  auto x_of = [&](std::size_t i) { return L + pw * (n > 1 ? double(i) / double(n - 1) : 0.0); };
  auto y_of = [&](double v) { return T + ph * (1.0 - (v - lo) / (hi - lo)); };
  auto f = [](double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(2) << v;
    return o.str();
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << L << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n"
    << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    o << "<text x=\"" << L - 6 << "\" y=\"" << f(y_of(v) + 4) << "\" text-anchor=\"end\">"
      << format_double(std::round(v * 1000.0) / 1000.0) << "</text>\n";
  }
  o << "<text x=\"" << L << "\" y=\"" << H - 18 << "\">1</text>\n"
    << "<text x=\"" << L + pw << "\" y=\"" << H - 18 << "\" text-anchor=\"end\">" << n
    << "</text>\n"
    << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 8
    << "\" text-anchor=\"middle\">iteration</text>\n"
    << "<text x=\"16\" y=\"" << T + ph / 2 << "\" transform=\"rotate(-90 16 " << T + ph / 2
    << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* c = colors[k % std::size(colors)];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].y.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      o << f(x_of(i)) << ',' << f(y_of(series[k].y[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = T + 16.0 + 18.0 * double(k);
    o << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << L + pw + 32
      << "\" y2=\"" << ly - 4 << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly << "\">" << series[k].name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace gafocus
