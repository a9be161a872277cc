#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "taskbench/metg.hpp"

namespace taskbench {

// One row of benchmark output: one configuration at one ladder point.
struct SweepRecord {
  std::string executor;
  std::size_t workers = 1;
  std::string pattern;
  std::int64_t radix = 0;
  std::string kernel;
  std::uint64_t iterations = 0;
  std::uint64_t span_bytes = 0;
  std::uint64_t scratch_bytes = 0;
  double imbalance = 0.0;
  std::size_t graphs = 1;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::size_t output_bytes = 0;
  std::size_t rep_count = 0;
  double mean_wall_s = 0.0;
  double stddev_wall_s = 0.0;
  std::uint64_t num_tasks = 0;
  double attributed_work = 0.0;
  double perf = 0.0;
  double efficiency = 0.0;
  double granularity_us = 0.0;

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

inline constexpr std::array<std::string_view, 21> kRecordColumns = {
    "executor",     "workers",       "pattern",    "radix",         "kernel",
    "iterations",   "span_bytes",    "scratch_bytes", "imbalance",  "graphs",
    "width",        "height",        "output_bytes",  "rep_count",  "mean_wall_s",
    "stddev_wall_s", "num_tasks",    "attributed_work", "perf",     "efficiency",
    "granularity_us"};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline SweepRecord make_record(const ExecutorConfig& config, const TaskGraphSpec& tmpl,
                               std::size_t graphs, std::uint64_t iterations, const RunResult& run,
                               double efficiency) {
  SweepRecord r;
  r.executor = std::string(to_string(config.kind));
  r.workers = run.num_cores;
  r.pattern = std::string(to_string(tmpl.pattern.kind));
  r.radix = tmpl.pattern.radix;
  r.kernel = std::string(to_string(tmpl.kernel.kind));
  r.iterations = iterations;
  r.span_bytes = tmpl.kernel.span_bytes;
  r.scratch_bytes = tmpl.kernel.scratch_bytes;
  r.imbalance = tmpl.kernel.imbalance;
  r.graphs = graphs;
  r.width = tmpl.width;
  r.height = tmpl.height;
  r.output_bytes = tmpl.output_bytes;
  r.rep_count = run.wall_time_s.size();
  r.mean_wall_s = run.mean_wall_time_s;
  r.stddev_wall_s = run.stddev_wall_time_s;
  r.num_tasks = run.num_tasks;
  r.attributed_work = run.attributed_work;
  r.perf = run.perf;
  r.efficiency = efficiency;
  r.granularity_us = run.task_granularity_us;
  return r;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), end);
}

template <typename T>
T parse_number(std::string_view text, std::string_view column) {
  T v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw SchemaError("column '" + std::string(column) + "': cannot parse '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline std::string csv_header() {
  std::string h;
  for (std::size_t k = 0; k < kRecordColumns.size(); ++k) {
    if (k) h += ',';
    h += kRecordColumns[k];
  }
  return h;
}

inline std::string to_csv_row(const SweepRecord& r) {
  using detail::format_double;
  std::ostringstream os;
  os << r.executor << ',' << r.workers << ',' << r.pattern << ',' << r.radix << ',' << r.kernel
     << ',' << r.iterations << ',' << r.span_bytes << ',' << r.scratch_bytes << ','
     << format_double(r.imbalance) << ',' << r.graphs << ',' << r.width << ',' << r.height << ','
     << r.output_bytes << ',' << r.rep_count << ',' << format_double(r.mean_wall_s) << ','
     << format_double(r.stddev_wall_s) << ',' << r.num_tasks << ','
     << format_double(r.attributed_work) << ',' << format_double(r.perf) << ','
     << format_double(r.efficiency) << ',' << format_double(r.granularity_us);
  return os.str();
}

inline void write_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

// Parses output of write_csv. The header must match kRecordColumns exactly.
inline std::vector<SweepRecord> read_csv(std::istream& is) {
  using detail::parse_number;
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty CSV: missing header row");
  const auto header = detail::split_csv_line(line);
  for (std::size_t k = 0; k < kRecordColumns.size(); ++k) {
    if (k >= header.size()) throw SchemaError("missing column '" + std::string(kRecordColumns[k]) + "'");
    if (header[k] != kRecordColumns[k]) {
      throw SchemaError("column " + std::to_string(k) + ": expected '" +
                        std::string(kRecordColumns[k]) + "', found '" + header[k] + "'");
    }
  }
  if (header.size() != kRecordColumns.size()) {
    throw SchemaError("unexpected column '" + header[kRecordColumns.size()] + "'");
  }
  std::vector<SweepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != kRecordColumns.size()) {
      throw SchemaError("row " + std::to_string(out.size() + 1) + ": expected " +
                        std::to_string(kRecordColumns.size()) + " fields, found " +
                        std::to_string(f.size()));
    }
    SweepRecord r;
    std::size_t c = 0;
    auto col = [&] { return kRecordColumns[c]; };
    r.executor = f[c++];
    r.workers = parse_number<std::size_t>(f[c], col()); ++c;
    r.pattern = f[c++];
    r.radix = parse_number<std::int64_t>(f[c], col()); ++c;
    r.kernel = f[c++];
    r.iterations = parse_number<std::uint64_t>(f[c], col()); ++c;
    r.span_bytes = parse_number<std::uint64_t>(f[c], col()); ++c;
    r.scratch_bytes = parse_number<std::uint64_t>(f[c], col()); ++c;
    r.imbalance = parse_number<double>(f[c], col()); ++c;
    r.graphs = parse_number<std::size_t>(f[c], col()); ++c;
    r.width = parse_number<std::int64_t>(f[c], col()); ++c;
    r.height = parse_number<std::int64_t>(f[c], col()); ++c;
    r.output_bytes = parse_number<std::size_t>(f[c], col()); ++c;
    r.rep_count = parse_number<std::size_t>(f[c], col()); ++c;
    r.mean_wall_s = parse_number<double>(f[c], col()); ++c;
    r.stddev_wall_s = parse_number<double>(f[c], col()); ++c;
    r.num_tasks = parse_number<std::uint64_t>(f[c], col()); ++c;
    r.attributed_work = parse_number<double>(f[c], col()); ++c;
    r.perf = parse_number<double>(f[c], col()); ++c;
    r.efficiency = parse_number<double>(f[c], col()); ++c;
    r.granularity_us = parse_number<double>(f[c], col()); ++c;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SweepRecord& r) {
  j = nlohmann::json{{"executor", r.executor},
                     {"workers", r.workers},
                     {"pattern", r.pattern},
                     {"radix", r.radix},
                     {"kernel", r.kernel},
                     {"iterations", r.iterations},
                     {"span_bytes", r.span_bytes},
                     {"scratch_bytes", r.scratch_bytes},
                     {"imbalance", r.imbalance},
                     {"graphs", r.graphs},
                     {"width", r.width},
                     {"height", r.height},
                     {"output_bytes", r.output_bytes},
                     {"rep_count", r.rep_count},
                     {"mean_wall_s", r.mean_wall_s},
                     {"stddev_wall_s", r.stddev_wall_s},
                     {"num_tasks", r.num_tasks},
                     {"attributed_work", r.attributed_work},
                     {"perf", r.perf},
                     {"efficiency", r.efficiency},
                     {"granularity_us", r.granularity_us}};
}

inline void from_json(const nlohmann::json& j, SweepRecord& r) {
  j.at("executor").get_to(r.executor);
  j.at("workers").get_to(r.workers);
  j.at("pattern").get_to(r.pattern);
  j.at("radix").get_to(r.radix);
  j.at("kernel").get_to(r.kernel);
  j.at("iterations").get_to(r.iterations);
  j.at("span_bytes").get_to(r.span_bytes);
  j.at("scratch_bytes").get_to(r.scratch_bytes);
  j.at("imbalance").get_to(r.imbalance);
  j.at("graphs").get_to(r.graphs);
  j.at("width").get_to(r.width);
  j.at("height").get_to(r.height);
  j.at("output_bytes").get_to(r.output_bytes);
  j.at("rep_count").get_to(r.rep_count);
  j.at("mean_wall_s").get_to(r.mean_wall_s);
  j.at("stddev_wall_s").get_to(r.stddev_wall_s);
  j.at("num_tasks").get_to(r.num_tasks);
  j.at("attributed_work").get_to(r.attributed_work);
  j.at("perf").get_to(r.perf);
  j.at("efficiency").get_to(r.efficiency);
  j.at("granularity_us").get_to(r.granularity_us);
}

inline nlohmann::json to_json(const CurvePoint& p) {
  return {{"granularity_us", p.granularity_us}, {"efficiency", p.efficiency}};
}

// {threshold, metg_us, status, bracket}; metg_us and bracket are null when
// the threshold is unreachable.
inline nlohmann::json to_json(const MetgResult& m) {
  nlohmann::json j;
  j["threshold"] = m.threshold;
  j["metg_us"] = m.metg_us ? nlohmann::json(*m.metg_us) : nlohmann::json(nullptr);
  j["status"] = std::string(to_string(m.status));
  if (m.bracket) {
    j["bracket"] = {{"above", to_json(m.bracket->above)},
                    {"below", to_json(m.bracket->below)},
                    {"censored", m.bracket->censored}};
  } else {
    j["bracket"] = nullptr;
  }
  return j;
}

inline nlohmann::json to_json(const ScalingPrediction& p) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& pt : p.points) {
    j["points"].push_back({{"cores", pt.cores},
                           {"limit_s", pt.limit_s},
                           {"ideal_s", pt.ideal_s},
                           {"actual_s", pt.actual_s ? nlohmann::json(*pt.actual_s) : nlohmann::json(nullptr)}});
  }
  auto isect = [](const std::optional<ScalingIntersection>& x) {
    return x ? nlohmann::json{{"cores", x->cores}, {"time_s", x->time_s}} : nlohmann::json(nullptr);
  };
  j["ideal_limit"] = isect(p.ideal_limit);
  j["actual_limit"] = isect(p.actual_limit);
  j["node_separation"] = p.node_separation ? nlohmann::json(*p.node_separation) : nlohmann::json(nullptr);
  j["time_separation"] = p.time_separation ? nlohmann::json(*p.time_separation) : nlohmann::json(nullptr);
  return j;
}

}  // namespace taskbench
