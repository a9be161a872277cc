// taskbench: run task graphs, sweep problem sizes, extract METG.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "taskbench/taskbench.hpp"

namespace tb = taskbench;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitDeadlock = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string executor = "serial";
  std::size_t workers = 1;
  bool no_steal = false;
  std::size_t channel_capacity = 4;
  std::string pattern = "stencil";
  std::int64_t radix = 3;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  std::string kernel = "compute";
  std::uint64_t iterations = 1024;
  std::uint64_t span = 4096;
  std::uint64_t scratch = 1 << 20;
  double imbalance = 0.0;
  std::size_t graphs = 1;
  std::int64_t width = 0;  // 0: one column per worker
  std::int64_t steps = 100;
  std::size_t output_bytes = 16;
  std::size_t reps = 5;
  std::size_t warmup = 1;
  std::string ladder;
  std::optional<double> threshold;
  std::string format = "csv";
  std::string out;
  bool no_validate = false;
  std::optional<double> peak_perf;
  std::size_t watchdog_ms = 30000;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--executor", o.executor, "serial | forkjoin | csp | dataflow")->capture_default_str();
  app->add_option("--workers", o.workers, "worker threads (TASKBENCH_THREADS overrides)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_flag("--no-steal", o.no_steal, "dataflow: disable work stealing");
  app->add_option("--channel-capacity", o.channel_capacity, "csp: messages per edge, 0 = unbounded")
      ->capture_default_str();
  app->add_option("--pattern", o.pattern,
                  "trivial | stencil | fft | sweep | tree | random | nearest | spread")
      ->capture_default_str();
  app->add_option("--radix", o.radix, "dependencies per task (nearest, spread)")->capture_default_str();
  app->add_option("--fraction", o.fraction, "edge probability (random)")->capture_default_str();
  app->add_option("--seed", o.seed, "seed for random edges and imbalance")->capture_default_str();
  app->add_option("--kernel", o.kernel, "compute | memory | empty")->capture_default_str();
  app->add_option("--iter", o.iterations, "kernel iterations per task")->capture_default_str();
  app->add_option("--span", o.span, "memory kernel: bytes per iteration")->capture_default_str();
  app->add_option("--scratch", o.scratch, "memory kernel: working set bytes")->capture_default_str();
  app->add_option("--imbalance", o.imbalance, "load imbalance degree in [0, 1]")->capture_default_str();
  app->add_option("--graphs", o.graphs, "concurrent copies of the graph")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--width", o.width, "columns (default: workers)");
  app->add_option("--steps", o.steps, "timesteps")->capture_default_str();
  app->add_option("--output-bytes", o.output_bytes, "bytes per task output, >= 16")->capture_default_str();
  app->add_option("--reps", o.reps, "timed runs")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--warmup", o.warmup, "untimed runs")->capture_default_str();
  app->add_option("--ladder", o.ladder,
                  "iteration counts, comma separated and decreasing; a single value N means "
                  "powers of two from N down to 1 (default: calibrated)");
  app->add_option("--threshold", o.threshold, "METG efficiency threshold in (0, 1)");
  app->add_option("--format", o.format, "csv | json")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--out", o.out, "write output to FILE instead of stdout");
  app->add_flag("--no-validate", o.no_validate, "skip payload validation");
  app->add_option("--peak-perf", o.peak_perf, "normalise efficiency against this work/s");
  app->add_option("--watchdog-ms", o.watchdog_ms, "deadlock watchdog")->capture_default_str();
}

void apply_environment(Options& o) {
  if (const char* env = std::getenv("TASKBENCH_THREADS"); env && *env) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(env, &pos);
      if (pos != std::string(env).size() || v < 1) throw std::invalid_argument(env);
      o.workers = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("TASKBENCH_THREADS must be a positive integer, got '") + env + "'");
    }
  }
}

tb::ExecutorConfig make_config(const Options& o) {
  auto kind = tb::parse_executor_kind(o.executor);
  if (!kind) throw UsageError("unknown executor '" + o.executor + "'");
  tb::ExecutorConfig c;
  c.kind = *kind;
  c.workers = *kind == tb::ExecutorKind::Serial ? 1 : o.workers;
  c.steal = !o.no_steal;
  c.channel_capacity = o.channel_capacity;
  c.watchdog = std::chrono::milliseconds(o.watchdog_ms);
  return c;
}

tb::TaskGraphSpec make_template(const Options& o) {
  auto pk = tb::parse_pattern_kind(o.pattern);
  if (!pk) throw UsageError("unknown pattern '" + o.pattern + "'");
  auto kk = tb::parse_kernel_kind(o.kernel);
  if (!kk) throw UsageError("unknown kernel '" + o.kernel + "'");
  tb::TaskGraphSpec s;
  s.width = o.width > 0 ? o.width : static_cast<std::int64_t>(o.workers);
  s.height = o.steps;
  s.pattern.kind = *pk;
  s.pattern.radix = o.radix;
  s.pattern.fraction = o.fraction;
  s.pattern.seed = o.seed;
  s.kernel.kind = *kk;
  s.kernel.iterations = *kk == tb::KernelKind::Empty ? 0 : o.iterations;
  if (*kk == tb::KernelKind::Memory) {
    s.kernel.span_bytes = o.span;
    s.kernel.scratch_bytes = o.scratch;
  }
  s.kernel.imbalance = o.imbalance;
  s.kernel.seed = o.seed;
  s.output_bytes = o.output_bytes;
  try {
    tb::validate(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

std::vector<std::uint64_t> make_ladder(const Options& o, const tb::KernelSpec& kernel) {
  if (kernel.kind == tb::KernelKind::Empty) throw UsageError("efficiency undefined for empty tasks");
  if (o.ladder.empty()) return tb::power_of_two_ladder(tb::calibrate_top_iterations(kernel));
  std::vector<std::uint64_t> ladder;
  std::stringstream ss(o.ladder);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(item, &pos);
      if (pos != item.size() || v == 0) throw std::invalid_argument(item);
      ladder.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--ladder: bad iteration count '" + item + "'");
    }
  }
  if (ladder.size() == 1) return tb::power_of_two_ladder(ladder.front());
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    if (ladder[k] >= ladder[k - 1]) throw UsageError("--ladder must be strictly decreasing");
  }
  return ladder;
}

tb::SweepOptions sweep_options(const Options& o) {
  tb::SweepOptions s;
  s.graphs = o.graphs;
  s.validate = !o.no_validate;
  s.warmup_runs = o.warmup;
  s.timed_runs = o.reps;
  s.peak_override = o.peak_perf;
  return s;
}

double threshold_of(const Options& o) {
  const double th = o.threshold.value_or(0.5);
  if (!(th > 0.0 && th < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
  return th;
}

json config_json(const Options& o, const tb::ExecutorConfig& c, const tb::TaskGraphSpec& s) {
  return {{"executor", std::string(tb::to_string(c.kind))},
          {"workers", c.workers},
          {"steal", c.steal},
          {"channel_capacity", c.channel_capacity},
          {"pattern", std::string(tb::to_string(s.pattern.kind))},
          {"radix", s.pattern.radix},
          {"fraction", s.pattern.fraction},
          {"seed", o.seed},
          {"kernel", std::string(tb::to_string(s.kernel.kind))},
          {"iterations", s.kernel.iterations},
          {"span_bytes", s.kernel.span_bytes},
          {"scratch_bytes", s.kernel.scratch_bytes},
          {"imbalance", s.kernel.imbalance},
          {"graphs", o.graphs},
          {"width", s.width},
          {"height", s.height},
          {"output_bytes", s.output_bytes},
          {"reps", o.reps},
          {"warmup", o.warmup},
          {"validate", !o.no_validate}};
}

// Writes either CSV records (summary objects go to stderr) or one JSON
// document {config, records[], ...extras}.
void emit(const Options& o, json config, const std::vector<tb::SweepRecord>& records, json extras) {
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw std::runtime_error("cannot open '" + o.out + "' for writing");
  }
  std::ostream& os = o.out.empty() ? std::cout : file;
  if (o.format == "csv") {
    tb::write_csv(os, records);
    if (!extras.empty()) std::cerr << extras.dump() << '\n';
    return;
  }
  json doc;
  doc["config"] = std::move(config);
  doc["records"] = records;
  for (auto& [k, v] : extras.items()) doc[k] = v;
  os << doc.dump(2) << '\n';
}

struct SweepOutcome {
  tb::SweepResult result;
  tb::MetgResult metg;
  std::vector<tb::SweepRecord> records;
};

SweepOutcome run_sweep(const tb::ExecutorConfig& c, const tb::TaskGraphSpec& tmpl,
                       const std::vector<std::uint64_t>& ladder, const tb::SweepOptions& so,
                       double threshold) {
  SweepOutcome out;
  out.result = tb::sweep(c, tmpl, ladder, so);
  out.metg = tb::compute_metg(out.result.curve, threshold);
  for (std::size_t k = 0; k < out.result.runs.size(); ++k) {
    const auto& run = out.result.runs[k];
    out.records.push_back(tb::make_record(c, tmpl, so.graphs, out.result.iterations[k], run,
                                          run.perf / out.result.curve.peak_perf));
  }
  return out;
}

json curve_json(const tb::EfficiencyCurve& c) {
  json j = json::array();
  for (const auto& p : c.points) j.push_back(tb::to_json(p));
  return j;
}

json metg_value(const tb::MetgResult& m) {
  return m.metg_us ? json(*m.metg_us) : json(nullptr);
}

// ---------------------------------------------------------------------------

int cmd_run(const Options& o) {
  const auto c = make_config(o);
  const auto tmpl = make_template(o);
  const auto so = sweep_options(o);
  const auto run = tb::execute(c, tb::make_request(tmpl, tmpl.kernel.iterations, so));
  double eff = 1.0;
  if (o.peak_perf) eff = *o.peak_perf > 0.0 ? run.perf / *o.peak_perf : 0.0;
  emit(o, config_json(o, c, tmpl), {tb::make_record(c, tmpl, so.graphs, tmpl.kernel.iterations, run, eff)},
       json::object());
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto c = make_config(o);
  const auto tmpl = make_template(o);
  const auto ladder = make_ladder(o, tmpl.kernel);
  auto s = run_sweep(c, tmpl, ladder, sweep_options(o), threshold_of(o));
  json extras = json::object();
  if (o.format == "json") extras["curve"] = curve_json(s.result.curve);
  if (o.threshold) extras["metg"] = tb::to_json(s.metg);
  emit(o, config_json(o, c, tmpl), s.records, extras);
  return 0;
}

int cmd_study_radix(const Options& o) {
  const auto c = make_config(o);
  Options base = o;
  base.pattern = "nearest";
  auto tmpl = make_template(base);
  const auto ladder = make_ladder(o, tmpl.kernel);
  const double th = threshold_of(o);
  std::vector<tb::SweepRecord> records;
  json series = json::array();
  for (std::int64_t k = 0; k <= 9; ++k) {
    tmpl.pattern = tb::DependencePattern::nearest(k);
    auto s = run_sweep(c, tmpl, ladder, sweep_options(o), th);
    records.insert(records.end(), s.records.begin(), s.records.end());
    series.push_back({{"radix", k}, {"metg_us", metg_value(s.metg)},
                      {"status", std::string(tb::to_string(s.metg.status))}});
  }
  emit(o, config_json(base, c, tmpl), records, {{"series", series}, {"threshold", th}});
  return 0;
}

int cmd_study_imbalance(const Options& o) {
  const auto c = make_config(o);
  auto tmpl = make_template(o);
  const auto ladder = make_ladder(o, tmpl.kernel);
  const double th = threshold_of(o);
  std::vector<tb::SweepRecord> records;
  json series = json::array();
  std::optional<double> peak = o.peak_perf;
  for (double imb : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    tmpl.kernel.imbalance = imb;
    auto so = sweep_options(o);
    so.peak_override = peak;  // balanced sweep sets the baseline for the rest
    auto s = run_sweep(c, tmpl, ladder, so, th);
    if (!peak) peak = s.result.curve.peak_perf;
    records.insert(records.end(), s.records.begin(), s.records.end());
    series.push_back({{"imbalance", imb}, {"metg_us", metg_value(s.metg)},
                      {"status", std::string(tb::to_string(s.metg.status))},
                      {"peak_efficiency", s.result.curve.points.front().efficiency}});
  }
  emit(o, config_json(o, c, tmpl), records, {{"series", series}, {"threshold", th}});
  return 0;
}

int cmd_study_graphs(const Options& o) {
  const auto c = make_config(o);
  const auto tmpl = make_template(o);
  const auto ladder = make_ladder(o, tmpl.kernel);
  const double th = threshold_of(o);
  std::vector<tb::SweepRecord> records;
  json series = json::array();
  for (std::size_t g : {1u, 2u, 4u}) {
    auto so = sweep_options(o);
    so.graphs = g;
    auto s = run_sweep(c, tmpl, ladder, so, th);
    records.insert(records.end(), s.records.begin(), s.records.end());
    series.push_back({{"graphs", g}, {"metg_us", metg_value(s.metg)},
                      {"status", std::string(tb::to_string(s.metg.status))}});
  }
  emit(o, config_json(o, c, tmpl), records, {{"series", series}, {"threshold", th}});
  return 0;
}

// METG at each worker count, the one-worker time at --iter, and the
// predicted scaling limit from both.
int cmd_study_scaling(const Options& o) {
  const auto top = make_config(o);
  const double th = threshold_of(o);
  const auto so = sweep_options(o);
  std::vector<std::size_t> counts;
  for (std::size_t n = 1; n <= top.workers; n *= 2) counts.push_back(n);
  if (counts.back() != top.workers) counts.push_back(top.workers);

  // Width fixed across worker counts: strong scaling.
  Options fixed = o;
  if (fixed.width <= 0) fixed.width = static_cast<std::int64_t>(top.workers);
  const auto tmpl = make_template(fixed);
  const auto ladder = make_ladder(o, tmpl.kernel);

  std::vector<tb::SweepRecord> records;
  std::map<std::size_t, double> metg, tpc, actual;
  double t1 = 0.0;
  json series = json::array();
  for (std::size_t n : counts) {
    auto c = top;
    c.workers = n;
    auto s = run_sweep(c, tmpl, ladder, so, th);
    records.insert(records.end(), s.records.begin(), s.records.end());
    const auto run = tb::execute(c, tb::make_request(tmpl, tmpl.kernel.iterations, so));
    records.push_back(tb::make_record(c, tmpl, so.graphs, tmpl.kernel.iterations, run,
                                      run.perf / s.result.curve.peak_perf));
    if (n == 1) t1 = run.mean_wall_time_s;
    actual[n] = run.mean_wall_time_s;
    if (s.metg.metg_us) {
      metg[n] = *s.metg.metg_us;
      tpc[n] = static_cast<double>(run.num_tasks) / static_cast<double>(n);
    }
    series.push_back({{"workers", n}, {"metg_us", metg_value(s.metg)},
                      {"status", std::string(tb::to_string(s.metg.status))},
                      {"wall_s", run.mean_wall_time_s}});
  }
  json extras = {{"series", series}, {"threshold", th}};
  extras["scaling"] = metg.empty() ? json(nullptr)
                                   : tb::to_json(tb::predict_strong_scaling(metg, tpc, t1, actual));
  emit(o, config_json(fixed, top, tmpl), records, extras);
  return 0;
}

// Brute-force dependence oracles and the cross-executor validation matrix.
int cmd_selftest() {
  int failures = 0;
  auto report = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "ok    " : "FAIL  ") << what << '\n';
    if (!ok) ++failures;
  };

  for (tb::PatternKind kind : tb::kAllPatterns) {
    bool ok = true;
    for (std::int64_t w : {1, 2, 3, 4, 5, 8, 16, 32, 64}) {
      if (tb::pattern_needs_power_of_two(kind) && !std::has_single_bit(static_cast<std::uint64_t>(w))) continue;
      for (std::int64_t radix : {0, 1, 3, 5, 9}) {
        tb::TaskGraphSpec g;
        g.width = w;
        g.height = 16;
        g.pattern.kind = kind;
        g.pattern.radix = radix;
        g.pattern.seed = 7;
        for (std::int64_t t = 0; t < g.height && ok; ++t) {
          for (std::int64_t i = 0; i < w && ok; ++i) {
            if (!tb::contains_point(g, {t, i})) continue;
            for (std::int64_t j : tb::deps(g, {t, i})) {
              ok = ok && t > 0 && j >= 0 && j < w && tb::contains_point(g, {t - 1, j}) &&
                   tb::reverse_deps(g, {t - 1, j}).contains(i);
            }
            for (std::int64_t j : tb::reverse_deps(g, {t, i})) {
              ok = ok && t + 1 < g.height && j >= 0 && j < w && tb::contains_point(g, {t + 1, j}) &&
                   tb::deps(g, {t + 1, j}).contains(i);
            }
          }
        }
        if (kind != tb::PatternKind::Nearest && kind != tb::PatternKind::Spread) break;
      }
    }
    report(ok, "dependence oracle: " + std::string(tb::to_string(kind)));
  }

  const std::size_t workers = std::min<std::size_t>(4, std::max<std::size_t>(2, tb::available_cores()));
  for (tb::ExecutorKind ek : tb::kAllExecutors) {
    bool ok = true;
    std::string detail;
    for (tb::PatternKind pk : tb::kAllPatterns) {
      for (std::size_t graphs : {1u, 4u}) {
        tb::RunRequest req;
        req.warmup_runs = 0;
        req.timed_runs = 1;
        req.count_executions = true;
        std::uint64_t tasks = 0;
        for (std::size_t g = 0; g < graphs; ++g) {
          tb::TaskGraphSpec s;
          s.graph_id = g;
          s.width = 16;
          s.height = 16;
          s.pattern.kind = pk;
          s.pattern.radix = 5;
          s.kernel.iterations = 8;
          s.output_bytes = g % 2 ? 4096 : 16;
          tasks += tb::num_tasks(s);
          req.graphs.push_back(s);
        }
        tb::ExecutorConfig c;
        c.kind = ek;
        c.workers = ek == tb::ExecutorKind::Serial ? 1 : workers;
        try {
          const auto r = tb::execute(c, req);
          for (std::size_t g = 0; g < graphs; ++g) {
            for (std::int64_t t = 0; t < 16; ++t) {
              for (std::int64_t i = 0; i < 16; ++i) {
                const std::uint32_t want = tb::contains_point(req.graphs[g], {t, i}) ? 1 : 0;
                if (r.execution_counts[g][static_cast<std::size_t>(t * 16 + i)] != want) ok = false;
              }
            }
          }
          if (r.counters.tasks_executed != tasks || r.counters.violations != 0) ok = false;
          if (!ok && detail.empty()) detail = std::string(tb::to_string(pk)) + " x" + std::to_string(graphs);
        } catch (const std::exception& e) {
          ok = false;
          if (detail.empty()) detail = e.what();
        }
      }
    }
    report(ok, "executor matrix: " + std::string(tb::to_string(ek)) + (detail.empty() ? "" : " (" + detail + ")"));
  }
  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taskbench: parameterised task graph benchmark"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "execute one configuration, print one record");
  add_common(run, o);
  auto* sweep = app.add_subcommand("sweep", "execute an iteration ladder, print the curve and METG");
  add_common(sweep, o);
  auto* study = app.add_subcommand("study", "canned experiments");
  study->require_subcommand(1);
  auto* radix = study->add_subcommand("radix", "METG vs nearest-neighbour radix 0..9");
  auto* imbalance = study->add_subcommand("imbalance", "METG vs load imbalance 0..1");
  auto* graphs = study->add_subcommand("graphs", "METG vs concurrent graphs 1, 2, 4");
  auto* scaling = study->add_subcommand("scaling", "METG per worker count and the strong-scaling limit");
  for (auto* s : {radix, imbalance, graphs, scaling}) add_common(s, o);
  auto* selftest = app.add_subcommand("selftest", "dependence oracles and executor validation matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*selftest) return cmd_selftest();
    apply_environment(o);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*radix) return cmd_study_radix(o);
    if (*imbalance) return cmd_study_imbalance(o);
    if (*graphs) return cmd_study_graphs(o);
    if (*scaling) return cmd_study_scaling(o);
  } catch (const UsageError& e) {
    std::cerr << "taskbench: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tb::ValidationError& e) {
    std::cerr << "taskbench: " << e.what() << '\n';
    return kExitValidation;
  } catch (const tb::DeadlockError& e) {
    std::cerr << "taskbench: " << e.what() << '\n';
    return kExitDeadlock;
  } catch (const std::invalid_argument& e) {
    std::cerr << "taskbench: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "taskbench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
