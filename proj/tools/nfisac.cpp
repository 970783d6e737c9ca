#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nfisac/selftest.hpp"
#include "nfisac/sweep.hpp"

using namespace nfisac;

namespace {

struct Common {
  std::string profile = "desk";
  std::string config_path;
  std::uint64_t seed = 1;
  int threads = 0;
  bool verbose = false;
  std::string log_path;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--profile", c.profile, "Base parameter set")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--config", c.config_path, "JSON scenario overrides")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "First scenario seed");
  app->add_option("--threads", c.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app->add_flag("--verbose", c.verbose, "Line-delimited JSON iteration log (stderr unless --log)");
  app->add_option("--log", c.log_path, "Iteration log file, implies --verbose");
}

ScenarioConfig scenario_config(const Common& c) {
  const ScenarioConfig base = c.profile == "paper" ? ScenarioConfig::paper() : ScenarioConfig::desk();
  return c.config_path.empty() ? base : load_scenario_config(c.config_path, base);
}

// Keeps the log stream alive next to the IterationLog that writes to it.
struct LogSink {
  std::ofstream file;
  std::unique_ptr<IterationLog> log;
};

IterationLog* open_log(const Common& c, LogSink& sink) {
  if (!c.log_path.empty()) {
    sink.file.open(c.log_path);
    if (!sink.file) throw ConfigError("cannot write '" + c.log_path + "'");
    sink.log = std::make_unique<IterationLog>(sink.file);
  } else if (c.verbose) {
    sink.log = std::make_unique<IterationLog>(std::cerr);
  }
  return sink.log.get();
}

// Writes to `path`, or stdout for "" and "-".
template <typename Fn>
void emit(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  fn(out);
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> v;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("bad axis value '" + item + "'");
    v.push_back(x);
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field ISAC beamforming simulator"};
  app.require_subcommand(1);

  Common sweep_c;
  std::string axis = "rate", methods = "rsma-fc,sdma-fc", values, out = "-", summary;
  int trials = 10;
  bool timing = false;
  CLI::App* sweep = app.add_subcommand("sweep", "CRB/rate sweep over one axis, CSV out");
  add_common(sweep, sweep_c);
  sweep->add_option("--axis", axis, "rate | power | rf_chains | users");
  sweep->add_option("--methods", methods, "Comma list: rsma-fc,rsma-pc,rsma-lc,rsma-fd,sdma-fc,sdma-fd,rsma-fc-far");
  sweep->add_option("--values", values, "Comma list of axis values (default per axis)");
  sweep->add_option("--trials", trials, "Channel realizations per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "CSV path, '-' for stdout");
  sweep->add_option("--summary", summary, "Per-cell mean/stderr CSV path");
  sweep->add_flag("--timing", timing, "Fill the wall_s column (breaks byte-identical output)");

  Common mm_c;
  std::string mm_methods = "rsma-fd,sdma-fd", mm_out = "-";
  int mm_trials = 10;
  CLI::App* maxmin = app.add_subcommand("maxmin", "Max-min rate without sensing, CSV out");
  add_common(maxmin, mm_c);
  maxmin->add_option("--methods", mm_methods, "Comma list of method tags");
  maxmin->add_option("--trials", mm_trials, "Channel realizations")->check(CLI::PositiveNumber);
  maxmin->add_option("--out", mm_out, "CSV path, '-' for stdout");

  Common opt_c;
  std::string opt_method = "rsma-fc", opt_out = "-";
  CLI::App* optimize = app.add_subcommand("optimize", "Design one beamformer, JSON out");
  add_common(optimize, opt_c);
  optimize->add_option("--method", opt_method, "Method tag");
  optimize->add_option("--out", opt_out, "Beamformer JSON path, '-' for stdout");

  std::string bf_path;
  CLI::App* crb_eval = app.add_subcommand("crb-eval", "Audit a stored beamformer");
  crb_eval->add_option("--beamformer", bf_path, "JSON written by 'optimize'")->required()->check(CLI::ExistingFile);

  SelftestOptions st;
  std::string report;
  CLI::App* selftest = app.add_subcommand("selftest", "Oracle and convergence suites");
  selftest->add_option("--seed", st.seed, "Seed for random instances");
  selftest->add_option("--threads", st.threads, "Worker threads (0: all cores)");
  selftest->add_option("--report", report, "Write results as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      SweepSpec spec;
      spec.axis = parse_axis(axis);
      spec.methods = parse_methods(methods);
      spec.values = parse_values(values);
      spec.trials = trials;
      spec.seed = sweep_c.seed;
      spec.config = scenario_config(sweep_c);
      spec.threads = sweep_c.threads;
      LogSink sink;
      spec.options.log = open_log(sweep_c, sink);
      const std::vector<SweepRow> rows = run_sweep(spec);
      emit(out, [&](std::ostream& os) { write_sweep_csv(os, rows, timing); });
      if (!summary.empty()) emit(summary, [&](std::ostream& os) { write_sweep_summary(os, rows, spec.methods); });
    } else if (*maxmin) {
      OptimizeOptions opt;
      LogSink sink;
      opt.log = open_log(mm_c, sink);
      const auto rows = run_maxmin(parse_methods(mm_methods), scenario_config(mm_c), mm_trials, mm_c.seed,
                                   opt, mm_c.threads);
      emit(mm_out, [&](std::ostream& os) { write_maxmin_csv(os, rows); });
    } else if (*optimize) {
      const Method m = parse_method(opt_method);
      StoredBeamformer stored;
      stored.config = scenario_config(opt_c);
      stored.seed = opt_c.seed;
      stored.scheme = m.scheme;
      OptimizeOptions opt;
      opt.tag = opt_method;
      LogSink sink;
      opt.log = open_log(opt_c, sink);
      const OptimizeResult r = run_method(m, generate_scenario(stored.config, stored.seed), opt);
      stored.beamformer = r.beamformer;
      std::cerr << opt_method << ": status " << optimize_status_name(r.status) << ", crb_total "
                << format_number(r.crb.trace) << ", min_rate " << format_number(r.min_rate) << ", outer "
                << r.outer_iterations << ", conic solves " << r.conic_solves << '\n';
      emit(opt_out, [&](std::ostream& os) { os << beamformer_json(stored) << '\n'; });
    } else if (*crb_eval) {
      const StoredBeamformer s = load_beamformer(bf_path);
      const Scenario sc = generate_scenario(s.config, s.seed);
      const DesignContext ctx = DesignContext::from_scenario(sc, s.scheme);
      const CMat x = s.beamformer.product() / ctx.amplitude();
      const Audit a = audit_precoder(ctx, x, 0.0);
      const double power = s.beamformer.product().squaredNorm();
      nlohmann::json j;
      j["architecture"] = architecture_name(s.beamformer.architecture);
      j["scheme"] = scheme_name(s.scheme);
      j["power_w"] = power;
      j["power_budget_w"] = sc.power_budget;
      j["rate_threshold"] = sc.rate_threshold;
      j["min_rate"] = a.min_rate;
      j["user_rates"] = a.rates.totals;
      j["common_allocation"] = a.rates.allocation;
      if (a.observable) {
        j["crb_angle"] = a.crb.angle_trace;
        j["crb_range"] = a.crb.range_trace;
        j["crb_total"] = a.crb.trace;
      } else {
        j["crb_total"] = nullptr;
      }
      j["feasible"] = a.observable && a.min_rate >= sc.rate_threshold - 1e-3 &&
                      power <= sc.power_budget * (1.0 + 1e-6);
      std::cout << j.dump(2) << '\n';
    } else if (*selftest) {
      const auto results = run_selftest(st, &std::cout);
      if (!report.empty()) emit(report, [&](std::ostream& os) { os << checks_json(results) << '\n'; });
      for (const CheckResult& r : results) {
        if (!r.passed) return 1;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
