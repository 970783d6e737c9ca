#include "nfisac/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "nfisac/two_stage.hpp"

namespace nfisac {

namespace {

// Far-field rows below this are flagged instead of being averaged in.
constexpr double kRateSlack = 1e-3;

int worker_count(int requested, std::size_t items) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(items, 1)));
}

template <typename Fn>
void parallel_for(std::size_t items, int threads, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int n = worker_count(threads, items);
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

CMat analog_seed(const Method& m, const Scenario& s) {
  const CMat steering = s.user_steering(m.comm_mode);
  const Architecture arch =
      m.architecture == Architecture::PartiallyConnected ? Architecture::PartiallyConnected
                                                         : Architecture::FullyConnected;
  return heuristic_analog(steering, s.n_rf, arch);
}

}  // namespace

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Rate: return "rate";
    case SweepAxis::Power: return "power";
    case SweepAxis::RfChains: return "rf_chains";
    case SweepAxis::Users: return "users";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::Rate, SweepAxis::Power, SweepAxis::RfChains, SweepAxis::Users}) {
    if (name == axis_name(a)) return a;
  }
  throw UsageError("unknown axis '" + name + "' (rate, power, rf_chains, users)");
}

Method parse_method(const std::string& tag) {
  static const std::map<std::string, Method> known = {
      {"rsma-fc", {"rsma-fc", AccessScheme::Rsma, Architecture::FullyConnected, FieldMode::Near}},
      {"rsma-pc", {"rsma-pc", AccessScheme::Rsma, Architecture::PartiallyConnected, FieldMode::Near}},
      {"rsma-lc", {"rsma-lc", AccessScheme::Rsma, Architecture::TwoStage, FieldMode::Near}},
      {"rsma-fd", {"rsma-fd", AccessScheme::Rsma, Architecture::FullyDigital, FieldMode::Near}},
      {"sdma-fc", {"sdma-fc", AccessScheme::Sdma, Architecture::FullyConnected, FieldMode::Near}},
      {"sdma-fd", {"sdma-fd", AccessScheme::Sdma, Architecture::FullyDigital, FieldMode::Near}},
      {"rsma-fc-far", {"rsma-fc-far", AccessScheme::Rsma, Architecture::FullyConnected, FieldMode::Far}},
  };
  auto it = known.find(tag);
  if (it == known.end()) {
    std::string list;
    for (const auto& [k, v] : known) list += (list.empty() ? "" : ", ") + k;
    throw UsageError("unknown method '" + tag + "' (" + list + ")");
  }
  return it->second;
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> out;
  std::stringstream ss(comma_list);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    if (tag.empty()) continue;
    Method m = parse_method(tag);
    for (const Method& seen : out) {
      if (seen.tag == m.tag) throw UsageError("method '" + tag + "' listed twice");
    }
    out.push_back(std::move(m));
  }
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

ScenarioConfig apply_axis(ScenarioConfig c, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::Rate: c.rate_threshold = value; break;
    case SweepAxis::Power: c.power_dbm = value; break;
    case SweepAxis::RfChains:
      if (value != std::floor(value)) throw UsageError("rf_chains values must be integers");
      c.n_rf = static_cast<int>(value);
      break;
    case SweepAxis::Users:
      if (value != std::floor(value)) throw UsageError("users values must be integers");
      c.users = static_cast<int>(value);
      break;
  }
  c.validate();
  return c;
}

std::vector<double> default_axis_values(SweepAxis axis, const ScenarioConfig& c) {
  switch (axis) {
    case SweepAxis::Rate: return {1.0, 2.0, 3.0, 4.0};
    case SweepAxis::Power: return {20.0, 25.0, 30.0, 35.0, 40.0};
    case SweepAxis::RfChains: {
      std::vector<double> v;
      for (int n = c.users; n <= c.n_tx; n *= 2) {
        if (c.n_tx % n == 0) v.push_back(n);
        if (v.size() == 3) break;
      }
      return v;
    }
    case SweepAxis::Users: {
      std::vector<double> v;
      for (int k = 1; k <= std::max(c.n_rf, 1); ++k) v.push_back(k);
      return v;
    }
  }
  return {};
}

OptimizeResult run_method(const Method& m, const Scenario& s, const OptimizeOptions& opt,
                          const HybridBeamformer* warm) {
  const DesignContext ctx = DesignContext::from_scenario(s, m.scheme, m.comm_mode);
  OptimizeResult r;
  switch (m.architecture) {
    case Architecture::FullyDigital: r = optimize_fully_digital(ctx, opt, warm); break;
    case Architecture::TwoStage: r = two_stage_optimize(ctx, analog_seed(m, s), opt, warm); break;
    case Architecture::FullyConnected:
    case Architecture::PartiallyConnected:
      r = pdd_optimize(ctx, m.architecture, analog_seed(m, s), opt, warm);
      break;
  }
  if (m.comm_mode == FieldMode::Far) {
    // The true links are spherical-wave; report the rates they deliver.
    const DesignContext truth = DesignContext::from_scenario(s, m.scheme, FieldMode::Near);
    const Audit a = audit_precoder(truth, r.beamformer.product() / truth.amplitude(), opt.rate_tol);
    r.rates = a.rates;
    r.min_rate = a.min_rate;
    r.allocation = a.rates.allocation;
  }
  return r;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.methods.empty()) throw UsageError("no methods given");
  if (spec.trials < 1) throw UsageError("trials must be >= 1");
  std::vector<double> values = spec.values.empty() ? default_axis_values(spec.axis, spec.config) : spec.values;
  if (values.empty()) throw UsageError("axis has no values");
  for (double v : values) apply_axis(spec.config, spec.axis, v);  // reject bad cells up front
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> order = values;
  const bool chained = spec.axis == SweepAxis::Rate || spec.axis == SweepAxis::Power;
  if (spec.axis == SweepAxis::Rate) std::reverse(order.begin(), order.end());

  const std::size_t n_methods = spec.methods.size();
  const std::size_t items = n_methods * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<SweepRow>> out(items);
  parallel_for(items, spec.threads, [&](std::size_t item) {
    const Method& m = spec.methods[item % n_methods];
    const std::uint64_t seed = spec.seed + item / n_methods;
    std::unique_ptr<HybridBeamformer> warm;
    for (double v : order) {
      const Scenario s = generate_scenario(apply_axis(spec.config, spec.axis, v), seed);
      OptimizeOptions opt = spec.options;
      opt.tag = std::string(axis_name(spec.axis)) + "=" + format_number(v) + " " + m.tag + " seed=" +
                std::to_string(seed);
      const auto t0 = std::chrono::steady_clock::now();
      const OptimizeResult r = run_method(m, s, opt, chained ? warm.get() : nullptr);
      SweepRow row;
      row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.axis = spec.axis;
      row.value = v;
      row.method = m.tag;
      row.seed = seed;
      row.crb_angle = r.crb.angle_trace;
      row.crb_range = r.crb.range_trace;
      row.crb_total = r.crb.trace;
      row.min_rate = r.min_rate;
      row.status = optimize_status_name(r.status);
      if (r.status != OptimizeStatus::Infeasible && r.min_rate < s.rate_threshold - kRateSlack) {
        row.status = "rate_shortfall";
      }
      row.beamformer = r.beamformer;
      if (r.status != OptimizeStatus::Infeasible) {
        warm = std::make_unique<HybridBeamformer>(r.beamformer);
      }
      out[item].push_back(std::move(row));
    }
  });

  std::vector<SweepRow> rows;
  for (auto& v : out) {
    for (auto& r : v) rows.push_back(std::move(r));
  }
  auto method_rank = [&](const std::string& tag) {
    for (std::size_t i = 0; i < n_methods; ++i) {
      if (spec.methods[i].tag == tag) return i;
    }
    return n_methods;
  };
  std::sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    if (a.value != b.value) return a.value < b.value;
    const std::size_t ma = method_rank(a.method), mb = method_rank(b.method);
    if (ma != mb) return ma < mb;
    return a.seed < b.seed;
  });
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing) {
  out << "axis,value,method,seed,crb_angle,crb_range,crb_total,min_rate,status,wall_s\n";
  for (const SweepRow& r : rows) {
    out << axis_name(r.axis) << ',' << format_number(r.value) << ',' << r.method << ',' << r.seed << ','
        << format_number(r.crb_angle) << ',' << format_number(r.crb_range) << ','
        << format_number(r.crb_total) << ',' << format_number(r.min_rate) << ',' << r.status << ',';
    if (with_timing) out << format_number(r.wall_s);
    out << '\n';
  }
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepRow>& rows,
                         const std::vector<Method>& methods) {
  out << "axis,value,method,trials,feasible,crb_angle_mean,crb_angle_stderr,crb_range_mean,"
         "crb_range_stderr,crb_total_mean,crb_total_stderr,min_rate_mean,min_rate_stderr\n";
  std::vector<double> values;
  for (const SweepRow& r : rows) values.push_back(r.value);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (double v : values) {
    for (const Method& m : methods) {
      std::vector<const SweepRow*> cell;
      int trials = 0;
      const char* axis = "";
      for (const SweepRow& r : rows) {
        if (r.value != v || r.method != m.tag) continue;
        ++trials;
        axis = axis_name(r.axis);
        if (r.status == "ok" || r.status == "not_converged") cell.push_back(&r);
      }
      if (trials == 0) continue;
      out << axis << ',' << format_number(v) << ',' << m.tag << ',' << trials << ',' << cell.size();
      for (double SweepRow::*f : {&SweepRow::crb_angle, &SweepRow::crb_range, &SweepRow::crb_total,
                                  &SweepRow::min_rate}) {
        if (cell.empty()) {
          out << ",,";
          continue;
        }
        double mean = 0.0;
        for (const SweepRow* r : cell) mean += r->*f;
        mean /= static_cast<double>(cell.size());
        double var = 0.0;
        for (const SweepRow* r : cell) var += (r->*f - mean) * (r->*f - mean);
        const double n = static_cast<double>(cell.size());
        const double se = cell.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
        out << ',' << format_number(mean) << ',' << format_number(se);
      }
      out << '\n';
    }
  }
}

std::vector<MaxMinRow> run_maxmin(const std::vector<Method>& methods, const ScenarioConfig& config,
                                  int trials, std::uint64_t seed, const OptimizeOptions& opt, int threads) {
  if (trials < 1) throw UsageError("trials must be >= 1");
  for (const Method& m : methods) {
    if (m.comm_mode == FieldMode::Far) throw UsageError("maxmin does not take far-field methods");
  }
  const std::size_t n_methods = methods.size();
  std::vector<MaxMinRow> rows(n_methods * static_cast<std::size_t>(trials));
  parallel_for(rows.size(), threads, [&](std::size_t item) {
    const Method& m = methods[item % n_methods];
    const std::uint64_t sd = seed + item / n_methods;
    const Scenario s = generate_scenario(config, sd);
    const DesignContext ctx = DesignContext::from_scenario(s, m.scheme);
    const CMat mapping = m.architecture == Architecture::FullyDigital
                             ? CMat(CMat::Identity(ctx.n_tx, ctx.n_tx))
                             : analog_seed(m, s);
    const MaxMinResult mm = max_min_rate(ctx, mapping, opt);
    rows[item] = {m.tag, sd, mm.rate, mm.oracle_calls};
  });
  std::stable_sort(rows.begin(), rows.end(), [&](const MaxMinRow& a, const MaxMinRow& b) {
    return a.seed < b.seed;
  });
  return rows;
}

void write_maxmin_csv(std::ostream& out, const std::vector<MaxMinRow>& rows) {
  out << "method,seed,max_min_rate,oracle_calls\n";
  for (const MaxMinRow& r : rows) {
    out << r.method << ',' << r.seed << ',' << format_number(r.rate) << ',' << r.oracle_calls << '\n';
  }
}

}  // namespace nfisac
