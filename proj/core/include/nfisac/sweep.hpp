#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nfisac/config.hpp"

namespace nfisac {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SweepAxis { Rate, Power, RfChains, Users };

const char* axis_name(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

// A method tag: "<scheme>-<arch>" plus the far-field variant "rsma-fc-far",
// which designs on plane-wave user channels and is audited on the true ones.
struct Method {
  std::string tag;
  AccessScheme scheme = AccessScheme::Rsma;
  Architecture architecture = Architecture::FullyConnected;
  FieldMode comm_mode = FieldMode::Near;
};

Method parse_method(const std::string& tag);
std::vector<Method> parse_methods(const std::string& comma_list);

// Scenario config with the axis coordinate applied (R_th in bps/Hz, power in
// dBm, RF chain count, user count).
ScenarioConfig apply_axis(ScenarioConfig config, SweepAxis axis, double value);
std::vector<double> default_axis_values(SweepAxis axis, const ScenarioConfig& config);

// One design for one method on one scenario. Analog seeds come from the
// heuristic stage; `warm` is a physical-units starting point or null.
OptimizeResult run_method(const Method& method, const Scenario& scenario, const OptimizeOptions& opt,
                          const HybridBeamformer* warm = nullptr);

struct SweepRow {
  SweepAxis axis = SweepAxis::Rate;
  double value = 0.0;
  std::string method;
  std::uint64_t seed = 0;
  double crb_angle = 0.0;
  double crb_range = 0.0;
  double crb_total = 0.0;
  double min_rate = 0.0;
  std::string status;
  double wall_s = 0.0;
  HybridBeamformer beamformer;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::Rate;
  std::vector<double> values;   // empty: default_axis_values
  std::vector<Method> methods;
  int trials = 10;
  std::uint64_t seed = 1;       // trial t uses seed + t
  ScenarioConfig config;
  int threads = 0;              // 0: hardware concurrency
  OptimizeOptions options;
};

// Each (method, trial) pair walks the axis in warm-start order: R_th
// descending, power ascending, each run starting from the previous point.
// The other axes change dimensions and start cold. Rows come back sorted by
// (value, method order, seed) whatever the thread count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

// Locale-independent shortest round-trip form.
std::string format_number(double v);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing);

// Mean and standard error per (value, method) over rows whose status is ok or
// not_converged.
void write_sweep_summary(std::ostream& out, const std::vector<SweepRow>& rows,
                         const std::vector<Method>& methods);

struct MaxMinRow {
  std::string method;
  std::uint64_t seed = 0;
  double rate = 0.0;
  int oracle_calls = 0;
};

// Max-min rate behind each method's analog network (identity for fd).
std::vector<MaxMinRow> run_maxmin(const std::vector<Method>& methods, const ScenarioConfig& config,
                                  int trials, std::uint64_t seed, const OptimizeOptions& opt,
                                  int threads = 0);
void write_maxmin_csv(std::ostream& out, const std::vector<MaxMinRow>& rows);

}  // namespace nfisac
