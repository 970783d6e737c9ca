#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nfisac/sensing_crb.hpp"

namespace nfisac {

struct ScenarioConfig {
  int n_tx = 16;
  int n_rx = 8;
  int n_rf = 4;
  int users = 2;
  int targets = 2;
  int scatterers = 2;
  int cpi_length = 256;
  double carrier_hz = 30e9;
  double aperture_tx = 0.5;
  double aperture_rx = 0.5;
  double power_dbm = 30.0;
  double noise_dbm = -90.0;
  double sensing_noise_dbm = -90.0;
  double rate_threshold = 2.0;
  double target_range_min = 20.0;
  double target_range_max = 30.0;
  double user_range_min = 5.0;
  double angle_limit = kPi / 3.0;
  double target_gain = 1.0;

  static ScenarioConfig desk();
  // Full-size array: N_t = 64, 8 RF chains, four users.
  static ScenarioConfig paper();

  void validate() const;
};

struct UserSite {
  PolarPosition position;
  std::vector<Scatterer> scatterers;
};

struct Scenario {
  ArrayGeometry geometry;
  std::vector<UserSite> users;
  TargetSet targets;
  SensingConfig sensing;
  int n_rf = 4;
  double power_budget = 1.0;  // watts
  double noise = 1e-12;       // watts
  double rate_threshold = 0.0;
  std::uint64_t seed = 0;

  int user_count() const { return static_cast<int>(users.size()); }
  ChannelSet channels(FieldMode mode = FieldMode::Near) const;
  // LoS steering vectors of the users (columns), used by the heuristic analog stage.
  CMat user_steering(FieldMode mode = FieldMode::Near) const;
};

// Uniform draws on [0, 1) from the top 53 bits, so the stream does not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace nfisac
