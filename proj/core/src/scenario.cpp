#include "nfisac/scenario.hpp"

#include <string>

namespace nfisac {

ScenarioConfig ScenarioConfig::desk() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::paper() {
  ScenarioConfig c;
  c.n_tx = 64;
  c.n_rx = 32;
  c.n_rf = 8;
  c.users = 4;
  c.targets = 2;
  return c;
}

void ScenarioConfig::validate() const {
  if (n_tx < 1 || n_rx < 1) throw ConfigError("antenna counts must be >= 1");
  if (n_rf < 1 || n_rf > n_tx) throw ConfigError("n_rf must lie in [1, n_tx]");
  if (users < 1) throw ConfigError("at least one user is required");
  if (targets < 1) throw ConfigError("at least one target is required");
  if (scatterers < 0) throw ConfigError("scatterer count must be >= 0");
  if (cpi_length < 1) throw ConfigError("cpi_length must be >= 1");
  if (!(carrier_hz > 0)) throw ConfigError("carrier_hz must be positive");
  if (!(aperture_tx > 0) || !(aperture_rx > 0)) throw ConfigError("apertures must be positive");
  if (!(rate_threshold >= 0)) throw ConfigError("rate_threshold must be >= 0");
  if (!(angle_limit > 0) || angle_limit >= kPi / 2) throw ConfigError("angle_limit must lie in (0, pi/2)");
  if (!(target_gain > 0)) throw ConfigError("target_gain must be positive");
  if (!(target_range_min > 0) || !(target_range_max > target_range_min)) {
    throw ConfigError("target range band must satisfy 0 < min < max");
  }
  const ArrayGeometry g =
      ArrayGeometry::from_apertures(n_tx, n_rx, aperture_tx, aperture_rx, carrier_hz);
  const double rd = rayleigh_distance(g, ArraySide::Tx);
  if (target_range_max > rd) {
    throw ConfigError("target band ends beyond the Rayleigh distance (" + std::to_string(rd) + " m)");
  }
  if (!(user_range_min > 0) || user_range_min >= rd) {
    throw ConfigError("user_range_min must lie in (0, Rayleigh distance)");
  }
}

ChannelSet Scenario::channels(FieldMode mode) const {
  ChannelSet cs;
  cs.field_mode = mode;
  for (const UserSite& u : users) {
    cs.user_channels.push_back(build_user_channel(geometry, u.position, u.scatterers, mode));
  }
  return cs;
}

CMat Scenario::user_steering(FieldMode mode) const {
  CMat a(geometry.n_tx, user_count());
  for (int k = 0; k < user_count(); ++k) {
    a.col(k) = steering_vector(geometry, ArraySide::Tx, users[k].position, mode);
  }
  return a;
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario s;
  s.geometry = ArrayGeometry::from_apertures(config.n_tx, config.n_rx, config.aperture_tx,
                                             config.aperture_rx, config.carrier_hz);
  s.n_rf = config.n_rf;
  s.power_budget = dbm_to_watts(config.power_dbm);
  s.noise = dbm_to_watts(config.noise_dbm);
  s.rate_threshold = config.rate_threshold;
  s.seed = seed;
  s.sensing.cpi_length = config.cpi_length;
  s.sensing.noise = dbm_to_watts(config.sensing_noise_dbm);

  const double rd = rayleigh_distance(s.geometry, ArraySide::Tx);
  const double lim = config.angle_limit;
  Rng rng(seed);
  auto near_point = [&](double lo) {
    PolarPosition p;
    p.range = rng.uniform(lo, rd);
    p.angle = rng.uniform(-lim, lim);
    return p;
  };
  for (int m = 0; m < config.targets; ++m) {
    PolarPosition p;
    p.range = rng.uniform(config.target_range_min, config.target_range_max);
    p.angle = rng.uniform(-lim, lim);
    s.targets.positions.push_back(p);
    s.targets.gains.push_back(std::polar(config.target_gain, rng.uniform(-kPi, kPi)));
  }
  for (int k = 0; k < config.users; ++k) {
    UserSite u;
    u.position = near_point(config.user_range_min);
    for (int q = 0; q < config.scatterers; ++q) {
      Scatterer sc;
      sc.position = near_point(config.user_range_min);
      // Second hop: straight-line distance from the scatterer to the user.
      const double x1 = sc.position.range * std::cos(sc.position.angle);
      const double y1 = sc.position.range * std::sin(sc.position.angle);
      const double x2 = u.position.range * std::cos(u.position.angle);
      const double y2 = u.position.range * std::sin(u.position.angle);
      sc.backscatter_range = std::max(std::hypot(x1 - x2, y1 - y2), 1e-3);
      u.scatterers.push_back(sc);
    }
    s.users.push_back(std::move(u));
  }
  return s;
}

}  // namespace nfisac
