#pragma once

#include <cstdint>
#include <string>

#include "nfisac/design.hpp"

namespace nfisac {

// Overlays the keys of a JSON object onto `base`. Keys mirror the
// ScenarioConfig field names; an unknown key or a value of the wrong type is a
// ConfigError. The result is validated.
ScenarioConfig parse_scenario_config(const std::string& json_text, ScenarioConfig base);
ScenarioConfig load_scenario_config(const std::string& path, ScenarioConfig base);
std::string scenario_config_json(const ScenarioConfig& config);

// A stored design: enough to regenerate the scenario and re-audit the point.
struct StoredBeamformer {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  AccessScheme scheme = AccessScheme::Rsma;
  HybridBeamformer beamformer;  // physical units
};

std::string beamformer_json(const StoredBeamformer& stored);
StoredBeamformer parse_beamformer(const std::string& json_text);
StoredBeamformer load_beamformer(const std::string& path);

Architecture parse_architecture(const std::string& name);
const char* scheme_name(AccessScheme scheme);
AccessScheme parse_scheme(const std::string& name);

std::string read_text_file(const std::string& path);

}  // namespace nfisac
