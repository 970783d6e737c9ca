#include "nfisac/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace nfisac {

using nlohmann::json;

namespace {

struct Field {
  std::function<void(ScenarioConfig&, const json&)> set;
  std::function<json(const ScenarioConfig&)> get;
};

template <typename T>
Field field(T ScenarioConfig::*member) {
  Field f;
  f.set = [member](ScenarioConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer");
    } else {
      if (!v.is_number()) throw ConfigError("expected a number");
    }
    c.*member = v.get<T>();
  };
  f.get = [member](const ScenarioConfig& c) { return json(c.*member); };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"n_tx", field(&ScenarioConfig::n_tx)},
      {"n_rx", field(&ScenarioConfig::n_rx)},
      {"n_rf", field(&ScenarioConfig::n_rf)},
      {"users", field(&ScenarioConfig::users)},
      {"targets", field(&ScenarioConfig::targets)},
      {"scatterers", field(&ScenarioConfig::scatterers)},
      {"cpi_length", field(&ScenarioConfig::cpi_length)},
      {"carrier_hz", field(&ScenarioConfig::carrier_hz)},
      {"aperture_tx", field(&ScenarioConfig::aperture_tx)},
      {"aperture_rx", field(&ScenarioConfig::aperture_rx)},
      {"power_dbm", field(&ScenarioConfig::power_dbm)},
      {"noise_dbm", field(&ScenarioConfig::noise_dbm)},
      {"sensing_noise_dbm", field(&ScenarioConfig::sensing_noise_dbm)},
      {"rate_threshold", field(&ScenarioConfig::rate_threshold)},
      {"target_range_min", field(&ScenarioConfig::target_range_min)},
      {"target_range_max", field(&ScenarioConfig::target_range_max)},
      {"user_range_min", field(&ScenarioConfig::user_range_min)},
      {"angle_limit", field(&ScenarioConfig::angle_limit)},
      {"target_gain", field(&ScenarioConfig::target_gain)},
  };
  return table;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

ScenarioConfig overlay(const json& j, ScenarioConfig c) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second.set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

json config_object(const ScenarioConfig& c) {
  json j = json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(c);
  return j;
}

json matrix_json(const CMat& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"real", re}, {"imag", im}};
}

CMat matrix_from(const json& j, const char* name) {
  if (!j.is_object() || !j.contains("real") || !j.contains("imag")) {
    throw ConfigError(std::string(name) + " needs 'real' and 'imag' arrays");
  }
  const json& re = j["real"];
  const json& im = j["imag"];
  if (!re.is_array() || !im.is_array() || re.size() != im.size() || re.empty()) {
    throw ConfigError(std::string(name) + ": real and imag must be equal-size nonempty arrays");
  }
  const int rows = static_cast<int>(re.size());
  const int cols = static_cast<int>(re[0].size());
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!re[r].is_array() || !im[r].is_array() || static_cast<int>(re[r].size()) != cols ||
        static_cast<int>(im[r].size()) != cols) {
      throw ConfigError(std::string(name) + ": ragged rows");
    }
    for (int c = 0; c < cols; ++c) {
      if (!re[r][c].is_number() || !im[r][c].is_number()) {
        throw ConfigError(std::string(name) + ": entries must be numbers");
      }
      m(r, c) = cplx(re[r][c].get<double>(), im[r][c].get<double>());
    }
  }
  return m;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig parse_scenario_config(const std::string& json_text, ScenarioConfig base) {
  return overlay(parse(json_text), base);
}

ScenarioConfig load_scenario_config(const std::string& path, ScenarioConfig base) {
  return parse_scenario_config(read_text_file(path), base);
}

std::string scenario_config_json(const ScenarioConfig& config) { return config_object(config).dump(2); }

Architecture parse_architecture(const std::string& name) {
  for (Architecture a : {Architecture::FullyDigital, Architecture::FullyConnected,
                         Architecture::PartiallyConnected, Architecture::TwoStage}) {
    if (name == architecture_name(a)) return a;
  }
  throw ConfigError("unknown architecture '" + name + "'");
}

const char* scheme_name(AccessScheme scheme) { return scheme == AccessScheme::Rsma ? "rsma" : "sdma"; }

AccessScheme parse_scheme(const std::string& name) {
  if (name == "rsma") return AccessScheme::Rsma;
  if (name == "sdma") return AccessScheme::Sdma;
  throw ConfigError("unknown access scheme '" + name + "'");
}

std::string beamformer_json(const StoredBeamformer& s) {
  json j;
  j["scenario"] = config_object(s.config);
  j["seed"] = s.seed;
  j["scheme"] = scheme_name(s.scheme);
  j["architecture"] = architecture_name(s.beamformer.architecture);
  j["analog"] = matrix_json(s.beamformer.analog);
  j["digital"] = matrix_json(s.beamformer.digital);
  return j.dump(2);
}

StoredBeamformer parse_beamformer(const std::string& json_text) {
  const json j = parse(json_text);
  if (!j.is_object()) throw ConfigError("beamformer file must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "scenario" && key != "seed" && key != "scheme" && key != "architecture" &&
        key != "analog" && key != "digital") {
      throw ConfigError("unknown beamformer key '" + key + "'");
    }
  }
  for (const char* key : {"scenario", "seed", "architecture", "analog", "digital"}) {
    if (!j.contains(key)) throw ConfigError(std::string("beamformer file lacks '") + key + "'");
  }
  StoredBeamformer s;
  s.config = overlay(j["scenario"], ScenarioConfig::desk());
  if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
  s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("scheme")) s.scheme = parse_scheme(j["scheme"].get<std::string>());
  s.beamformer.architecture = parse_architecture(j["architecture"].get<std::string>());
  s.beamformer.analog = matrix_from(j["analog"], "analog");
  s.beamformer.digital = matrix_from(j["digital"], "digital");
  const HybridBeamformer& b = s.beamformer;
  if (b.analog.rows() != s.config.n_tx) throw DimensionError("analog matrix must have n_tx rows");
  if (b.analog.cols() != b.digital.rows()) throw DimensionError("analog and digital shapes disagree");
  if (b.digital.cols() != s.config.users + 1) throw DimensionError("digital matrix must have users + 1 columns");
  return s;
}

StoredBeamformer load_beamformer(const std::string& path) { return parse_beamformer(read_text_file(path)); }

}  // namespace nfisac
