#include "nfisac/iteration_log.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"

namespace nfisac {

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void IterationLog::write(const IterationRecord& r) {
  nlohmann::json j;
  j["run"] = r.run;
  j["level"] = r.level;
  j["outer"] = r.outer;
  j["inner"] = r.inner;
  j["objective"] = number(r.objective);
  j["violation"] = number(r.violation);
  j["rho"] = number(r.rho);
  j["gate"] = number(r.gate);
  const std::string line = j.dump();
  std::lock_guard<std::mutex> lock(mu_);
  os_ << line << '\n';
}

}  // namespace nfisac
