#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nfisac {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestOptions {
  std::uint64_t seed = 1;
  int convergence_seeds = 10;
  int threads = 0;
};

// Oracle and invariant suites. Numbering matches the acceptance list:
//   1 FIM against finite differences, 2 CRB identities, 3 rate/MSE identity,
//   4 closed-form block updates, 5 penalty-loop convergence on the desk profile.
CheckResult check_fim_oracle(const SelftestOptions& opt);
CheckResult check_crb_identities(const SelftestOptions& opt);
CheckResult check_wmmse_identity(const SelftestOptions& opt);
CheckResult check_block_updates(const SelftestOptions& opt);
CheckResult check_convergence(const SelftestOptions& opt);

// Runs all five, printing one line each to `progress` when given.
std::vector<CheckResult> run_selftest(const SelftestOptions& opt, std::ostream* progress = nullptr);

std::string format_check(const CheckResult& r);
// JSON array of {id, name, passed, detail, seconds}.
std::string checks_json(const std::vector<CheckResult>& results);

}  // namespace nfisac
