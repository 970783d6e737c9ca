#pragma once

#include <iosfwd>
#include <mutex>
#include <string>

namespace nfisac {

struct IterationRecord {
  std::string run;     // free-form tag, e.g. "rsma-fc/seed=3"
  std::string level;   // "inner", "outer", "mm", "elastic"
  int outer = 0;
  int inner = 0;
  double objective = 0.0;
  double violation = 0.0;
  double rho = 0.0;
  double gate = 0.0;
};

// Line-delimited JSON sink; safe to share between worker threads.
class IterationLog {
 public:
  explicit IterationLog(std::ostream& os) : os_(os) {}
  void write(const IterationRecord& r);

 private:
  std::ostream& os_;
  std::mutex mu_;
};

}  // namespace nfisac
