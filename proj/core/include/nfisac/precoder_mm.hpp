#pragma once

#include "nfisac/design.hpp"

namespace nfisac {

// Normalized precoder x behind a fixed mapping (identity for the fully-digital
// design, the analog matrix for the two-stage design).
struct MmResult {
  CMat x;
  std::vector<double> trace;  // objective at the start and after every accepted step
  int iterations = 0;
  int solves = 0;
  double min_rate = 0.0;
  bool reached = false;       // restore only: min rate got to the target
};

InnerInputs make_inner_inputs(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                              const CMat& anchor, InnerObjective objective, double rate_threshold);

// Power projection through the mapping: ||mapping x||_F <= 1.
CMat project_mapped(const CMat& mapping, const CMat& x);

// Minimize Tr(CRB) by repeated convex surrogates. The start must meet the
// rate threshold; steps that raise the objective or break the rates are refused.
MmResult precoder_mm(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                     const CMat& start, const OptimizeOptions& opt);

// Push the worst rate deficit below zero with the elastic surrogate. Stops at
// the first point whose min rate reaches `target`, or when progress stalls.
MmResult restore_rates(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                       const CMat& start, double target, const OptimizeOptions& opt,
                       int max_iterations = 60);

}  // namespace nfisac
