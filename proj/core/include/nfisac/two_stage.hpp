#pragma once

#include "nfisac/pdd_optimizer.hpp"

namespace nfisac {

using TwoStageResult = OptimizeResult;

// Analog stage from the users' LoS steering vectors, then the digital precoder
// behind it by convex surrogates. No penalty loop.
TwoStageResult two_stage_optimize(const DesignContext& ctx, const CMat& analog,
                                  const OptimizeOptions& opt, const HybridBeamformer* warm = nullptr);

}  // namespace nfisac
