#pragma once

#include "nfisac/precoder_mm.hpp"

namespace nfisac {

using PddOptions = OptimizeOptions;

// Least-squares digital precoder: argmin_W ||target - F W||_F. Throws RankError
// when F has dependent columns unless `min_norm` asks for the minimum-norm
// minimizer instead.
CMat update_digital(const CMat& analog, const CMat& target, bool min_norm = false);

// Orthonormal basis of the column space of F.
CMat column_basis(const CMat& analog);

// Tr(F^H F Y) - 2 Re Tr(F^H Z) with Y = W W^H, Z = target W^H; equals
// ||target - F W||^2 - ||target||^2.
double analog_objective(const CMat& analog, const CMat& digital, const CMat& target);

// One Gauss-Seidel sweep over the free analog entries (all entries for the
// fully-connected network, the block-diagonal support for the partially
// connected one). Each entry moves to the phase of its coefficient chi;
// entries with chi = 0 are held.
CMat update_analog(Architecture arch, const CMat& analog, const CMat& digital, const CMat& target);

// Per-entry coefficient chi_{n,i} = Z_{n,i} - (F Y)_{n,i} + F_{n,i} Y_{i,i}.
cplx analog_coefficient(const CMat& analog, const CMat& digital, const CMat& target, int n, int i);

// Structure check: unit modulus everywhere (fc) or on the block support only (pc).
bool analog_matches(Architecture arch, const CMat& analog, int n_tx, int n_rf, double tol = 1e-9);

struct BcdTrace {
  std::vector<double> objective;  // augmented Lagrangian, start and after each sweep
  int solves = 0;
};

// Inner loop of the penalty method for fixed dual D and penalty rho (normalized
// units). Updates P (guarded convex step), W (least squares), F (one sweep).
BcdTrace bcd_inner(const DesignContext& ctx, Architecture arch, CMat& precoder, CMat& analog,
                   CMat& digital, PddState& state, const OptimizeOptions& opt);

// Augmented Lagrangian Tr(CRB(P))/reference + ||P - F W + rho D||^2 / (2 rho).
double augmented_objective(const DesignContext& ctx, const CMat& precoder, const CMat& analog,
                           const CMat& digital, const PddState& state);

// Hybrid design for the fc or pc network. `initial_analog` seeds F when there
// is no compatible warm start. A warm start is given in physical units.
OptimizeResult pdd_optimize(const DesignContext& ctx, Architecture arch, const CMat& initial_analog,
                            const OptimizeOptions& opt, const HybridBeamformer* warm = nullptr);

// Convex surrogate loop on P alone.
OptimizeResult optimize_fully_digital(const DesignContext& ctx, const OptimizeOptions& opt,
                                      const HybridBeamformer* warm = nullptr);

struct MaxMinResult {
  double rate = 0.0;
  CMat precoder;  // physical product achieving `rate`
  int oracle_calls = 0;
};

// Largest threshold for which the rate constraints alone are met, by bisection
// over elastic feasibility runs behind a fixed mapping (identity for the fully
// digital array). The returned rate is always achieved by `precoder`.
MaxMinResult max_min_rate(const DesignContext& ctx, const CMat& mapping, const OptimizeOptions& opt,
                          const CMat* warm_product = nullptr, double resolution = 1e-3);

}  // namespace nfisac
