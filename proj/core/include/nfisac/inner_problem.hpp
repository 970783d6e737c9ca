#pragma once

#include <optional>
#include <vector>

#include "nfisac/conic_program.hpp"
#include "nfisac/rsma_signal.hpp"
#include "nfisac/sensing_crb.hpp"

namespace nfisac {

// fc / pc: optimize the auxiliary precoder P with the penalty term.
// two_stage: optimize W behind a fixed analog matrix.
// fully_digital: optimize P with no penalty.
enum class InnerVariant { FullyConnected, PartiallyConnected, TwoStage, FullyDigital };
enum class AccessScheme { Rsma, Sdma };
// Sensing: weighted Tr(U^-1). Elastic: maximize the private-rate slack (sensing dropped).
enum class InnerObjective { Sensing, Elastic };

// All quantities are normalized: precoders in units of sqrt(P_th), channels
// scaled by sqrt(P_th)/sigma so that the noise power is one.
struct InnerInputs {
  InnerVariant variant = InnerVariant::FullyDigital;
  AccessScheme scheme = AccessScheme::Rsma;
  InnerObjective objective = InnerObjective::Sensing;

  CMat channels;  // N_t x K
  CMat mapping;   // N_t x N_a; identity unless two-stage
  CMat anchor;    // N_a x (K+1), the linearization point
  WmmseAuxiliaries aux;  // evaluated at mapping * anchor
  double rate_threshold = 0.0;

  const SensingModel* sensing = nullptr;
  double power_budget = 1.0;    // physical covariance = power_budget * normalized
  double crb_reference = 1.0;   // Tr(CRB) normalization

  // (1 / 2 rho) ||P - target||^2, target = F W - rho D.
  std::optional<CMat> penalty_target;
  double rho = 1.0;
};

struct InnerLayout {
  int antennas = 0;       // N_a
  int streams = 0;        // K + 1
  int first_stream = 0;   // 1 for SDMA (common column fixed to zero)
  int x_offset = 0;
  int c_offset = -1;
  int u_offset = -1;
  int v_offset = -1;
  int t_index = -1;
  int s_index = -1;
  RVec param_scale;       // diagonal congruence applied to the 4M x 4M FIM

  int x_index(int stream, int antenna, bool imag) const {
    return x_offset + 2 * ((stream - first_stream) * antennas + antenna) + (imag ? 1 : 0);
  }
};

struct InnerProblem {
  ConicProgram program;
  InnerLayout layout;
  int users = 0;
  int targets = 0;
};

struct InnerSolution {
  ConicSolution raw;
  CMat x;                       // N_a x (K+1)
  std::vector<double> common;   // c
  RMat u;                       // Schur bound in unscaled FIM units (2M x 2M)
  double penalty_epigraph = 0.0;
  double slack = 0.0;           // elastic variable
};

// Census of variables and blocks, in construction order:
//   variables: x (2 N_a (K+1) reals, Re/Im interleaved per antenna, streams
//   outer), c (K), U and V upper triangles (2M(2M+1)/2 each), t, s.
//   blocks: fim (psd 4M), lift (psd 4M), power (soc 1 + 2 N_a (K+1)),
//   penalty (soc 2 + 2 N_t (K+1)), per user common (soc 2 + 2(K+1)) and
//   private (soc 2 + 2K) rate cones, c >= 0 (nonneg K).
// SDMA drops stream 0 and c; Elastic drops fim, lift, U and V.
InnerProblem build_inner_problem(const InnerInputs& in);

InnerSolution solve_inner(const InnerProblem& problem, const ConicSolverOptions& options = {});

}  // namespace nfisac
