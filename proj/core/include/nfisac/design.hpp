#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nfisac/inner_problem.hpp"
#include "nfisac/iteration_log.hpp"
#include "nfisac/scenario.hpp"

namespace nfisac {

enum class Architecture { FullyDigital, FullyConnected, PartiallyConnected, TwoStage };

const char* architecture_name(Architecture arch);

// Physical units: analog entries unit modulus (or zero off-support for the
// partially-connected network), digital in sqrt(watts).
struct HybridBeamformer {
  Architecture architecture = Architecture::FullyDigital;
  CMat analog;
  CMat digital;
  CMat aux_precoder;  // P at the returned point

  CMat product() const { return analog * digital; }
  // Diagonal of the partially-connected phase network, one entry per antenna.
  CVec phases() const;
};

// Everything an optimizer needs from a scenario, in normalized units:
// precoders scaled by 1/sqrt(P_th), channels by sqrt(P_th)/sigma.
struct DesignContext {
  CMat channels;
  std::shared_ptr<const SensingModel> sensing;
  double power_budget = 1.0;
  double noise = 1.0;
  double rate_threshold = 0.0;
  double crb_reference = 1.0;  // Tr(CRB) of the isotropic covariance at full power
  int n_tx = 0;
  int n_rf = 0;
  AccessScheme scheme = AccessScheme::Rsma;

  static DesignContext from_scenario(const Scenario& s, AccessScheme scheme,
                                     FieldMode comm_mode = FieldMode::Near);

  int users() const { return static_cast<int>(channels.cols()); }
  double amplitude() const { return std::sqrt(power_budget); }
  // Tr(CRB) / reference of the normalized precoder, +inf when unobservable.
  double sensing_objective(const CMat& x) const;
  CrbResult crb(const CMat& x) const;
};

struct Audit {
  double power = 0.0;         // normalized squared norm after projection
  RateReport rates;
  double min_rate = 0.0;
  bool rate_ok = false;
  bool observable = false;
  CrbResult crb;              // physical
  double objective = HUGE_VAL;
  bool feasible() const { return rate_ok && observable; }
};

struct OptimizeOptions {
  // Outer penalty loop.
  double rho0 = 1.0;
  double shrink = 0.5;
  double gate_factor = 0.9;
  int max_outer = 30;
  double outer_tol = 1e-5;       // ||P - FW||_inf, normalized units
  double objective_tol = 1e-5;   // relative change of the sensing objective between outer steps
  // Inner loops (BCD and the precoder MM).
  int max_inner = 100;
  double inner_tol = 1e-6;       // relative decrease that ends an inner loop
  // A conic step is kept only if the true min rate stays above R_th - guard_tol.
  double guard_tol = 1e-5;
  // Audit slack on the returned beamformer.
  double rate_tol = 1e-4;
  ConicSolverOptions conic;
  IterationLog* log = nullptr;
  std::string tag;
};

enum class OptimizeStatus { Converged, NotConverged, Infeasible };

const char* optimize_status_name(OptimizeStatus s);

struct PddState {
  CMat dual;                   // D, normalized
  double penalty = 1.0;        // rho
  double gate = HUGE_VAL;      // psi
  double shrink = 0.5;         // mu
  std::vector<double> common;  // c from the last accepted inner solve
  RMat sensing_aux;            // U from the last accepted inner solve
  std::vector<double> history; // sensing objective after each outer step
};

struct OptimizeResult {
  HybridBeamformer beamformer;
  std::vector<double> allocation;
  CrbResult crb;                 // from the returned FW
  double crb_aux_trace = 0.0;    // from P at the last iterate
  RateReport rates;
  double min_rate = 0.0;
  double objective = HUGE_VAL;   // Tr(CRB) / reference
  int outer_iterations = 0;
  int inner_iterations = 0;
  int conic_solves = 0;
  double violation = 0.0;        // ||P - FW||_inf at the last iterate
  std::vector<std::vector<double>> inner_traces;  // objective per inner step, one list per outer step
  OptimizeStatus status = OptimizeStatus::Infeasible;
  PddState state;
};

// Scale into the unit power ball (no-op when already inside).
CMat project_power(const CMat& x);

// Rates with the max-min common split and the CRB of the normalized precoder.
Audit audit_precoder(const DesignContext& ctx, const CMat& x, double rate_tol);

// Best audited point seen during a run, in normalized units. Only points that
// pass the rate audit and have an invertible FIM are kept; the digital part is
// power-projected before the audit.
class Incumbent {
 public:
  bool offer(const DesignContext& ctx, const CMat& analog, const CMat& digital, const CMat& precoder,
             double rate_tol);
  bool has_value() const { return set_; }
  double objective() const { return audit_.objective; }
  // Writes beamformer (physical units), CRB, rates and objective.
  void fill(OptimizeResult& r, const DesignContext& ctx, Architecture arch) const;

 private:
  bool set_ = false;
  CMat analog_, digital_, precoder_;
  Audit audit_;
};

// Same fields as Incumbent::fill for a point that failed the audit.
void fill_unaudited(OptimizeResult& r, const DesignContext& ctx, Architecture arch, const CMat& analog,
                    const CMat& digital, const CMat& precoder);

// Min rate with the max-min split.
double min_rate(const DesignContext& ctx, const CMat& x);

// Column 0 carries the normalized sum of the user channels (zero for SDMA),
// column k the channel of user k. Unit Frobenius norm.
CMat matched_filter_start(const DesignContext& ctx);

// Heuristic analog matrix: user steering vectors assigned to RF chains in the
// order k = mod(j, K) + 1 (1-based j), leftover chains take the phase of the
// steering sum. Partially connected keeps the block-diagonal support only.
CMat heuristic_analog(const CMat& user_steering, int n_rf, Architecture arch);

// Block-diagonal support of the partially-connected network (N_t x N_f, 0/1).
RMat partial_support(int n_tx, int n_rf);

}  // namespace nfisac
