#pragma once

#include <string>
#include <vector>

#include "nfisac/channel.hpp"

namespace nfisac {

struct TargetSet {
  std::vector<PolarPosition> positions;
  std::vector<cplx> gains;

  int size() const { return static_cast<int>(positions.size()); }
  void validate() const;
};

struct SensingConfig {
  int cpi_length = 256;
  double noise = 1e-12;

  void validate() const;
  // 2 L / sigma0^2
  double fim_scale() const { return 2.0 * cpi_length / noise; }
};

// Parameter order used by every FIM in this library:
//   angles (M), ranges (M), gain real parts (M), gain imaginary parts (M).
// j11 is the angle/range block, j22 the gain block. The j blocks exclude the
// 2L/sigma0^2 factor, which is kept in `scale`.
struct FimBundle {
  CMat a_tx, a_rx;
  CMat d_tx_angle, d_tx_range, d_rx_angle, d_rx_range;
  struct GainTerms {
    CMat angle_angle, angle_range, range_range;
    CMat angle_gain, range_gain, gain_gain;
  } g;
  RMat j11, j12, j22;
  double scale = 1.0;

  int targets() const { return static_cast<int>(a_tx.cols()); }
  // Scaled 4M x 4M information matrix.
  RMat full() const;
};

struct CrbResult {
  RMat crb;
  double trace = 0.0;
  double angle_trace = 0.0;
  double range_trace = 0.0;
};

class RankDeficiencyError : public RankError {
 public:
  RankDeficiencyError(const std::string& what, std::vector<std::string> params)
      : RankError(what), parameters(std::move(params)) {}
  std::vector<std::string> parameters;
};

FimBundle assemble_fim(const ArrayGeometry& geometry, const TargetSet& targets,
                       const CMat& covariance, const SensingConfig& config);

CrbResult crb_trace(const FimBundle& bundle, const SensingConfig& config);

// Brute-force information matrix of the noiseless echo mean, by central
// differences. Small instances only.
RMat fim_fd_oracle(const ArrayGeometry& geometry, const TargetSet& targets, const CMat& precoder,
                   const SensingConfig& config);

std::string fim_parameter_name(int index, int n_targets);

// Precomputed steering data for repeated FIM evaluations on one target set.
class SensingModel {
 public:
  SensingModel(const ArrayGeometry& geometry, const TargetSet& targets, const SensingConfig& config);

  int targets() const { return m_; }
  int tx_antennas() const { return static_cast<int>(tx_.rows()); }
  const SensingConfig& config() const { return config_; }

  // Unscaled 4M x 4M FIM for a Hermitian covariance.
  RMat fim(const CMat& covariance) const;
  // Unscaled FIM of the covariance sum_i u_i v_i^H + v_i u_i^H given as columns.
  RMat fim_rank2(const CMat& u, const CMat& v) const;
  // CRB of the 2M angle/range parameters; throws RankDeficiencyError.
  CrbResult crb(const CMat& covariance) const;
  CrbResult crb_from_fim(const RMat& fim_unscaled) const;

 private:
  RMat assemble(const CMat& gram_tx) const;

  int m_;
  SensingConfig config_;
  CMat tx_;        // [A_t, dA_t/dangle, dA_t/drange]
  CMat rx_gram_;   // T_r^H T_r, T_r = [A_r, dA_r/dangle, dA_r/drange]
  struct Term {
    cplx coef;
    int rx;
    int tx;
  };
  std::vector<std::vector<Term>> terms_;
};

}  // namespace nfisac
