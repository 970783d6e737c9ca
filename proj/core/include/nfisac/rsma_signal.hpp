#pragma once

#include <vector>

#include "nfisac/channel.hpp"

namespace nfisac {

// Received powers at one user. Column 0 of the precoder is the common stream.
struct UserPowers {
  double s_common = 0.0;
  double i_common = 0.0;
  double s_private = 0.0;
  double i_private = 0.0;
  double t_common = 0.0;
  double t_private = 0.0;
};

struct PowerDecomposition {
  std::vector<UserPowers> users;
  double noise = 0.0;
};

struct RateReport {
  std::vector<double> common_rates;
  double common_rate = 0.0;
  std::vector<double> private_rates;
  std::vector<double> totals;
  std::vector<double> allocation;
  bool allocation_feasible = true;

  double min_rate() const;
};

struct WmmseAuxiliaries {
  std::vector<cplx> eq_common;
  std::vector<cplx> eq_private;
  std::vector<double> wt_common;
  std::vector<double> wt_private;
  std::vector<double> mmse_common;
  std::vector<double> mmse_private;
};

class DegenerateEqualizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1/ln 2 + log2(ln 2): the constant linking weighted MSE and rate.
double wmmse_tau();

// channels: N x K (columns h_k); precoder: N x (K + 1).
PowerDecomposition received_powers(const CMat& channels, const CMat& precoder, double noise);
PowerDecomposition received_powers(const ChannelSet& channels, const CMat& precoder, double noise);

RateReport achievable_rates(const PowerDecomposition& powers, const std::vector<double>& allocation);

// Split of the common rate that maximizes the smallest user total (water filling).
std::vector<double> max_min_allocation(const PowerDecomposition& powers);

WmmseAuxiliaries wmmse_auxiliaries(const CMat& channels, const CMat& precoder, double noise);
WmmseAuxiliaries wmmse_auxiliaries(const ChannelSet& channels, const CMat& precoder, double noise);

// MSE of a scalar equalizer: |w|^2 T - 2 Re(w h^H p) + 1.
double equalizer_mse(cplx equalizer, double total_power, cplx gain);

// eta * mse - log2(eta).
double weighted_mse(double weight, double mse);

}  // namespace nfisac
