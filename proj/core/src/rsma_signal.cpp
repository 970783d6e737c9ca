#include "nfisac/rsma_signal.hpp"

#include <algorithm>
#include <numeric>

namespace nfisac {

double wmmse_tau() { return 1.0 / std::log(2.0) + std::log2(std::log(2.0)); }

double RateReport::min_rate() const {
  if (totals.empty()) return 0.0;
  return *std::min_element(totals.begin(), totals.end());
}

PowerDecomposition received_powers(const CMat& channels, const CMat& precoder, double noise) {
  const Eigen::Index k_users = channels.cols();
  require_dims(precoder.cols() == k_users + 1, "precoder needs K + 1 columns");
  require_dims(precoder.rows() == channels.rows(), "precoder and channel lengths differ");
  if (!(noise >= 0.0)) throw DomainError("noise power must be nonnegative");
  // g(k, j) = h_k^H p_j
  const CMat g = channels.adjoint() * precoder;
  PowerDecomposition out;
  out.noise = noise;
  out.users.resize(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    UserPowers& u = out.users[k];
    double others = 0.0;
    for (Eigen::Index j = 1; j <= k_users; ++j) {
      if (j != k + 1) others += std::norm(g(k, j));
    }
    u.s_common = std::norm(g(k, 0));
    u.s_private = std::norm(g(k, k + 1));
    u.i_private = others + noise;
    u.t_private = u.s_private + u.i_private;
    u.i_common = u.t_private;
    u.t_common = u.s_common + u.i_common;
  }
  return out;
}

PowerDecomposition received_powers(const ChannelSet& channels, const CMat& precoder, double noise) {
  return received_powers(channels.as_matrix(), precoder, noise);
}

RateReport achievable_rates(const PowerDecomposition& powers, const std::vector<double>& allocation) {
  const std::size_t k_users = powers.users.size();
  require_dims(allocation.size() == k_users, "allocation length must equal the user count");
  for (double c : allocation) {
    if (!(c >= 0.0)) throw DomainError("common-rate allocation entries must be nonnegative");
  }
  RateReport r;
  r.allocation = allocation;
  r.common_rates.resize(k_users);
  r.private_rates.resize(k_users);
  r.totals.resize(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const UserPowers& u = powers.users[k];
    r.common_rates[k] = u.i_common > 0 ? std::log2(1.0 + u.s_common / u.i_common) : 0.0;
    r.private_rates[k] = u.i_private > 0 ? std::log2(1.0 + u.s_private / u.i_private) : 0.0;
    r.totals[k] = allocation[k] + r.private_rates[k];
  }
  r.common_rate = k_users ? *std::min_element(r.common_rates.begin(), r.common_rates.end()) : 0.0;
  const double used = std::accumulate(allocation.begin(), allocation.end(), 0.0);
  r.allocation_feasible = used <= r.common_rate * (1.0 + 1e-12) + 1e-12;
  return r;
}

std::vector<double> max_min_allocation(const PowerDecomposition& powers) {
  const std::size_t k_users = powers.users.size();
  const RateReport base = achievable_rates(powers, std::vector<double>(k_users, 0.0));
  std::vector<double> p = base.private_rates;
  double budget = base.common_rate;
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  // Raise the lowest private rates to a common level until the budget runs out.
  double level = sorted.empty() ? 0.0 : sorted.front();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double next = i + 1 < sorted.size() ? sorted[i + 1] : HUGE_VAL;
    const double cost = static_cast<double>(i + 1) * (next - level);
    if (cost >= budget) {
      level += budget / static_cast<double>(i + 1);
      budget = 0.0;
      break;
    }
    budget -= cost;
    level = next;
  }
  std::vector<double> alloc(k_users);
  for (std::size_t k = 0; k < k_users; ++k) alloc[k] = std::max(0.0, level - p[k]);
  // Guard the sum against rounding above the common rate.
  const double total = std::accumulate(alloc.begin(), alloc.end(), 0.0);
  if (total > base.common_rate && total > 0) {
    const double s = base.common_rate / total;
    for (double& c : alloc) c *= s;
  }
  return alloc;
}

WmmseAuxiliaries wmmse_auxiliaries(const CMat& channels, const CMat& precoder, double noise) {
  const PowerDecomposition pw = received_powers(channels, precoder, noise);
  const CMat g = channels.adjoint() * precoder;
  const Eigen::Index k_users = channels.cols();
  WmmseAuxiliaries a;
  const double ln2 = std::log(2.0);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const UserPowers& u = pw.users[k];
    if (!(u.t_common > 0.0) || !(u.t_private > 0.0)) {
      throw DegenerateEqualizerError("zero received power at user " + std::to_string(k));
    }
    // w = p^H h / T = conj(h^H p) / T
    a.eq_common.push_back(std::conj(g(k, 0)) / u.t_common);
    a.eq_private.push_back(std::conj(g(k, k + 1)) / u.t_private);
    a.mmse_common.push_back(u.i_common / u.t_common);
    a.mmse_private.push_back(u.i_private / u.t_private);
    a.wt_common.push_back(1.0 / (a.mmse_common.back() * ln2));
    a.wt_private.push_back(1.0 / (a.mmse_private.back() * ln2));
  }
  return a;
}

WmmseAuxiliaries wmmse_auxiliaries(const ChannelSet& channels, const CMat& precoder, double noise) {
  return wmmse_auxiliaries(channels.as_matrix(), precoder, noise);
}

double equalizer_mse(cplx equalizer, double total_power, cplx gain) {
  return std::norm(equalizer) * total_power - 2.0 * std::real(equalizer * gain) + 1.0;
}

double weighted_mse(double weight, double mse) {
  if (!(weight > 0.0)) throw DomainError("WMMSE weight must be positive");
  return weight * mse - std::log2(weight);
}

}  // namespace nfisac
