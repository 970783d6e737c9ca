#pragma once

// Reference computations written from the model definitions with plain loops,
// sharing no code with the library beyond the steering vectors.

#include <algorithm>
#include <cmath>
#include <vector>

#include "nfisac/channel.hpp"
#include "nfisac/rsma_signal.hpp"
#include "nfisac/sensing_crb.hpp"

namespace oracle {

using nfisac::cplx;
using nfisac::CMat;
using nfisac::CVec;
using nfisac::RMat;

struct Sinr {
  std::vector<double> common, priv;
};

// Column 0 of p is the common stream; it is decoded first with every private
// stream as interference, then removed.
inline Sinr sinr(const CMat& h, const CMat& p, double noise) {
  Sinr s;
  const int k_users = static_cast<int>(h.cols());
  for (int k = 0; k < k_users; ++k) {
    auto gain = [&](int j) {
      cplx acc = 0;
      for (int n = 0; n < h.rows(); ++n) acc += std::conj(h(n, k)) * p(n, j);
      return std::norm(acc);
    };
    double interf = noise;
    for (int j = 1; j <= k_users; ++j) interf += gain(j);
    s.common.push_back(gain(0) / interf);
    s.priv.push_back(gain(k + 1) / (interf - gain(k + 1)));
  }
  return s;
}

// max_c min_k (c_k + r_k) s.t. sum c = budget, c >= 0, by bisection on the level.
inline double max_min_level(const std::vector<double>& privates, double budget) {
  double lo = *std::min_element(privates.begin(), privates.end());
  double hi = *std::max_element(privates.begin(), privates.end()) + budget;
  for (int it = 0; it < 200; ++it) {
    const double t = 0.5 * (lo + hi);
    double need = 0.0;
    for (double r : privates) need += std::max(0.0, t - r);
    (need <= budget ? lo : hi) = t;
  }
  return lo;
}

// 4M x 4M information matrix from the derivatives of the echo mean
// mu = sum_m b_m a_r(m) a_t(m)^T X over a CPI with X X^H = L R, assembled as
// (2 / sigma^2) Re sum_l dmu_l^H dmu_l' with X = P S, S S^H = L I.
inline RMat fim_from_mean(const nfisac::ArrayGeometry& g, const nfisac::TargetSet& t, const CMat& p,
                          const nfisac::SensingConfig& cfg) {
  using namespace nfisac;
  const int m = t.size();
  const int L = cfg.cpi_length;
  const Eigen::Index s_count = p.cols();
  CMat s(s_count, L);
  for (Eigen::Index i = 0; i < s_count; ++i) {
    for (int l = 0; l < L; ++l) s(i, l) = std::polar(1.0, 2.0 * kPi * static_cast<double>(i * l) / L);
  }
  const CMat x = p * s;
  std::vector<CMat> d(4 * m);
  for (int i = 0; i < m; ++i) {
    const CVec at = steering_vector(g, ArraySide::Tx, t.positions[i]);
    const CVec ar = steering_vector(g, ArraySide::Rx, t.positions[i]);
    const SteeringDerivatives dt = steering_derivatives(g, ArraySide::Tx, t.positions[i]);
    const SteeringDerivatives dr = steering_derivatives(g, ArraySide::Rx, t.positions[i]);
    const cplx b = t.gains[i];
    d[i] = b * (dr.d_angle * at.transpose() + ar * dt.d_angle.transpose()) * x;
    d[m + i] = b * (dr.d_range * at.transpose() + ar * dt.d_range.transpose()) * x;
    d[2 * m + i] = (ar * at.transpose()) * x;
    d[3 * m + i] = cplx(0, 1) * (ar * at.transpose()) * x;
  }
  RMat f(4 * m, 4 * m);
  for (int i = 0; i < 4 * m; ++i) {
    for (int j = 0; j < 4 * m; ++j) {
      cplx acc = 0;
      for (Eigen::Index c = 0; c < d[i].cols(); ++c) {
        for (Eigen::Index r = 0; r < d[i].rows(); ++r) acc += std::conj(d[i](r, c)) * d[j](r, c);
      }
      f(i, j) = 2.0 / cfg.noise * acc.real();
    }
  }
  return f;
}

// Best phase for one analog entry by exhaustive search over a uniform grid.
template <typename Objective>
double grid_best_phase(Objective obj, int points) {
  double best = 0.0, best_val = HUGE_VAL;
  for (int i = 0; i < points; ++i) {
    const double ph = -nfisac::kPi + 2.0 * nfisac::kPi * i / points;
    const double v = obj(ph);
    if (v < best_val) {
      best_val = v;
      best = ph;
    }
  }
  return best;
}

}  // namespace oracle
