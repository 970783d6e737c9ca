#include "nfisac/sensing_crb.hpp"

#include <Eigen/Eigenvalues>

namespace nfisac {

namespace {

constexpr double kConditionLimit = 1e12;

void check_hermitian(const CMat& q) {
  require_dims(q.rows() == q.cols(), "covariance must be square");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DomainError("covariance is not Hermitian");
  }
}

// Inverse of a symmetric matrix, or RankDeficiencyError naming the parameters
// that dominate the weak eigen-directions.
RMat guarded_inverse(const RMat& a, int offset, int n_targets, const char* what) {
  Eigen::SelfAdjointEigenSolver<RMat> es(a);
  const RVec& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  std::vector<std::string> weak;
  if (top > 0.0) {
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > top / kConditionLimit) continue;
      for (Eigen::Index r = 0; r < ev.size(); ++r) {
        if (std::abs(es.eigenvectors()(r, i)) > 0.3) {
          weak.push_back(fim_parameter_name(offset + static_cast<int>(r), n_targets));
        }
      }
    }
  }
  if (top == 0.0) {
    for (Eigen::Index r = 0; r < ev.size(); ++r) {
      weak.push_back(fim_parameter_name(offset + static_cast<int>(r), n_targets));
    }
  }
  if (!weak.empty()) {
    std::string msg = std::string(what) + " is singular; unobservable:";
    for (const auto& p : weak) msg += " " + p;
    throw RankDeficiencyError(msg, weak);
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

CrbResult crb_from_blocks(const RMat& j11, const RMat& j12, const RMat& j22, double scale) {
  const int m = static_cast<int>(j11.rows() / 2);
  const RMat j22inv = guarded_inverse(j22, 2 * m, m, "gain information block");
  RMat schur = j11 - j12 * j22inv * j12.transpose();
  schur = (0.5 * (schur + schur.transpose())).eval();
  CrbResult out;
  out.crb = guarded_inverse(schur, 0, m, "angle/range Schur complement") / scale;
  out.crb = (0.5 * (out.crb + out.crb.transpose())).eval();
  out.angle_trace = out.crb.diagonal().head(m).sum();
  out.range_trace = out.crb.diagonal().tail(m).sum();
  out.trace = out.angle_trace + out.range_trace;
  return out;
}

}  // namespace

void TargetSet::validate() const {
  if (positions.empty()) throw DomainError("at least one target is required");
  require_dims(gains.size() == positions.size(), "one gain per target is required");
  for (const auto& p : positions) {
    if (!(p.range > 0.0)) throw DomainError("target range must be positive");
  }
}

void SensingConfig::validate() const {
  if (cpi_length < 1) throw DomainError("CPI length must be >= 1");
  if (!(noise > 0.0)) throw DomainError("sensing noise must be positive");
}

std::string fim_parameter_name(int index, int n_targets) {
  static const char* kinds[] = {"angle", "range", "gain_re", "gain_im"};
  return std::string(kinds[index / n_targets]) + "[" + std::to_string(index % n_targets) + "]";
}

RMat FimBundle::full() const {
  const Eigen::Index h = j11.rows();
  RMat j(2 * h, 2 * h);
  j << j11, j12, j12.transpose(), j22;
  return scale * j;
}

SensingModel::SensingModel(const ArrayGeometry& geometry, const TargetSet& targets,
                           const SensingConfig& config)
    : m_(targets.size()), config_(config) {
  geometry.validate();
  targets.validate();
  config.validate();
  tx_.resize(geometry.n_tx, 3 * m_);
  CMat rx(geometry.n_rx, 3 * m_);
  for (int m = 0; m < m_; ++m) {
    const PolarPosition& p = targets.positions[m];
    tx_.col(m) = steering_vector(geometry, ArraySide::Tx, p);
    rx.col(m) = steering_vector(geometry, ArraySide::Rx, p);
    const SteeringDerivatives dt = steering_derivatives(geometry, ArraySide::Tx, p);
    const SteeringDerivatives dr = steering_derivatives(geometry, ArraySide::Rx, p);
    tx_.col(m_ + m) = dt.d_angle;
    tx_.col(2 * m_ + m) = dt.d_range;
    rx.col(m_ + m) = dr.d_angle;
    rx.col(2 * m_ + m) = dr.d_range;
  }
  rx_gram_ = rx.adjoint() * rx;
  // dG/dx_m = beta_m (da_r a_t^T + a_r da_t^T); gains enter linearly.
  terms_.resize(4 * m_);
  for (int m = 0; m < m_; ++m) {
    const cplx b = targets.gains[m];
    terms_[m] = {{b, m_ + m, m}, {b, m, m_ + m}};
    terms_[m_ + m] = {{b, 2 * m_ + m, m}, {b, m, 2 * m_ + m}};
    terms_[2 * m_ + m] = {{cplx(1, 0), m, m}};
    terms_[3 * m_ + m] = {{cplx(0, 1), m, m}};
  }
}

RMat SensingModel::assemble(const CMat& gram_tx) const {
  const int n = 4 * m_;
  RMat j(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      cplx acc = 0.0;
      for (const Term& a : terms_[p]) {
        for (const Term& b : terms_[q]) {
          acc += std::conj(a.coef) * b.coef * rx_gram_(a.rx, b.rx) * gram_tx(a.tx, b.tx);
        }
      }
      j(p, q) = j(q, p) = acc.real();
    }
  }
  return j;
}

RMat SensingModel::fim(const CMat& covariance) const {
  require_dims(covariance.rows() == tx_.rows(), "covariance size must equal N_t");
  // c_i^H R^* c_j
  const CMat gram_tx = tx_.adjoint() * covariance.conjugate() * tx_;
  return assemble(gram_tx);
}

RMat SensingModel::fim_rank2(const CMat& u, const CMat& v) const {
  require_dims(u.rows() == tx_.rows() && v.rows() == tx_.rows() && u.cols() == v.cols(),
               "rank-2 factors must be N_t x r");
  // R^* = conj(u) v^T + conj(v) u^T
  const CMat tu = tx_.adjoint() * u.conjugate();
  const CMat tv = tx_.adjoint() * v.conjugate();
  const CMat gram_tx = tu * tv.adjoint() + tv * tu.adjoint();
  return assemble(gram_tx);
}

CrbResult SensingModel::crb_from_fim(const RMat& j) const {
  const int h = 2 * m_;
  return crb_from_blocks(j.topLeftCorner(h, h), j.topRightCorner(h, h), j.bottomRightCorner(h, h),
                         config_.fim_scale());
}

CrbResult SensingModel::crb(const CMat& covariance) const { return crb_from_fim(fim(covariance)); }

FimBundle assemble_fim(const ArrayGeometry& geometry, const TargetSet& targets,
                       const CMat& covariance, const SensingConfig& config) {
  check_hermitian(covariance);
  const SensingModel model(geometry, targets, config);
  const int m = targets.size();
  FimBundle b;
  b.a_tx.resize(geometry.n_tx, m);
  b.a_rx.resize(geometry.n_rx, m);
  b.d_tx_angle.resize(geometry.n_tx, m);
  b.d_tx_range.resize(geometry.n_tx, m);
  b.d_rx_angle.resize(geometry.n_rx, m);
  b.d_rx_range.resize(geometry.n_rx, m);
  for (int i = 0; i < m; ++i) {
    const PolarPosition& p = targets.positions[i];
    b.a_tx.col(i) = steering_vector(geometry, ArraySide::Tx, p);
    b.a_rx.col(i) = steering_vector(geometry, ArraySide::Rx, p);
    const SteeringDerivatives dt = steering_derivatives(geometry, ArraySide::Tx, p);
    const SteeringDerivatives dr = steering_derivatives(geometry, ArraySide::Rx, p);
    b.d_tx_angle.col(i) = dt.d_angle;
    b.d_tx_range.col(i) = dt.d_range;
    b.d_rx_angle.col(i) = dr.d_angle;
    b.d_rx_range.col(i) = dr.d_range;
  }
  const CMat rc = covariance.conjugate();
  auto tx_form = [&](const CMat& x, const CMat& y) -> CMat { return x.adjoint() * rc * y; };
  const CMat& at = b.a_tx;
  const CMat& ar = b.a_rx;
  const CMat beta = Eigen::Map<const CVec>(targets.gains.data(), m).asDiagonal();
  const CMat tt = tx_form(at, at);
  const CMat rr = ar.adjoint() * ar;
  // g_xy(m, n) = conj(b_m) b_n [ (dar_x^H dar_y)(at^H R* at) + (dar_x^H ar)(at^H R* dat_y)
  //                            + (ar^H dar_y)(dat_x^H R* at) + (ar^H ar)(dat_x^H R* dat_y) ]
  auto pair_block = [&](const CMat& dtx, const CMat& drx, const CMat& dty, const CMat& dry) {
    const CMat s = (drx.adjoint() * dry).cwiseProduct(tt) +
                   (drx.adjoint() * ar).cwiseProduct(tx_form(at, dty)) +
                   (ar.adjoint() * dry).cwiseProduct(tx_form(dtx, at)) +
                   rr.cwiseProduct(tx_form(dtx, dty));
    return CMat(beta.adjoint() * s * beta);
  };
  auto gain_block = [&](const CMat& dtx, const CMat& drx) {
    const CMat s = (drx.adjoint() * ar).cwiseProduct(tt) + rr.cwiseProduct(tx_form(dtx, at));
    return CMat(beta.adjoint() * s);
  };
  b.g.angle_angle = pair_block(b.d_tx_angle, b.d_rx_angle, b.d_tx_angle, b.d_rx_angle);
  b.g.angle_range = pair_block(b.d_tx_angle, b.d_rx_angle, b.d_tx_range, b.d_rx_range);
  b.g.range_range = pair_block(b.d_tx_range, b.d_rx_range, b.d_tx_range, b.d_rx_range);
  b.g.angle_gain = gain_block(b.d_tx_angle, b.d_rx_angle);
  b.g.range_gain = gain_block(b.d_tx_range, b.d_rx_range);
  b.g.gain_gain = rr.cwiseProduct(tt);

  const RMat j = model.fim(covariance);
  const int h = 2 * m;
  b.j11 = j.topLeftCorner(h, h);
  b.j12 = j.topRightCorner(h, h);
  b.j22 = j.bottomRightCorner(h, h);
  b.scale = config.fim_scale();
  return b;
}

CrbResult crb_trace(const FimBundle& bundle, const SensingConfig& config) {
  const Eigen::Index h = 2 * bundle.targets();
  require_dims(bundle.j11.rows() == h && bundle.j22.rows() == h && bundle.j12.rows() == h,
               "FIM blocks inconsistent with target count");
  return crb_from_blocks(bundle.j11, bundle.j12, bundle.j22, config.fim_scale());
}

RMat fim_fd_oracle(const ArrayGeometry& geometry, const TargetSet& targets, const CMat& precoder,
                   const SensingConfig& config) {
  geometry.validate();
  targets.validate();
  config.validate();
  const int L = config.cpi_length;
  const Eigen::Index streams = precoder.cols();
  require_dims(precoder.rows() == geometry.n_tx, "precoder rows must equal N_t");
  if (static_cast<double>(geometry.n_tx) * geometry.n_rx * L > 1e6) {
    throw DomainError("finite-difference oracle limited to N_t * N_r * L <= 1e6");
  }
  if (L < streams) throw DomainError("CPI length must be at least the stream count");
  // Rows of a scaled DFT: S S^H = L I, so (P S)(P S)^H / L = P P^H.
  CMat s(streams, L);
  for (Eigen::Index i = 0; i < streams; ++i) {
    for (int l = 0; l < L; ++l) {
      s(i, l) = std::polar(1.0, -2.0 * kPi * static_cast<double>(i * l % L) / L);
    }
  }
  const CMat x = precoder * s;
  const int m = targets.size();
  const int n = 4 * m;

  auto mean = [&](const TargetSet& t) -> CMat {
    CMat g = CMat::Zero(geometry.n_rx, geometry.n_tx);
    for (int i = 0; i < m; ++i) {
      const CVec ar = steering_vector(geometry, ArraySide::Rx, t.positions[i]);
      const CVec at = steering_vector(geometry, ArraySide::Tx, t.positions[i]);
      g += t.gains[i] * ar * at.transpose();
    }
    return g * x;
  };
  std::vector<CMat> du(n);
  for (int p = 0; p < n; ++p) {
    const int kind = p / m, idx = p % m;
    const double step = kind == 0 ? 1e-7 : 1e-6;
    TargetSet plus = targets, minus = targets;
    switch (kind) {
      case 0:
        plus.positions[idx].angle += step;
        minus.positions[idx].angle -= step;
        break;
      case 1:
        plus.positions[idx].range += step;
        minus.positions[idx].range -= step;
        break;
      case 2:
        plus.gains[idx] += step;
        minus.gains[idx] -= step;
        break;
      default:
        plus.gains[idx] += cplx(0, step);
        minus.gains[idx] -= cplx(0, step);
        break;
    }
    du[p] = (mean(plus) - mean(minus)) / (2.0 * step);
  }
  RMat j(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      const cplx v = (du[p].conjugate().cwiseProduct(du[q])).sum();
      j(p, q) = j(q, p) = 2.0 / config.noise * v.real();
    }
  }
  return j;
}

}  // namespace nfisac
