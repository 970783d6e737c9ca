#include "nfisac/design.hpp"

namespace nfisac {

const char* architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::FullyDigital: return "fd";
    case Architecture::FullyConnected: return "fc";
    case Architecture::PartiallyConnected: return "pc";
    case Architecture::TwoStage: return "lc";
  }
  return "?";
}

const char* optimize_status_name(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::Converged: return "ok";
    case OptimizeStatus::NotConverged: return "not_converged";
    case OptimizeStatus::Infeasible: return "infeasible";
  }
  return "?";
}

CVec HybridBeamformer::phases() const {
  CVec f = CVec::Zero(analog.rows());
  for (Eigen::Index n = 0; n < analog.rows(); ++n) {
    for (Eigen::Index i = 0; i < analog.cols(); ++i) {
      if (analog(n, i) != cplx(0, 0)) f(n) = analog(n, i);
    }
  }
  return f;
}

DesignContext DesignContext::from_scenario(const Scenario& s, AccessScheme scheme, FieldMode comm_mode) {
  DesignContext c;
  c.power_budget = s.power_budget;
  c.noise = s.noise;
  c.rate_threshold = s.rate_threshold;
  c.n_tx = s.geometry.n_tx;
  c.n_rf = s.n_rf;
  c.scheme = scheme;
  c.channels = s.channels(comm_mode).as_matrix() * std::sqrt(s.power_budget / s.noise);
  c.sensing = std::make_shared<SensingModel>(s.geometry, s.targets, s.sensing);
  const CMat iso = CMat::Identity(c.n_tx, c.n_tx) * (s.power_budget / c.n_tx);
  c.crb_reference = c.sensing->crb(iso).trace;
  return c;
}

CrbResult DesignContext::crb(const CMat& x) const {
  return sensing->crb(power_budget * (x * x.adjoint()));
}

double DesignContext::sensing_objective(const CMat& x) const {
  try {
    return crb(x).trace / crb_reference;
  } catch (const RankError&) {
    return HUGE_VAL;
  }
}

CMat project_power(const CMat& x) {
  const double n2 = x.squaredNorm();
  return n2 > 1.0 ? CMat(x / std::sqrt(n2)) : x;
}

double min_rate(const DesignContext& ctx, const CMat& x) {
  const PowerDecomposition pw = received_powers(ctx.channels, x, 1.0);
  return achievable_rates(pw, max_min_allocation(pw)).min_rate();
}

Audit audit_precoder(const DesignContext& ctx, const CMat& x_in, double rate_tol) {
  Audit a;
  const CMat x = project_power(x_in);
  a.power = x.squaredNorm();
  const PowerDecomposition pw = received_powers(ctx.channels, x, 1.0);
  a.rates = achievable_rates(pw, max_min_allocation(pw));
  a.min_rate = a.rates.min_rate();
  a.rate_ok = a.min_rate >= ctx.rate_threshold - rate_tol;
  try {
    a.crb = ctx.crb(x);
    a.objective = a.crb.trace / ctx.crb_reference;
    a.observable = std::isfinite(a.objective);
  } catch (const RankError&) {
    a.observable = false;
  }
  return a;
}

bool Incumbent::offer(const DesignContext& ctx, const CMat& analog, const CMat& digital,
                      const CMat& precoder, double rate_tol) {
  CMat w = digital;
  const double n2 = (analog * digital).squaredNorm();
  if (n2 > 1.0) w /= std::sqrt(n2);
  Audit a = audit_precoder(ctx, analog * w, rate_tol);
  if (!a.feasible()) return false;
  if (set_ && !(a.objective < audit_.objective)) return false;
  set_ = true;
  analog_ = analog;
  digital_ = w;
  precoder_ = precoder;
  audit_ = std::move(a);
  return true;
}

namespace {

void fill_from(OptimizeResult& r, const DesignContext& ctx, Architecture arch, const CMat& analog,
               const CMat& digital, const CMat& precoder, const Audit& a) {
  r.beamformer.architecture = arch;
  r.beamformer.analog = analog;
  r.beamformer.digital = digital * ctx.amplitude();
  r.beamformer.aux_precoder = precoder * ctx.amplitude();
  r.crb = a.crb;
  r.rates = a.rates;
  r.allocation = a.rates.allocation;
  r.min_rate = a.min_rate;
  r.objective = a.objective;
}

}  // namespace

void Incumbent::fill(OptimizeResult& r, const DesignContext& ctx, Architecture arch) const {
  require_dims(set_, "no incumbent recorded");
  fill_from(r, ctx, arch, analog_, digital_, precoder_, audit_);
}

void fill_unaudited(OptimizeResult& r, const DesignContext& ctx, Architecture arch, const CMat& analog,
                    const CMat& digital, const CMat& precoder) {
  CMat w = digital;
  const double n2 = (analog * digital).squaredNorm();
  if (n2 > 1.0) w /= std::sqrt(n2);
  fill_from(r, ctx, arch, analog, w, precoder, audit_precoder(ctx, analog * w, 0.0));
}

CMat matched_filter_start(const DesignContext& ctx) {
  const int k_users = ctx.users();
  CMat x = CMat::Zero(ctx.n_tx, k_users + 1);
  for (int k = 0; k < k_users; ++k) {
    const CVec h = ctx.channels.col(k);
    x.col(k + 1) = h / h.norm();
    if (ctx.scheme == AccessScheme::Rsma) x.col(0) += h / h.norm();
  }
  if (ctx.scheme == AccessScheme::Rsma) x.col(0) /= std::max(x.col(0).norm(), 1e-300);
  return x / x.norm();
}

RMat partial_support(int n_tx, int n_rf) {
  require_dims(n_rf >= 1 && n_tx % n_rf == 0, "partially-connected network needs N_t divisible by N_f");
  const int per = n_tx / n_rf;
  RMat s = RMat::Zero(n_tx, n_rf);
  for (int n = 0; n < n_tx; ++n) s(n, n / per) = 1.0;
  return s;
}

CMat heuristic_analog(const CMat& a, int n_rf, Architecture arch) {
  const int k_users = static_cast<int>(a.cols());
  const int n_tx = static_cast<int>(a.rows());
  require_dims(k_users >= 1, "need at least one user steering vector");
  require_dims(n_rf >= 1, "need at least one RF chain");
  CMat f(n_tx, n_rf);
  const int assigned = (n_rf / k_users) * k_users;
  CVec sum = a.rowwise().sum();
  for (int n = 0; n < n_tx; ++n) {
    const double mag = std::abs(sum(n));
    sum(n) = mag > 0 ? sum(n) / mag : cplx(1, 0);
  }
  for (int j = 1; j <= n_rf; ++j) {
    if (j <= assigned) {
      f.col(j - 1) = a.col(j % k_users);  // user mod(j, K) + 1, 0-based here
    } else {
      f.col(j - 1) = sum;
    }
  }
  if (arch == Architecture::PartiallyConnected) {
    f = f.cwiseProduct(partial_support(n_tx, n_rf).cast<cplx>());
  }
  return f;
}

}  // namespace nfisac
