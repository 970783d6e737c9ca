#include "nfisac/pdd_optimizer.hpp"

#include <Eigen/QR>

namespace nfisac {

namespace {

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

InnerVariant penalty_variant(Architecture arch) {
  return arch == Architecture::PartiallyConnected ? InnerVariant::PartiallyConnected
                                                  : InnerVariant::FullyConnected;
}

// Rate margin asked of a restored start so the first convex step has room.
constexpr double kRestoreMargin = 1e-4;

void log_record(const OptimizeOptions& opt, const char* level, int outer, int inner, double objective,
                double violation, const PddState& st) {
  if (!opt.log) return;
  IterationRecord r;
  r.run = opt.tag;
  r.level = level;
  r.outer = outer;
  r.inner = inner;
  r.objective = objective;
  r.violation = violation;
  r.rho = st.penalty;
  r.gate = st.gate;
  opt.log->write(r);
}

}  // namespace

CMat update_digital(const CMat& analog, const CMat& target, bool min_norm) {
  require_dims(analog.rows() == target.rows(), "analog and target row counts differ");
  if (min_norm) {
    Eigen::CompleteOrthogonalDecomposition<CMat> cod(analog);
    return cod.solve(target);
  }
  Eigen::ColPivHouseholderQR<CMat> qr(analog);
  if (qr.rank() < analog.cols()) throw RankError("analog matrix has dependent columns");
  return qr.solve(target);
}

CMat column_basis(const CMat& analog) {
  Eigen::ColPivHouseholderQR<CMat> qr(analog);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) throw RankError("analog matrix is zero");
  const CMat q = qr.householderQ() * CMat::Identity(analog.rows(), rank);
  return q;
}

double analog_objective(const CMat& analog, const CMat& digital, const CMat& target) {
  const CMat y = digital * digital.adjoint();
  const CMat z = target * digital.adjoint();
  return (analog.adjoint() * analog * y).trace().real() - 2.0 * (analog.adjoint() * z).trace().real();
}

cplx analog_coefficient(const CMat& analog, const CMat& digital, const CMat& target, int n, int i) {
  const CMat y = digital * digital.adjoint();
  const cplx z = (target.row(n) * digital.row(i).adjoint())(0);  // (T W^H)_{n,i}
  const cplx fy = (analog.row(n) * y.col(i))(0);
  return z - fy + analog(n, i) * y(i, i);
}

CMat update_analog(Architecture arch, const CMat& analog, const CMat& digital, const CMat& target) {
  require_dims(analog.cols() == digital.rows(), "analog columns must equal digital rows");
  require_dims(target.rows() == analog.rows() && target.cols() == digital.cols(), "target shape");
  const bool partial = arch == Architecture::PartiallyConnected;
  const Eigen::Index n_tx = analog.rows();
  const Eigen::Index n_rf = analog.cols();
  const int per = partial ? static_cast<int>(n_tx / n_rf) : 0;
  CMat f = analog;
  const CMat y = digital * digital.adjoint();
  const CMat z = target * digital.adjoint();
  CMat fy = f * y;
  for (Eigen::Index i = 0; i < n_rf; ++i) {
    for (Eigen::Index n = 0; n < n_tx; ++n) {
      if (partial && n / per != i) continue;
      const cplx chi = z(n, i) - fy(n, i) + f(n, i) * y(i, i);
      const double mag = std::abs(chi);
      if (!(mag > 0.0)) continue;
      const cplx next = chi / mag;
      const cplx delta = next - f(n, i);
      if (delta == cplx(0, 0)) continue;
      fy.row(n) += delta * y.row(i);
      f(n, i) = next;
    }
  }
  return f;
}

bool analog_matches(Architecture arch, const CMat& analog, int n_tx, int n_rf, double tol) {
  if (analog.rows() != n_tx || analog.cols() != n_rf) return false;
  if (arch == Architecture::FullyDigital) return analog.isIdentity(tol);
  if (arch == Architecture::PartiallyConnected) {
    if (n_tx % n_rf != 0) return false;
    const int per = n_tx / n_rf;
    for (int n = 0; n < n_tx; ++n) {
      for (int i = 0; i < n_rf; ++i) {
        const double m = std::abs(analog(n, i));
        if (n / per == i ? std::abs(m - 1.0) > tol : m > tol) return false;
      }
    }
    return true;
  }
  return ((analog.cwiseAbs().array() - 1.0).abs() <= tol).all();
}

double augmented_objective(const DesignContext& ctx, const CMat& precoder, const CMat& analog,
                           const CMat& digital, const PddState& state) {
  const double pen =
      (precoder - analog * digital + state.penalty * state.dual).squaredNorm() / (2.0 * state.penalty);
  return ctx.sensing_objective(precoder) + pen;
}

BcdTrace bcd_inner(const DesignContext& ctx, Architecture arch, CMat& precoder, CMat& analog,
                   CMat& digital, PddState& state, const OptimizeOptions& opt) {
  BcdTrace tr;
  const CMat eye = CMat::Identity(ctx.n_tx, ctx.n_tx);
  double al = augmented_objective(ctx, precoder, analog, digital, state);
  tr.objective.push_back(al);
  for (int t = 1; t <= opt.max_inner; ++t) {
    InnerInputs in = make_inner_inputs(ctx, eye, penalty_variant(arch), precoder,
                                       InnerObjective::Sensing, ctx.rate_threshold);
    in.penalty_target = CMat(analog * digital - state.penalty * state.dual);
    in.rho = state.penalty;
    ++tr.solves;
    const InnerSolution sol = solve_inner(build_inner_problem(in), opt.conic);
    const CMat cand = project_power(sol.x);
    if (min_rate(ctx, cand) >= ctx.rate_threshold - opt.guard_tol &&
        augmented_objective(ctx, cand, analog, digital, state) <= al) {
      precoder = cand;
      state.common = sol.common;
      state.sensing_aux = sol.u;
    }
    const CMat target = precoder + state.penalty * state.dual;
    digital = update_digital(analog, target, true);
    analog = update_analog(arch, analog, digital, target);
    const double next = augmented_objective(ctx, precoder, analog, digital, state);
    tr.objective.push_back(next);
    log_record(opt, "inner", static_cast<int>(state.history.size()) + 1, t, next,
               max_abs(precoder - analog * digital), state);
    const double drop = al - next;
    al = next;
    if (drop <= opt.inner_tol * std::max(std::abs(al), 1e-300)) break;
  }
  return tr;
}

OptimizeResult pdd_optimize(const DesignContext& ctx, Architecture arch, const CMat& initial_analog,
                            const OptimizeOptions& opt, const HybridBeamformer* warm) {
  if (arch != Architecture::FullyConnected && arch != Architecture::PartiallyConnected) {
    throw DomainError("penalty design applies to the fc and pc networks only");
  }
  const int nt = ctx.n_tx;
  const int nf = static_cast<int>(initial_analog.cols());
  const int streams = ctx.users() + 1;
  require_dims(initial_analog.rows() == nt, "initial analog matrix must have N_t rows");
  if (!analog_matches(arch, initial_analog, nt, nf)) {
    throw DomainError("initial analog matrix does not fit the network structure");
  }
  const double amp = ctx.amplitude();
  const bool sdma = ctx.scheme == AccessScheme::Sdma;
  OptimizeResult r;
  Incumbent inc;
  CMat f, w, p;
  if (warm) {
    const CMat x = warm->product() / amp;
    require_dims(x.rows() == nt && x.cols() == streams, "warm start has the wrong shape");
    if (analog_matches(arch, warm->analog, nt, nf)) {
      f = warm->analog;
      w = warm->digital / amp;
      inc.offer(ctx, f, w, x, opt.rate_tol);
    } else {
      // Fit the analog network to the given product first.
      f = initial_analog;
      for (int s = 0; s < 20; ++s) {
        w = update_digital(f, x, true);
        f = update_analog(arch, f, w, x);
      }
      w = update_digital(f, x, true);
    }
    p = project_power(x);
  } else {
    f = initial_analog;
    w = update_digital(f, matched_filter_start(ctx), true);
    const double n = (f * w).norm();
    if (n > 0) w /= n;
    p = f * w;
  }
  if (sdma) {
    w.col(0).setZero();
    p.col(0).setZero();
  }

  if (min_rate(ctx, p) < ctx.rate_threshold - opt.guard_tol) {
    const double goal = ctx.rate_threshold + kRestoreMargin;
    // Behind F first, in a basis of its column space (F may repeat columns).
    const CMat basis = column_basis(f);
    const MmResult rw = restore_rates(ctx, basis, InnerVariant::TwoStage, basis.adjoint() * (f * w), goal, opt);
    r.conic_solves += rw.solves;
    if (rw.min_rate >= ctx.rate_threshold) {
      w = update_digital(f, basis * rw.x, true);
      p = f * w;
    } else {
      const CMat eye = CMat::Identity(nt, nt);
      const MmResult rp = restore_rates(ctx, eye, InnerVariant::FullyDigital, p, goal, opt);
      r.conic_solves += rp.solves;
      if (rp.min_rate < ctx.rate_threshold) {
        if (inc.has_value()) {
          inc.fill(r, ctx, arch);
          r.status = OptimizeStatus::NotConverged;
        } else {
          fill_unaudited(r, ctx, arch, f, w, p);
          r.status = OptimizeStatus::Infeasible;
        }
        r.violation = max_abs(p - f * w);
        return r;
      }
      p = rp.x;
      w = update_digital(f, p, true);
    }
  }
  inc.offer(ctx, f, w, p, opt.rate_tol);

  PddState& st = r.state;
  st.dual = CMat::Zero(nt, streams);
  st.penalty = opt.rho0;
  st.gate = HUGE_VAL;
  st.shrink = opt.shrink;
  double prev = HUGE_VAL;
  double violation = max_abs(p - f * w);
  bool converged = false;
  for (int n = 1; n <= opt.max_outer; ++n) {
    BcdTrace bt = bcd_inner(ctx, arch, p, f, w, st, opt);
    r.inner_iterations += static_cast<int>(bt.objective.size()) - 1;
    r.conic_solves += bt.solves;
    r.inner_traces.push_back(std::move(bt.objective));
    r.outer_iterations = n;
    violation = max_abs(p - f * w);
    const double obj = ctx.sensing_objective(p);
    st.history.push_back(obj);
    inc.offer(ctx, f, w, p, opt.rate_tol);
    log_record(opt, "outer", n, 0, obj, violation, st);
    if (violation <= opt.outer_tol && std::abs(obj - prev) <= opt.objective_tol * std::abs(obj)) {
      converged = true;
      break;
    }
    if (violation <= st.gate) {
      st.dual += (p - f * w) / st.penalty;
    } else {
      st.penalty *= st.shrink;
    }
    st.gate = opt.gate_factor * violation;
    prev = obj;
  }
  r.violation = violation;
  try {
    r.crb_aux_trace = ctx.crb(p).trace;
  } catch (const RankError&) {
    r.crb_aux_trace = HUGE_VAL;
  }
  if (inc.has_value()) {
    inc.fill(r, ctx, arch);
    r.status = converged ? OptimizeStatus::Converged : OptimizeStatus::NotConverged;
  } else {
    fill_unaudited(r, ctx, arch, f, w, p);
    r.status = OptimizeStatus::Infeasible;
  }
  return r;
}

OptimizeResult optimize_fully_digital(const DesignContext& ctx, const OptimizeOptions& opt,
                                      const HybridBeamformer* warm) {
  const int nt = ctx.n_tx;
  const CMat eye = CMat::Identity(nt, nt);
  const Architecture arch = Architecture::FullyDigital;
  OptimizeResult r;
  Incumbent inc;
  CMat x;
  if (warm) {
    x = project_power(warm->product() / ctx.amplitude());
    require_dims(x.rows() == nt && x.cols() == ctx.users() + 1, "warm start has the wrong shape");
    inc.offer(ctx, eye, x, x, opt.rate_tol);
  } else {
    x = matched_filter_start(ctx);
  }
  if (ctx.scheme == AccessScheme::Sdma) x.col(0).setZero();
  if (min_rate(ctx, x) < ctx.rate_threshold - opt.guard_tol) {
    const MmResult rs = restore_rates(ctx, eye, InnerVariant::FullyDigital, x,
                                      ctx.rate_threshold + kRestoreMargin, opt);
    r.conic_solves += rs.solves;
    x = rs.x;
    if (rs.min_rate < ctx.rate_threshold) {
      if (inc.has_value()) {
        inc.fill(r, ctx, arch);
        r.status = OptimizeStatus::NotConverged;
      } else {
        fill_unaudited(r, ctx, arch, eye, x, x);
        r.status = OptimizeStatus::Infeasible;
      }
      return r;
    }
  }
  const MmResult mm = precoder_mm(ctx, eye, InnerVariant::FullyDigital, x, opt);
  r.conic_solves += mm.solves;
  r.inner_iterations = mm.iterations;
  r.inner_traces.push_back(mm.trace);
  inc.offer(ctx, eye, mm.x, mm.x, opt.rate_tol);
  r.crb_aux_trace = ctx.crb(mm.x).trace;
  if (inc.has_value()) {
    inc.fill(r, ctx, arch);
    r.status = mm.iterations < opt.max_inner ? OptimizeStatus::Converged : OptimizeStatus::NotConverged;
  } else {
    fill_unaudited(r, ctx, arch, eye, mm.x, mm.x);
    r.status = OptimizeStatus::Infeasible;
  }
  return r;
}

MaxMinResult max_min_rate(const DesignContext& ctx, const CMat& mapping, const OptimizeOptions& opt,
                          const CMat* warm_product, double resolution) {
  require_dims(mapping.rows() == ctx.n_tx, "mapping must have N_t rows");
  const bool digital = mapping.rows() == mapping.cols() && mapping.isIdentity(0.0);
  const InnerVariant variant = digital ? InnerVariant::FullyDigital : InnerVariant::TwoStage;
  // Work in an orthonormal basis of the mapping's column space; the heuristic
  // analog matrix may repeat columns.
  const CMat basis = digital ? mapping : column_basis(mapping);
  CMat x;
  if (warm_product) {
    x = basis.adjoint() * (*warm_product / ctx.amplitude());
  } else {
    x = basis.adjoint() * matched_filter_start(ctx);
    const double n = x.norm();
    if (n > 0) x /= n;
  }
  x = project_mapped(basis, x);
  if (ctx.scheme == AccessScheme::Sdma) x.col(0).setZero();

  MaxMinResult out;
  double best = min_rate(ctx, basis * x);
  double peak = 0.0;
  for (int k = 0; k < ctx.users(); ++k) peak = std::max(peak, ctx.channels.col(k).squaredNorm());
  double lo = best;
  double hi = std::max(std::log2(1.0 + peak), lo);
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    const MmResult rs = restore_rates(ctx, basis, variant, x, mid, opt, 100);
    ++out.oracle_calls;
    if (rs.min_rate > best) {
      best = rs.min_rate;
      x = rs.x;
    }
    if (rs.reached) {
      lo = best;
    } else {
      hi = mid;
      lo = std::max(lo, best);
    }
  }
  out.rate = best;
  out.precoder = basis * x * ctx.amplitude();
  return out;
}

}  // namespace nfisac
