#include "nfisac/two_stage.hpp"

namespace nfisac {

TwoStageResult two_stage_optimize(const DesignContext& ctx, const CMat& analog,
                                  const OptimizeOptions& opt, const HybridBeamformer* warm) {
  const Architecture arch = Architecture::TwoStage;
  require_dims(analog.rows() == ctx.n_tx, "analog matrix must have N_t rows");
  // The precoder lives in the column space of F. The heuristic repeats
  // steering vectors when K divides N_f, so optimize in an orthonormal basis
  // and map back with the minimum-norm digital matrix.
  const CMat basis = column_basis(analog);
  auto digital_of = [&](const CMat& z) { return update_digital(analog, basis * z, true); };
  TwoStageResult r;
  Incumbent inc;
  CMat z;
  if (warm) {
    const CMat x = warm->product() / ctx.amplitude();
    require_dims(x.rows() == ctx.n_tx && x.cols() == ctx.users() + 1, "warm start has the wrong shape");
    z = basis.adjoint() * x;
    const bool same_analog = warm->analog.rows() == analog.rows() &&
                             warm->analog.cols() == analog.cols() &&
                             (warm->analog - analog).cwiseAbs().maxCoeff() <= 1e-12;
    if (same_analog) inc.offer(ctx, analog, warm->digital / ctx.amplitude(), x, opt.rate_tol);
  } else {
    z = basis.adjoint() * matched_filter_start(ctx);
    const double n = z.norm();
    if (n > 0) z /= n;
  }
  z = project_mapped(basis, z);
  if (ctx.scheme == AccessScheme::Sdma) z.col(0).setZero();

  if (min_rate(ctx, basis * z) < ctx.rate_threshold - opt.guard_tol) {
    const MmResult rs = restore_rates(ctx, basis, InnerVariant::TwoStage, z,
                                      ctx.rate_threshold + 1e-4, opt);
    r.conic_solves += rs.solves;
    z = rs.x;
    if (rs.min_rate < ctx.rate_threshold) {
      if (inc.has_value()) {
        inc.fill(r, ctx, arch);
        r.status = OptimizeStatus::NotConverged;
      } else {
        fill_unaudited(r, ctx, arch, analog, digital_of(z), basis * z);
        r.status = OptimizeStatus::Infeasible;
      }
      return r;
    }
  }
  const MmResult mm = precoder_mm(ctx, basis, InnerVariant::TwoStage, z, opt);
  r.conic_solves += mm.solves;
  r.inner_iterations = mm.iterations;
  r.inner_traces.push_back(mm.trace);
  const CMat w = digital_of(mm.x);
  inc.offer(ctx, analog, w, analog * w, opt.rate_tol);
  r.crb_aux_trace = ctx.sensing_objective(basis * mm.x) * ctx.crb_reference;
  if (inc.has_value()) {
    inc.fill(r, ctx, arch);
    r.status = mm.iterations < opt.max_inner ? OptimizeStatus::Converged : OptimizeStatus::NotConverged;
  } else {
    fill_unaudited(r, ctx, arch, analog, w, analog * w);
    r.status = OptimizeStatus::Infeasible;
  }
  return r;
}

}  // namespace nfisac
