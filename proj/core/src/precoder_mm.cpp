#include "nfisac/precoder_mm.hpp"

namespace nfisac {

InnerInputs make_inner_inputs(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                              const CMat& anchor, InnerObjective objective, double rate_threshold) {
  InnerInputs in;
  in.variant = variant;
  in.scheme = ctx.scheme;
  in.objective = objective;
  in.channels = ctx.channels;
  in.mapping = mapping;
  in.anchor = anchor;
  in.aux = wmmse_auxiliaries(ctx.channels, mapping * anchor, 1.0);
  in.rate_threshold = rate_threshold;
  in.sensing = objective == InnerObjective::Sensing ? ctx.sensing.get() : nullptr;
  in.power_budget = ctx.power_budget;
  in.crb_reference = ctx.crb_reference;
  return in;
}

CMat project_mapped(const CMat& mapping, const CMat& x) {
  const double n2 = (mapping * x).squaredNorm();
  return n2 > 1.0 ? CMat(x / std::sqrt(n2)) : x;
}

namespace {

void log_step(const OptimizeOptions& opt, const char* level, int inner, double objective) {
  if (!opt.log) return;
  IterationRecord r;
  r.run = opt.tag;
  r.level = level;
  r.inner = inner;
  r.objective = objective;
  opt.log->write(r);
}

}  // namespace

MmResult precoder_mm(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                     const CMat& start, const OptimizeOptions& opt) {
  MmResult r;
  r.x = project_mapped(mapping, start);
  double f = ctx.sensing_objective(mapping * r.x);
  r.trace.push_back(f);
  for (int it = 1; it <= opt.max_inner; ++it) {
    InnerInputs in = make_inner_inputs(ctx, mapping, variant, r.x, InnerObjective::Sensing,
                                       ctx.rate_threshold);
    ++r.solves;
    InnerSolution sol;
    try {
      sol = solve_inner(build_inner_problem(in), opt.conic);
    } catch (const RankError&) {
      break;
    }
    if (sol.raw.y.size() == 0) break;
    const CMat cand = project_mapped(mapping, sol.x);
    const double fc = ctx.sensing_objective(mapping * cand);
    const bool rates_ok = min_rate(ctx, mapping * cand) >= ctx.rate_threshold - opt.guard_tol;
    if (!rates_ok || !(fc <= f)) break;
    const double drop = (f - fc) / std::max(std::abs(f), 1e-300);
    r.x = cand;
    f = fc;
    r.trace.push_back(f);
    r.iterations = it;
    log_step(opt, "mm", it, f);
    if (drop < opt.inner_tol) break;
  }
  r.min_rate = min_rate(ctx, mapping * r.x);
  r.reached = r.min_rate >= ctx.rate_threshold - opt.guard_tol;
  return r;
}

MmResult restore_rates(const DesignContext& ctx, const CMat& mapping, InnerVariant variant,
                       const CMat& start, double target, const OptimizeOptions& opt,
                       int max_iterations) {
  MmResult r;
  r.x = project_mapped(mapping, start);
  r.min_rate = min_rate(ctx, mapping * r.x);
  r.trace.push_back(target - r.min_rate);
  for (int it = 1; it <= max_iterations && r.min_rate < target; ++it) {
    InnerInputs in =
        make_inner_inputs(ctx, mapping, variant, r.x, InnerObjective::Elastic, target);
    ++r.solves;
    InnerSolution sol;
    try {
      sol = solve_inner(build_inner_problem(in), opt.conic);
    } catch (const DegenerateEqualizerError&) {
      break;
    }
    if (sol.raw.y.size() == 0) break;
    const CMat cand = project_mapped(mapping, sol.x);
    const double rate = min_rate(ctx, mapping * cand);
    if (!(rate > r.min_rate)) break;
    const double gain = rate - r.min_rate;
    r.x = cand;
    r.min_rate = rate;
    r.trace.push_back(target - rate);
    r.iterations = it;
    log_step(opt, "elastic", it, target - rate);
    if (gain < 1e-7 * std::max(1.0, std::abs(target))) break;
  }
  r.reached = r.min_rate >= target;
  return r;
}

}  // namespace nfisac
