#include "nfisac/selftest.hpp"

#include <atomic>
#include <chrono>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nfisac/pdd_optimizer.hpp"
#include "nfisac/sweep.hpp"

namespace nfisac {

namespace {

using Clock = std::chrono::steady_clock;

CMat random_cmat(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  return m;
}

CMat random_phases(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = std::polar(1.0, rng.uniform(-kPi, kPi));
  }
  return m;
}

TargetSet random_targets(Rng& rng, int m) {
  TargetSet t;
  for (int i = 0; i < m; ++i) {
    t.positions.push_back({rng.uniform(20.0, 30.0), rng.uniform(-kPi / 3, kPi / 3)});
    t.gains.push_back(std::polar(1.0, rng.uniform(-kPi, kPi)));
  }
  return t;
}

std::string sci(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << std::scientific << v;
  return ss.str();
}

template <typename Fn>
CheckResult timed(int id, const char* name, Fn fn) {
  CheckResult r;
  r.id = id;
  r.name = name;
  const auto t0 = Clock::now();
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace

CheckResult check_fim_oracle(const SelftestOptions& opt) {
  return timed(1, "fim-vs-finite-differences", [&](CheckResult& r) {
    Rng rng(opt.seed);
    double worst = 0.0;
    const int instances = 20;
    for (int n = 0; n < instances; ++n) {
      const int nt = 2 + static_cast<int>(rng.uniform() * 7);
      const int nr = 2 + static_cast<int>(rng.uniform() * 7);
      const int m = 1 + static_cast<int>(rng.uniform() * 2);
      const int streams = 1 + static_cast<int>(rng.uniform() * 3);
      const ArrayGeometry g = ArrayGeometry::from_apertures(nt, nr, 0.5, 0.5, 30e9);
      const TargetSet t = random_targets(rng, m);
      SensingConfig cfg;
      cfg.cpi_length = 64;
      cfg.noise = 1.0;
      const CMat p = random_cmat(rng, nt, streams);
      const RMat analytic = assemble_fim(g, t, p * p.adjoint(), cfg).full();
      const RMat fd = fim_fd_oracle(g, t, p, cfg);
      worst = std::max(worst, (analytic - fd).norm() / fd.norm());
    }
    r.passed = worst <= 1e-4 && std::isfinite(worst);
    r.detail = "worst relative Frobenius error " + sci(worst) + " over 20 instances";
  });
}

CheckResult check_crb_identities(const SelftestOptions& opt) {
  return timed(2, "crb-identities", [&](CheckResult& r) {
    Rng rng(opt.seed + 1);
    double schur = 0.0, q_vs_r = 0.0, halving = 0.0;
    for (int n = 0; n < 20; ++n) {
      const int m = 1 + n % 2;
      const ArrayGeometry g = ArrayGeometry::from_apertures(16, 8, 0.5, 0.5, 30e9);
      const TargetSet t = random_targets(rng, m);
      SensingConfig cfg;
      cfg.noise = 1e-2;
      const CMat p = random_cmat(rng, 16, 3);
      const CMat cov = p * p.adjoint();
      const FimBundle b = assemble_fim(g, t, cov, cfg);
      const CrbResult c = crb_trace(b, cfg);
      const RMat full = b.full();
      const RMat inv = full.fullPivLu().inverse();
      const RMat lead = inv.topLeftCorner(2 * m, 2 * m);
      schur = std::max(schur, (c.crb - lead).norm() / lead.norm());

      // Covariance form against the rank-two precoder form at Q = P P^H.
      const SensingModel model(g, t, cfg);
      const RMat from_q = model.fim(cov);
      const RMat from_p = 0.5 * model.fim_rank2(p, p);
      const RMat from_bundle = full / b.scale;
      const double ref = from_bundle.cwiseAbs().maxCoeff();
      q_vs_r = std::max(q_vs_r, (from_q - from_bundle).cwiseAbs().maxCoeff() / ref);
      q_vs_r = std::max(q_vs_r, (from_p - from_bundle).cwiseAbs().maxCoeff() / ref);

      SensingConfig twice = cfg;
      twice.cpi_length *= 2;
      const CrbResult c2 = crb_trace(assemble_fim(g, t, cov, twice), twice);
      halving = std::max(halving, std::abs(c2.trace - 0.5 * c.trace) / (0.5 * c.trace));
    }
    r.passed = schur <= 1e-8 && q_vs_r <= 1e-10 && halving <= 1e-10;
    r.detail = "schur vs inverse " + sci(schur) + ", Q vs R form " + sci(q_vs_r) + ", L doubling " +
               sci(halving);
  });
}

CheckResult check_wmmse_identity(const SelftestOptions& opt) {
  return timed(3, "mse-rate-identity", [&](CheckResult& r) {
    Rng rng(opt.seed + 2);
    const double tau = wmmse_tau();
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
      const int k = 1 + n % 4;
      const int nt = 2 + n % 7;
      const CMat h = random_cmat(rng, nt, k);
      const CMat p = random_cmat(rng, nt, k + 1) * rng.uniform(0.1, 3.0);
      const double noise = rng.uniform(0.01, 2.0);
      const PowerDecomposition pw = received_powers(h, p, noise);
      const WmmseAuxiliaries a = wmmse_auxiliaries(h, p, noise);
      for (int u = 0; u < k; ++u) {
        const UserPowers& up = pw.users[u];
        const double rc = std::log2(up.t_common / up.i_common);
        const double rp = std::log2(up.t_private / up.i_private);
        const double bc = weighted_mse(a.wt_common[u], a.mmse_common[u]);
        const double bp = weighted_mse(a.wt_private[u], a.mmse_private[u]);
        worst = std::max({worst, std::abs(bc - (tau - rc)), std::abs(bp - (tau - rp))});
        // The closed-form MSE must also be what the equalizer actually achieves.
        const cplx gc = h.col(u).adjoint() * p.col(0);
        const cplx gp = h.col(u).adjoint() * p.col(u + 1);
        worst = std::max(worst, std::abs(equalizer_mse(a.eq_common[u], up.t_common, gc) - a.mmse_common[u]));
        worst = std::max(worst, std::abs(equalizer_mse(a.eq_private[u], up.t_private, gp) - a.mmse_private[u]));
      }
    }
    r.passed = worst <= 1e-9;
    r.detail = "worst |beta - (tau - R)| " + sci(worst) + " over 1000 draws";
  });
}

CheckResult check_block_updates(const SelftestOptions& opt) {
  return timed(4, "closed-form-block-updates", [&](CheckResult& r) {
    Rng rng(opt.seed + 3);
    double ortho = 0.0;
    for (int n = 0; n < 50; ++n) {
      const int nt = 8 + n % 9, nf = 2 + n % 5, s = 2 + n % 3;
      const CMat f = random_phases(rng, nt, nf);
      const CMat target = random_cmat(rng, nt, s);
      const CMat w = update_digital(f, target);
      const CMat g = f.adjoint() * (target - f * w);
      ortho = std::max(ortho, g.norm() / (f.norm() * target.norm()));
    }

    // Per-entry optimality: the chosen phase beats +-0.01 rad on 100 entries.
    int worse = 0;
    for (int n = 0; n < 100; ++n) {
      const int nt = 8, nf = 4, s = 3;
      CMat f = random_phases(rng, nt, nf);
      const CMat w = random_cmat(rng, nf, s);
      const CMat target = random_cmat(rng, nt, s);
      const int row = static_cast<int>(rng.uniform() * nt);
      const int col = static_cast<int>(rng.uniform() * nf);
      const cplx chi = analog_coefficient(f, w, target, row, col);
      if (std::abs(chi) == 0.0) continue;
      f(row, col) = chi / std::abs(chi);
      const double best = analog_objective(f, w, target);
      for (double d : {-0.01, 0.01}) {
        CMat g = f;
        g(row, col) *= std::polar(1.0, d);
        if (analog_objective(g, w, target) < best) ++worse;
      }
    }

    // Whole sweeps, both networks.
    int increases = 0;
    for (int n = 0; n < 100; ++n) {
      const Architecture arch = n % 2 ? Architecture::PartiallyConnected : Architecture::FullyConnected;
      const int nt = 16, nf = 4, s = 3;
      CMat f = random_phases(rng, nt, nf);
      if (arch == Architecture::PartiallyConnected) f = f.cwiseProduct(partial_support(nt, nf).cast<cplx>());
      const CMat w = random_cmat(rng, nf, s);
      const CMat target = random_cmat(rng, nt, s);
      const double before = analog_objective(f, w, target);
      const CMat g = update_analog(arch, f, w, target);
      const double after = analog_objective(g, w, target);
      if (after > before + 1e-10 * std::max(1.0, std::abs(before))) ++increases;
      if (!analog_matches(arch, g, nt, nf)) ++increases;
    }
    r.passed = ortho <= 1e-10 && worse == 0 && increases == 0;
    r.detail = "residual orthogonality " + sci(ortho) + ", perturbations that improved " +
               std::to_string(worse) + "/200, sweeps that increased " + std::to_string(increases) + "/100";
  });
}

CheckResult check_convergence(const SelftestOptions& opt) {
  return timed(5, "penalty-loop-convergence", [&](CheckResult& r) {
    const ScenarioConfig cfg = ScenarioConfig::desk();
    const int n = opt.convergence_seeds;
    struct Outcome {
      bool monotone = true;
      bool converged = false;
      bool rates = false;
      bool power = false;
      double violation = 0.0;
      int outer = 0;
    };
    std::vector<Outcome> out(n);
    std::atomic<int> next{0};
    auto work = [&] {
      for (int i = next++; i < n; i = next++) {
        const Scenario s = generate_scenario(cfg, opt.seed + i);
        const DesignContext ctx = DesignContext::from_scenario(s, AccessScheme::Rsma);
        const CMat f0 = heuristic_analog(s.user_steering(), s.n_rf, Architecture::FullyConnected);
        const OptimizeResult res = pdd_optimize(ctx, Architecture::FullyConnected, f0, OptimizeOptions{});
        Outcome& o = out[i];
        for (const auto& trace : res.inner_traces) {
          for (std::size_t j = 1; j < trace.size(); ++j) {
            if (trace[j] > trace[j - 1] + 1e-8 * std::max(1.0, std::abs(trace[j - 1]))) o.monotone = false;
          }
        }
        o.violation = res.violation;
        o.outer = res.outer_iterations;
        o.converged = res.status == OptimizeStatus::Converged && res.violation <= 1e-5 && res.outer_iterations <= 30;
        o.rates = res.status != OptimizeStatus::Infeasible && res.min_rate >= s.rate_threshold - 1e-3;
        for (double rk : res.rates.totals) o.rates = o.rates && rk >= s.rate_threshold - 1e-3;
        o.power = res.beamformer.product().squaredNorm() <= s.power_budget * (1.0 + 1e-6);
      }
    };
    const int threads = std::max(1, std::min(n, opt.threads > 0 ? opt.threads
                                                                : static_cast<int>(std::thread::hardware_concurrency())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    int monotone = 0, converged = 0, rates = 0, power = 0, worst_outer = 0;
    double worst_violation = 0.0;
    for (const Outcome& o : out) {
      monotone += o.monotone;
      converged += o.converged;
      rates += o.rates;
      power += o.power;
      worst_outer = std::max(worst_outer, o.outer);
      worst_violation = std::max(worst_violation, o.violation);
    }
    const int need = (9 * n + 9) / 10;
    r.passed = monotone == n && converged >= need && rates == n && power == n;
    r.detail = "monotone " + std::to_string(monotone) + "/" + std::to_string(n) + ", converged " +
               std::to_string(converged) + "/" + std::to_string(n) + " (max outer " +
               std::to_string(worst_outer) + ", worst violation " + sci(worst_violation) + "), rates " +
               std::to_string(rates) + "/" + std::to_string(n) + ", power " + std::to_string(power) + "/" +
               std::to_string(n);
  });
}

std::string format_check(const CheckResult& r) {
  std::ostringstream ss;
  ss << "criterion " << r.id << ' ' << (r.passed ? "PASS" : "FAIL") << ' ' << r.name << ": " << r.detail
     << " [" << std::fixed << std::setprecision(1) << r.seconds << " s]";
  return ss.str();
}

std::vector<CheckResult> run_selftest(const SelftestOptions& opt, std::ostream* progress) {
  std::vector<CheckResult> out;
  for (auto fn : {check_fim_oracle, check_crb_identities, check_wmmse_identity, check_block_updates,
                  check_convergence}) {
    out.push_back(fn(opt));
    if (progress) *progress << format_check(out.back()) << std::endl;
  }
  return out;
}

std::string checks_json(const std::vector<CheckResult>& results) {
  nlohmann::json j = nlohmann::json::array();
  for (const CheckResult& r : results) {
    j.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                 {"seconds", r.seconds}});
  }
  return j.dump(2);
}

}  // namespace nfisac
