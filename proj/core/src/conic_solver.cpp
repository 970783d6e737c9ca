// Infeasible-start primal-dual interior-point method for
//   minimize c^T y  s.t.  S_b = C_b + A_b(y) in K_b
// with dual  maximize -sum <C_b, X_b>  s.t.  sum A_b^*(X_b) = c, X_b in K_b.
// Semidefinite blocks use the HKM direction, second-order blocks the
// Nesterov-Todd scaling, nonnegative blocks the usual diagonal scaling.
// Mehrotra predictor-corrector with separate primal and dual step lengths.

#include <algorithm>
#include <limits>
#include <map>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "nfisac/conic_program.hpp"

namespace nfisac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// --- second-order cone algebra -------------------------------------------

double soc_det(const RVec& v) { return v(0) * v(0) - v.tail(v.size() - 1).squaredNorm(); }

RVec soc_J(const RVec& v) {
  RVec r = -v;
  r(0) = v(0);
  return r;
}

RVec soc_circ(const RVec& u, const RVec& v) {
  RVec r(u.size());
  r(0) = u.dot(v);
  r.tail(u.size() - 1) = u(0) * v.tail(v.size() - 1) + v(0) * u.tail(u.size() - 1);
  return r;
}

// Solves lambda o u = r.
RVec soc_inv_circ(const RVec& lam, const RVec& r) {
  const Eigen::Index n = lam.size();
  const double det = soc_det(lam);
  RVec u(n);
  u(0) = (lam(0) * r(0) - lam.tail(n - 1).dot(r.tail(n - 1))) / det;
  u.tail(n - 1) = (r.tail(n - 1) - u(0) * lam.tail(n - 1)) / lam(0);
  return u;
}

// Largest alpha with v + alpha d in the cone (v interior).
double soc_max_step(const RVec& v, const RVec& d) {
  const Eigen::Index n = v.size();
  const double a = soc_det(d);
  const double b = v(0) * d(0) - v.tail(n - 1).dot(d.tail(n - 1));
  const double c = std::max(soc_det(v), 0.0);
  // det(v + t d) = a t^2 + 2 b t + c
  double best = kInf;
  auto consider = [&](double t) {
    if (t > 0 && t < best) best = t;
  };
  if (std::abs(a) <= 1e-14 * (std::abs(b) + c + 1e-300)) {
    if (b < 0) consider(-c / (2 * b));
  } else {
    const double disc = b * b - a * c;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      const double q = -(b + std::copysign(sq, b));
      if (q != 0) {
        consider(q / a);
        consider(c / q);
      } else {
        consider(-b / a);
      }
    }
  }
  // The first root of det is where the ray leaves the cone.
  return best;
}

struct NtScaling {
  double eta = 1.0;
  RVec v;   // W = eta (2 v v^T - J), v^T J v = 1
  RVec jv;  // W^{-1} = (1/eta) (2 J v v^T J - J)

  RVec apply(const RVec& a) const { return eta * (2.0 * v * v.dot(a) - soc_J(a)); }
  RVec apply_inv(const RVec& a) const { return (2.0 * jv * jv.dot(a) - soc_J(a)) / eta; }
  RMat apply_inv(const RMat& g) const {
    RMat out(g.rows(), g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) out.col(j) = apply_inv(RVec(g.col(j)));
    return out;
  }
};

// Scaling with W x = W^{-1} s.
NtScaling nt_scaling(const RVec& s, const RVec& x) {
  const double sn = std::sqrt(soc_det(s));
  const double xn = std::sqrt(soc_det(x));
  const RVec sb = s / sn;
  const RVec xb = x / xn;
  const double gamma = std::sqrt(std::max((1.0 + xb.dot(sb)) / 2.0, 0.0));
  // wbar gives W^2; v is its hyperbolic square root.
  RVec wbar = (sb + soc_J(xb)) / (2.0 * gamma);
  NtScaling w;
  w.v = wbar;
  w.v(0) += 1.0;
  w.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
  w.jv = soc_J(w.v);
  w.eta = std::sqrt(sn / xn);
  return w;
}

// --- per-block working data ----------------------------------------------

struct Block {
  ConeKind kind;
  int n;
  std::vector<int> vars;

  RMat C;
  std::vector<RMat> A;
  RVec h;
  RMat G;

  RMat S, X;
  RVec s, x;

  // per-iteration
  RMat Sinv;
  NtScaling nt;
  RVec lam;
  RVec d;  // x / s for nonnegative blocks

  RMat Rp;
  RVec rp;

  bool matrix() const { return kind == ConeKind::Semidefinite; }
};

Block make_block(const ConeBlock& cb) {
  Block b;
  b.kind = cb.kind;
  b.n = cb.dim;
  std::map<int, int> local;
  for (const ConeEntry& e : cb.entries) {
    if (e.var >= 0) local.emplace(e.var, 0);
  }
  int idx = 0;
  for (auto& [var, loc] : local) {
    loc = idx++;
    b.vars.push_back(var);
  }
  const int nl = static_cast<int>(b.vars.size());
  if (b.matrix()) {
    b.C = RMat::Zero(b.n, b.n);
    b.A.assign(nl, RMat::Zero(b.n, b.n));
    for (const ConeEntry& e : cb.entries) {
      RMat& m = e.var < 0 ? b.C : b.A[local[e.var]];
      m(e.row, e.col) += e.value;
      if (e.row != e.col) m(e.col, e.row) += e.value;
    }
  } else {
    b.h = RVec::Zero(b.n);
    b.G = RMat::Zero(b.n, nl);
    for (const ConeEntry& e : cb.entries) {
      if (e.var < 0) {
        b.h(e.row) += e.value;
      } else {
        b.G(e.row, local[e.var]) += e.value;
      }
    }
  }
  return b;
}

RVec gather(const Block& b, const RVec& y) {
  RVec out(b.vars.size());
  for (std::size_t i = 0; i < b.vars.size(); ++i) out(i) = y(b.vars[i]);
  return out;
}

RMat apply_matrix(const Block& b, const RVec& yl) {
  RMat out = RMat::Zero(b.n, b.n);
  for (std::size_t i = 0; i < b.A.size(); ++i) {
    if (yl(i) != 0.0) out += yl(i) * b.A[i];
  }
  return out;
}

RVec apply_vector(const Block& b, const RVec& yl) { return b.G * yl; }

void add_adjoint_matrix(const Block& b, const RMat& e, RVec& out) {
  for (std::size_t i = 0; i < b.A.size(); ++i) out(b.vars[i]) += b.A[i].cwiseProduct(e).sum();
}

void add_adjoint_vector(const Block& b, const RVec& e, RVec& out) {
  const RVec loc = b.G.transpose() * e;
  for (std::size_t i = 0; i < b.vars.size(); ++i) out(b.vars[i]) += loc(i);
}

double psd_max_step(const RMat& s, const RMat& ds, bool& ok) {
  Eigen::LLT<RMat> llt(s);
  if (llt.info() != Eigen::Success) {
    ok = false;
    return 0.0;
  }
  RMat m = llt.matrixL().solve(ds);
  m = llt.matrixL().solve(RMat(m.transpose())).transpose().eval();
  m = (0.5 * (m + m.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<RMat> es(m, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0 ? -1.0 / lmin : kInf;
}

double vec_max_step(ConeKind kind, const RVec& v, const RVec& d) {
  if (kind == ConeKind::SecondOrder) return soc_max_step(v, d);
  double best = kInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (d(i) < 0) best = std::min(best, -v(i) / d(i));
  }
  return best;
}

struct Direction {
  std::vector<RMat> dS, dX;
  std::vector<RVec> ds, dx;
  RVec dy;
};

class Solver {
 public:
  Solver(const ConicProgram& p, const ConicSolverOptions& o) : prog_(p), opt_(o) {
    m_ = p.num_vars();
    c_ = p.cost();
    for (const ConeBlock& cb : p.blocks()) {
      blocks_.push_back(make_block(cb));
      nu_ += cb.degree();
    }
  }

  ConicSolution run();

 private:
  void initialize();
  void residuals(ConicSolution& sol, double& mu);
  bool prepare();
  bool assemble_and_factor();
  void solve_direction(double sigma_mu, const Direction* pred, Direction& dir);
  void step_lengths(const Direction& dir, double& ap, double& ad, bool& ok) const;

  const ConicProgram& prog_;
  ConicSolverOptions opt_;
  int m_ = 0;
  int nu_ = 0;
  RVec c_;
  RVec y_;
  RVec rd_;
  std::vector<Block> blocks_;
  RMat M_;
  Eigen::LLT<RMat> lltM_;
  double data_norm_ = 1.0;
};

void Solver::initialize() {
  y_ = RVec::Zero(m_);
  double cmax = c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0;
  data_norm_ = 0.0;
  for (Block& b : blocks_) {
    double amax = 0.0;
    if (b.matrix()) {
      amax = b.C.norm();
      for (const RMat& a : b.A) amax = std::max(amax, a.norm());
    } else {
      amax = b.h.norm();
      for (Eigen::Index j = 0; j < b.G.cols(); ++j) amax = std::max(amax, b.G.col(j).norm());
    }
    data_norm_ = std::max(data_norm_, b.matrix() ? b.C.norm() : b.h.norm());
    const double zeta = std::max(1.0, amax);
    const double xi = std::max(1.0, cmax / std::max(amax, 1e-12));
    if (b.matrix()) {
      b.S = zeta * RMat::Identity(b.n, b.n);
      b.X = xi * RMat::Identity(b.n, b.n);
    } else if (b.kind == ConeKind::SecondOrder) {
      b.s = RVec::Zero(b.n);
      b.x = RVec::Zero(b.n);
      b.s(0) = zeta * std::sqrt(2.0);
      b.x(0) = xi * std::sqrt(2.0);
    } else {
      b.s = RVec::Constant(b.n, zeta);
      b.x = RVec::Constant(b.n, xi);
    }
  }
}

void Solver::residuals(ConicSolution& sol, double& mu) {
  RVec aty = RVec::Zero(m_);
  double gap = 0.0, dobj = 0.0, pres = 0.0;
  for (Block& b : blocks_) {
    const RVec yl = gather(b, y_);
    if (b.matrix()) {
      b.Rp = b.C + apply_matrix(b, yl) - b.S;
      add_adjoint_matrix(b, b.X, aty);
      gap += b.S.cwiseProduct(b.X).sum();
      dobj -= b.C.cwiseProduct(b.X).sum();
      pres = std::max(pres, b.Rp.norm());
    } else {
      b.rp = b.h + apply_vector(b, yl) - b.s;
      add_adjoint_vector(b, b.x, aty);
      gap += b.s.dot(b.x);
      dobj -= b.h.dot(b.x);
      pres = std::max(pres, b.rp.norm());
    }
  }
  rd_ = c_ - aty;
  sol.objective = c_.dot(y_);
  sol.dual_objective = dobj;
  sol.gap = gap;
  sol.primal_residual = pres / (1.0 + data_norm_);
  sol.dual_residual = rd_.norm() / (1.0 + c_.norm());
  mu = gap / std::max(nu_, 1);
}

bool Solver::prepare() {
  for (Block& b : blocks_) {
    if (b.matrix()) {
      Eigen::LLT<RMat> llt(b.S);
      if (llt.info() != Eigen::Success) return false;
      b.Sinv = llt.solve(RMat::Identity(b.n, b.n));
      b.Sinv = (0.5 * (b.Sinv + b.Sinv.transpose())).eval();
    } else if (b.kind == ConeKind::SecondOrder) {
      if (soc_det(b.s) <= 0 || soc_det(b.x) <= 0 || b.s(0) <= 0 || b.x(0) <= 0) return false;
      b.nt = nt_scaling(b.s, b.x);
      b.lam = b.nt.apply(b.x);
    } else {
      if ((b.s.array() <= 0).any() || (b.x.array() <= 0).any()) return false;
      b.d = b.x.cwiseQuotient(b.s);
    }
  }
  return true;
}

bool Solver::assemble_and_factor() {
  M_ = RMat::Zero(m_, m_);
  for (const Block& b : blocks_) {
    const int nl = static_cast<int>(b.vars.size());
    if (nl == 0) continue;
    RMat loc(nl, nl);
    if (b.matrix()) {
      std::vector<RMat> g(nl);
      for (int j = 0; j < nl; ++j) g[j] = b.X * b.A[j] * b.Sinv;
      for (int j = 0; j < nl; ++j) {
        for (int i = 0; i <= j; ++i) {
          const double v = b.A[i].cwiseProduct(g[j]).sum();
          loc(i, j) = loc(j, i) = v;
        }
      }
    } else if (b.kind == ConeKind::SecondOrder) {
      const RMat bw = b.nt.apply_inv(b.G);
      loc = bw.transpose() * bw;
    } else {
      loc = b.G.transpose() * b.d.asDiagonal() * b.G;
    }
    for (int i = 0; i < nl; ++i) {
      for (int j = 0; j < nl; ++j) M_(b.vars[i], b.vars[j]) += loc(i, j);
    }
  }
  M_ = (0.5 * (M_ + M_.transpose())).eval();
  lltM_.compute(M_);
  if (lltM_.info() == Eigen::Success) return true;
  const double base = std::max(M_.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double reg = 1e-14; reg <= 1e-6; reg *= 100) {
    lltM_.compute(M_ + reg * base * RMat::Identity(m_, m_));
    if (lltM_.info() == Eigen::Success) return true;
  }
  return false;
}

// K - H(dS) with K built from sigma*mu and the predictor's second-order term.
void Solver::solve_direction(double sigma_mu, const Direction* pred, Direction& dir) {
  const std::size_t nb = blocks_.size();
  dir.dS.assign(nb, RMat());
  dir.dX.assign(nb, RMat());
  dir.ds.assign(nb, RVec());
  dir.dx.assign(nb, RVec());
  std::vector<RMat> km(nb);
  std::vector<RVec> kv(nb);
  RVec rhs = -rd_;
  for (std::size_t k = 0; k < nb; ++k) {
    const Block& b = blocks_[k];
    if (b.matrix()) {
      RMat kk = sigma_mu * b.Sinv - b.X;
      if (pred) kk -= pred->dX[k] * pred->dS[k] * b.Sinv;
      km[k] = kk;
      const RMat e = kk - b.X * b.Rp * b.Sinv;
      add_adjoint_matrix(b, 0.5 * (e + e.transpose()), rhs);
    } else if (b.kind == ConeKind::SecondOrder) {
      RVec r = -soc_circ(b.lam, b.lam);
      r(0) += sigma_mu;
      if (pred) {
        r -= soc_circ(b.nt.apply_inv(pred->ds[k]), b.nt.apply(pred->dx[k]));
      }
      kv[k] = b.nt.apply_inv(soc_inv_circ(b.lam, r));
      const RVec e = kv[k] - b.nt.apply_inv(b.nt.apply_inv(b.rp));
      add_adjoint_vector(b, e, rhs);
    } else {
      RVec r = (sigma_mu - (b.x.array() * b.s.array())).matrix();
      if (pred) r -= pred->dx[k].cwiseProduct(pred->ds[k]);
      kv[k] = r.cwiseQuotient(b.s);
      const RVec e = kv[k] - b.d.cwiseProduct(b.rp);
      add_adjoint_vector(b, e, rhs);
    }
  }
  dir.dy = lltM_.solve(rhs);
  for (std::size_t k = 0; k < nb; ++k) {
    const Block& b = blocks_[k];
    const RVec yl = gather(b, dir.dy);
    if (b.matrix()) {
      dir.dS[k] = b.Rp + apply_matrix(b, yl);
      RMat dx = km[k] - b.X * dir.dS[k] * b.Sinv;
      dir.dX[k] = 0.5 * (dx + dx.transpose());
    } else if (b.kind == ConeKind::SecondOrder) {
      dir.ds[k] = b.rp + apply_vector(b, yl);
      dir.dx[k] = kv[k] - b.nt.apply_inv(b.nt.apply_inv(dir.ds[k]));
    } else {
      dir.ds[k] = b.rp + apply_vector(b, yl);
      dir.dx[k] = kv[k] - b.d.cwiseProduct(dir.ds[k]);
    }
  }
}

void Solver::step_lengths(const Direction& dir, double& ap, double& ad, bool& ok) const {
  ap = kInf;
  ad = kInf;
  ok = true;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& b = blocks_[k];
    if (b.matrix()) {
      ap = std::min(ap, psd_max_step(b.S, dir.dS[k], ok));
      ad = std::min(ad, psd_max_step(b.X, dir.dX[k], ok));
    } else {
      ap = std::min(ap, vec_max_step(b.kind, b.s, dir.ds[k]));
      ad = std::min(ad, vec_max_step(b.kind, b.x, dir.dx[k]));
    }
  }
}

ConicSolution Solver::run() {
  ConicSolution sol;
  sol.status = ConicStatus::MaxIterations;
  initialize();
  const double tol = opt_.tol;
  int stalled = 0;
  // Best iterate by the worst of the three relative measures; returned when
  // the method stalls or breaks down near the end.
  ConicSolution best;
  double best_merit = kInf;
  for (int it = 0; it <= opt_.max_iterations; ++it) {
    double mu = 0.0;
    residuals(sol, mu);
    sol.iterations = it;
    const double relgap = sol.gap / (1.0 + std::abs(sol.objective) + std::abs(sol.dual_objective));
    if (opt_.trace) {
      *opt_.trace << "it " << it << " pobj " << sol.objective << " dobj " << sol.dual_objective
                  << " pres " << sol.primal_residual << " dres " << sol.dual_residual << " gap " << relgap
                  << " mu " << mu << "\n";
    }
    const double merit = std::max({sol.primal_residual, sol.dual_residual, relgap});
    if (merit < best_merit) {
      best_merit = merit;
      best = sol;
      best.y = y_;
    }
    if (merit <= tol) {
      sol.status = ConicStatus::Optimal;
      break;
    }
    // Infeasibility certificates from diverging iterates.
    const double aty_norm = (c_ - rd_).norm();
    if (sol.dual_objective > 0 && aty_norm <= 1e-8 * sol.dual_objective &&
        sol.primal_residual > tol) {
      sol.status = ConicStatus::PrimalInfeasible;
      break;
    }
    if (sol.objective < 0 && (data_norm_ + sol.primal_residual * (1.0 + data_norm_)) <=
                                 1e-8 * -sol.objective && sol.dual_residual > tol) {
      sol.status = ConicStatus::DualInfeasible;
      break;
    }
    // Lost ground well past the best point: the linear algebra has run out of digits.
    if (best_merit < 1e-4 && merit > 1e3 * best_merit) {
      sol.status = ConicStatus::NumericalFailure;
      break;
    }
    if (it == opt_.max_iterations) break;
    if (!prepare() || !assemble_and_factor()) {
      sol.status = ConicStatus::NumericalFailure;
      break;
    }
    Direction pred, corr;
    solve_direction(0.0, nullptr, pred);
    double ap, ad;
    bool ok;
    step_lengths(pred, ap, ad, ok);
    if (!ok) {
      sol.status = ConicStatus::NumericalFailure;
      break;
    }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const Block& b = blocks_[k];
      if (b.matrix()) {
        gap_aff += (b.S + ap * pred.dS[k]).cwiseProduct(b.X + ad * pred.dX[k]).sum();
      } else {
        gap_aff += (b.s + ap * pred.ds[k]).dot(b.x + ad * pred.dx[k]);
      }
    }
    const double mu_aff = std::max(gap_aff, 0.0) / std::max(nu_, 1);
    double sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);
    solve_direction(sigma * mu, &pred, corr);
    step_lengths(corr, ap, ad, ok);
    if (!ok) {
      sol.status = ConicStatus::NumericalFailure;
      break;
    }
    ap = std::min(1.0, opt_.step_fraction * ap);
    ad = std::min(1.0, opt_.step_fraction * ad);
    if (ap < 1e-12 && ad < 1e-12) {
      if (++stalled >= 3) {
        sol.status = ConicStatus::NumericalFailure;
        break;
      }
    } else {
      stalled = 0;
    }
    y_ += ap * corr.dy;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      Block& b = blocks_[k];
      if (b.matrix()) {
        b.S += ap * corr.dS[k];
        b.X += ad * corr.dX[k];
        b.S = (0.5 * (b.S + b.S.transpose())).eval();
        b.X = (0.5 * (b.X + b.X.transpose())).eval();
      } else {
        b.s += ap * corr.ds[k];
        b.x += ad * corr.dx[k];
      }
    }
  }
  sol.y = y_;
  if (sol.status == ConicStatus::NumericalFailure || sol.status == ConicStatus::MaxIterations) {
    const ConicStatus status = sol.status;
    const int iterations = sol.iterations;
    sol = best;
    sol.status = best_merit <= 10 * tol ? ConicStatus::Inaccurate : status;
    sol.iterations = iterations;
  }
  return sol;
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& program, const ConicSolverOptions& options) {
  if (program.num_vars() == 0) throw DimensionError("conic program has no variables");
  Solver s(program, options);
  return s.run();
}

}  // namespace nfisac
