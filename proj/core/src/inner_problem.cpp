#include "nfisac/inner_problem.hpp"

#include <string>

#include <Eigen/Cholesky>

namespace nfisac {

namespace {

struct Builder {
  const InnerInputs& in;
  InnerProblem out;
  int users;
  int streams;
  int na;

  explicit Builder(const InnerInputs& inputs) : in(inputs) {
    users = static_cast<int>(in.channels.cols());
    streams = users + 1;
    na = static_cast<int>(in.mapping.cols());
  }

  ConicProgram& prog() { return out.program; }
  const InnerLayout& lay() const { return out.layout; }

  bool rsma() const { return in.scheme == AccessScheme::Rsma; }

  // Adds sum_a Re(coef_a * x_{stream, a}) * scale to a vector-cone row.
  void add_re_functional(int block, int row, int stream, const CVec& coef, double scale) {
    if (stream < lay().first_stream) return;
    for (int a = 0; a < na; ++a) {
      const cplx g = coef(a) * scale;
      prog().add_coefficient(block, lay().x_index(stream, a, false), row, 0, g.real());
      prog().add_coefficient(block, lay().x_index(stream, a, true), row, 0, -g.imag());
    }
  }

  // Adds Re and Im of sum_a coef_a x_{stream, a}, times scale, to two rows.
  void add_complex_functional(int block, int row_re, int row_im, int stream, const CVec& coef,
                              double scale) {
    add_re_functional(block, row_re, stream, coef, scale);
    add_re_functional(block, row_im, stream, CVec(coef * cplx(0, -1)), scale);
  }

  void add_variables();
  void add_sensing_blocks();
  void add_power_block();
  void add_penalty_block();
  void add_rate_blocks();
  void add_rate_cone(const std::string& label, int user, bool common);
};

void Builder::add_variables() {
  InnerLayout& l = out.layout;
  l.antennas = na;
  l.streams = streams;
  l.first_stream = rsma() ? 0 : 1;
  l.x_offset = prog().num_vars();
  for (int j = l.first_stream; j < streams; ++j) {
    for (int a = 0; a < na; ++a) {
      prog().add_variable("x_re[" + std::to_string(a) + "," + std::to_string(j) + "]");
      prog().add_variable("x_im[" + std::to_string(a) + "," + std::to_string(j) + "]");
    }
  }
  if (rsma()) {
    l.c_offset = prog().num_vars();
    for (int k = 0; k < users; ++k) prog().add_variable("c[" + std::to_string(k) + "]");
  }
  if (in.penalty_target) l.t_index = prog().add_variable("t", 1.0);
  if (in.objective == InnerObjective::Elastic) l.s_index = prog().add_variable("s", 1.0);
}

int sym_index(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

void Builder::add_sensing_blocks() {
  const SensingModel& sm = *in.sensing;
  const int m = sm.targets();
  const int h = 2 * m;
  const int nsym = h * (h + 1) / 2;
  InnerLayout& l = out.layout;
  l.u_offset = prog().num_vars();
  for (int i = 0; i < nsym; ++i) prog().add_variable("u[" + std::to_string(i) + "]");
  l.v_offset = prog().num_vars();
  for (int i = 0; i < nsym; ++i) prog().add_variable("v[" + std::to_string(i) + "]");

  // J(Q(x)), Q(x) = F (X_t X^H + X X_t^H - X_t X_t^H) F^H, is affine in x.
  const CMat yt = in.mapping * in.anchor;
  const RMat j_anchor = in.power_budget * sm.fim(yt * yt.adjoint());
  RVec d = RVec::Ones(2 * h);
  {
    const RMat j22 = j_anchor.bottomRightCorner(h, h);
    for (int i = 0; i < h; ++i) {
      if (j22(i, i) > 0) d(h + i) = 1.0 / std::sqrt(j22(i, i));
    }
    RMat schur = j_anchor.topLeftCorner(h, h);
    Eigen::LDLT<RMat> ldlt(j22);
    if (ldlt.info() == Eigen::Success && j22.diagonal().minCoeff() > 0) {
      const RMat j12 = j_anchor.topRightCorner(h, h);
      schur -= j12 * ldlt.solve(RMat(j12.transpose()));
    }
    for (int i = 0; i < h; ++i) {
      const double v = schur(i, i) > 0 ? schur(i, i) : j_anchor(i, i);
      if (v > 0) d(i) = 1.0 / std::sqrt(v);
    }
  }
  l.param_scale = d;
  auto scaled = [&](const RMat& j) { return RMat(d.asDiagonal() * j * d.asDiagonal()); };

  const int fim = prog().add_block(ConeKind::Semidefinite, 2 * h, "fim");
  const RMat jc = scaled(-j_anchor);
  for (int p = 0; p < 2 * h; ++p) {
    for (int q = p; q < 2 * h; ++q) prog().add_constant(fim, p, q, jc(p, q));
  }
  for (int j = l.first_stream; j < streams; ++j) {
    const CMat ycol = yt.col(j);
    for (int a = 0; a < na; ++a) {
      for (int part = 0; part < 2; ++part) {
        const cplx unit = part == 0 ? cplx(1, 0) : cplx(0, 1);
        const CMat v = unit * in.mapping.col(a);
        const RMat ji = scaled(in.power_budget * sm.fim_rank2(ycol, v));
        const int var = l.x_index(j, a, part == 1);
        for (int p = 0; p < 2 * h; ++p) {
          for (int q = p; q < 2 * h; ++q) prog().add_coefficient(fim, var, p, q, ji(p, q));
        }
      }
    }
  }
  for (int p = 0; p < h; ++p) {
    for (int q = p; q < h; ++q) prog().add_coefficient(fim, l.u_offset + sym_index(p, q, h), p, q, -1.0);
  }

  // [V I; I U] >= 0
  const int lift = prog().add_block(ConeKind::Semidefinite, 2 * h, "lift");
  for (int p = 0; p < h; ++p) {
    prog().add_constant(lift, p, h + p, 1.0);
    for (int q = p; q < h; ++q) {
      prog().add_coefficient(lift, l.v_offset + sym_index(p, q, h), p, q, 1.0);
      prog().add_coefficient(lift, l.u_offset + sym_index(p, q, h), h + p, h + q, 1.0);
    }
  }
  // Tr(CRB) / reference = sum_i (1 / fim_scale) d_i^2 V_ii / reference
  for (int i = 0; i < h; ++i) {
    prog().cost()(l.v_offset + sym_index(i, i, h)) =
        d(i) * d(i) / (sm.config().fim_scale() * in.crb_reference);
  }
}

void Builder::add_power_block() {
  // ||F X||_F <= 1 with F^H F = R^H R.
  CMat r;
  const CMat gram = in.mapping.adjoint() * in.mapping;
  if (in.variant == InnerVariant::TwoStage) {
    Eigen::LLT<CMat> llt(gram);
    if (llt.info() != Eigen::Success) throw RankError("analog matrix has dependent columns");
    r = llt.matrixU();
  } else {
    r = CMat::Identity(na, na);
  }
  const int ns = streams - lay().first_stream;
  const int blk = prog().add_block(ConeKind::SecondOrder, 1 + 2 * na * ns, "power");
  prog().add_constant(blk, 0, 0, 1.0);
  int row = 1;
  for (int j = lay().first_stream; j < streams; ++j) {
    for (int i = 0; i < na; ++i) {
      add_complex_functional(blk, row, row + 1, j, CVec(r.row(i).transpose()), 1.0);
      row += 2;
    }
  }
}

void Builder::add_penalty_block() {
  const CMat& target = *in.penalty_target;
  require_dims(target.rows() == na && target.cols() == streams, "penalty target shape");
  const int ns = streams - lay().first_stream;
  const int blk = prog().add_block(ConeKind::SecondOrder, 2 + 2 * na * ns, "penalty");
  // (t + 1, t - 1, 2 e), e = (x - b) / sqrt(2 rho)
  prog().add_coefficient(blk, lay().t_index, 0, 0, 1.0);
  prog().add_constant(blk, 0, 0, 1.0);
  prog().add_coefficient(blk, lay().t_index, 1, 0, 1.0);
  prog().add_constant(blk, 1, 0, -1.0);
  const double w = 2.0 / std::sqrt(2.0 * in.rho);
  int row = 2;
  for (int j = lay().first_stream; j < streams; ++j) {
    for (int a = 0; a < na; ++a) {
      prog().add_coefficient(blk, lay().x_index(j, a, false), row, 0, w);
      prog().add_constant(blk, row, 0, -w * target(a, j).real());
      prog().add_coefficient(blk, lay().x_index(j, a, true), row + 1, 0, w);
      prog().add_constant(blk, row + 1, 0, -w * target(a, j).imag());
      row += 2;
    }
  }
  // The t = 0 point would be far inside; keep the scale of e moderate.
  double big = 1.0;
  for (const ConeEntry& e : prog().block(blk).entries) big = std::max(big, std::abs(e.value));
  prog().scale_block(blk, 1.0 / big);
}

// a ||q||^2 <= r(x, c), with q = v over the interfering streams and r affine.
void Builder::add_rate_cone(const std::string& label, int k, bool common) {
  const double tau = wmmse_tau();
  const cplx omega = common ? in.aux.eq_common[k] : in.aux.eq_private[k];
  const double eta = common ? in.aux.wt_common[k] : in.aux.wt_private[k];
  const double a = eta * std::norm(omega);
  // h_eff^H x_j = sum conj(h_eff_a) x_{j a}
  const CVec heff = in.mapping.adjoint() * in.channels.col(k);
  const CVec hc = heff.conjugate();
  const int signal_stream = common ? 0 : k + 1;
  const int j0 = common ? lay().first_stream : std::max(1, lay().first_stream);
  const int nq = streams - j0;

  // r(x, c) = r0 + 2 eta Re(omega v_signal) - sum c (common) or + c_k (private) [+ s]
  double r0 = tau + std::log2(eta) - eta * (std::norm(omega) + 1.0);
  if (!common) r0 -= in.rate_threshold;
  // Normalization from the anchor value of the quadratic side.
  double quad_anchor = 0.0;
  const CVec v_anchor = in.anchor.transpose() * hc;
  for (int j = j0; j < streams; ++j) quad_anchor += a * std::norm(v_anchor(j));
  const double kappa = std::max({1.0, quad_anchor, std::abs(r0)});

  auto add_rhs = [&](int blk, int row, double scale) {
    prog().add_constant(blk, row, 0, scale * r0);
    add_re_functional(blk, row, signal_stream, CVec(2.0 * eta * omega * hc), scale);
    if (rsma()) {
      if (common) {
        for (int l = 0; l < users; ++l) prog().add_coefficient(blk, lay().c_offset + l, row, 0, -scale);
      } else {
        prog().add_coefficient(blk, lay().c_offset + k, row, 0, scale);
      }
    }
    if (!common && lay().s_index >= 0) prog().add_coefficient(blk, lay().s_index, row, 0, scale);
  };

  if (a <= 0.0) {
    const int blk = prog().add_block(ConeKind::NonNegative, 1, label);
    add_rhs(blk, 0, 1.0 / kappa);
    return;
  }
  const int blk = prog().add_block(ConeKind::SecondOrder, 2 + 2 * nq, label);
  // (r' + 1, r' - 1, 2 q'), r' = r / kappa, q' = sqrt(a / kappa) v
  add_rhs(blk, 0, 1.0 / kappa);
  prog().add_constant(blk, 0, 0, 1.0);
  add_rhs(blk, 1, 1.0 / kappa);
  prog().add_constant(blk, 1, 0, -1.0);
  const double qs = 2.0 * std::sqrt(a / kappa);
  int row = 2;
  for (int j = j0; j < streams; ++j) {
    add_complex_functional(blk, row, row + 1, j, hc, qs);
    row += 2;
  }
}

void Builder::add_rate_blocks() {
  for (int k = 0; k < users; ++k) {
    if (rsma()) add_rate_cone("common[" + std::to_string(k) + "]", k, true);
    add_rate_cone("private[" + std::to_string(k) + "]", k, false);
  }
  if (rsma()) {
    const int blk = prog().add_block(ConeKind::NonNegative, users, "c>=0");
    for (int k = 0; k < users; ++k) prog().add_coefficient(blk, lay().c_offset + k, k, 0, 1.0);
  }
}

}  // namespace

InnerProblem build_inner_problem(const InnerInputs& in) {
  const Eigen::Index n_t = in.channels.rows();
  const Eigen::Index users = in.channels.cols();
  require_dims(users >= 1, "at least one user is required");
  require_dims(in.mapping.rows() == n_t, "mapping rows must equal N_t");
  require_dims(in.anchor.rows() == in.mapping.cols() && in.anchor.cols() == users + 1,
               "anchor must be N_a x (K+1)");
  require_dims(in.aux.eq_common.size() == static_cast<std::size_t>(users),
               "WMMSE auxiliaries do not match the user count");
  if (in.variant == InnerVariant::FullyConnected || in.variant == InnerVariant::PartiallyConnected) {
    if (!in.penalty_target) throw DimensionError("penalty variants need the F W - rho D target");
    if (!(in.rho > 0)) throw DomainError("penalty parameter must be positive");
  }
  if (in.objective == InnerObjective::Sensing && in.sensing == nullptr) {
    throw DimensionError("sensing objective needs a sensing model");
  }
  if (in.sensing && in.sensing->tx_antennas() != n_t) throw DimensionError("sensing model N_t mismatch");
  Builder b(in);
  b.out.users = static_cast<int>(users);
  b.out.targets = in.sensing ? in.sensing->targets() : 0;
  b.add_variables();
  if (in.objective == InnerObjective::Sensing) b.add_sensing_blocks();
  b.add_power_block();
  if (in.penalty_target) b.add_penalty_block();
  b.add_rate_blocks();
  return std::move(b.out);
}

InnerSolution solve_inner(const InnerProblem& problem, const ConicSolverOptions& options) {
  InnerSolution s;
  s.raw = solve_conic(problem.program, options);
  const InnerLayout& l = problem.layout;
  const RVec& y = s.raw.y;
  s.x = CMat::Zero(l.antennas, l.streams);
  for (int j = l.first_stream; j < l.streams; ++j) {
    for (int a = 0; a < l.antennas; ++a) {
      s.x(a, j) = cplx(y(l.x_index(j, a, false)), y(l.x_index(j, a, true)));
    }
  }
  s.common.assign(problem.users, 0.0);
  if (l.c_offset >= 0) {
    for (int k = 0; k < problem.users; ++k) s.common[k] = std::max(0.0, y(l.c_offset + k));
  }
  if (l.u_offset >= 0) {
    const int h = 2 * problem.targets;
    RMat us(h, h);
    for (int p = 0; p < h; ++p) {
      for (int q = p; q < h; ++q) us(p, q) = us(q, p) = y(l.u_offset + sym_index(p, q, h));
    }
    const RVec dinv = l.param_scale.head(h).cwiseInverse();
    s.u = dinv.asDiagonal() * us * dinv.asDiagonal();
  }
  if (l.t_index >= 0) s.penalty_epigraph = y(l.t_index);
  if (l.s_index >= 0) s.slack = y(l.s_index);
  return s;
}

}  // namespace nfisac
