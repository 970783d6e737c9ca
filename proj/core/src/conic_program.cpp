#include "nfisac/conic_program.hpp"

#include <charconv>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace nfisac {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

const char* cone_kind_name(ConeKind kind) {
  switch (kind) {
    case ConeKind::NonNegative: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::Semidefinite: return "psd";
  }
  return "?";
}

const char* conic_status_name(ConicStatus status) {
  switch (status) {
    case ConicStatus::Optimal: return "optimal";
    case ConicStatus::Inaccurate: return "optimal_inaccurate";
    case ConicStatus::PrimalInfeasible: return "infeasible";
    case ConicStatus::DualInfeasible: return "unbounded";
    case ConicStatus::MaxIterations: return "max_iterations";
    case ConicStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

int ConicProgram::add_variable(const std::string& name, double cost) {
  const int idx = num_vars();
  cost_.conservativeResize(idx + 1);
  cost_(idx) = cost;
  names_.push_back(name);
  return idx;
}

int ConicProgram::add_block(ConeKind kind, int dim, const std::string& label) {
  if (dim < 1) throw DimensionError("cone dimension must be >= 1");
  if (kind == ConeKind::SecondOrder && dim < 2) throw DimensionError("second-order cone needs dim >= 2");
  ConeBlock b;
  b.kind = kind;
  b.dim = dim;
  b.label = label;
  blocks_.push_back(std::move(b));
  return num_blocks() - 1;
}

void ConicProgram::check_entry(int block, int var, int row, int col) const {
  require_dims(block >= 0 && block < num_blocks(), "block index out of range");
  require_dims(var >= -1 && var < num_vars(), "variable index out of range");
  const ConeBlock& b = blocks_[block];
  require_dims(row >= 0 && row < b.dim, "row out of range in block " + b.label);
  if (b.kind == ConeKind::Semidefinite) {
    require_dims(col >= row && col < b.dim, "semidefinite entries must be upper-triangular");
  } else {
    require_dims(col == 0, "vector cone entries use column 0");
  }
}

void ConicProgram::add_constant(int block, int row, int col, double value) {
  check_entry(block, -1, row, col);
  if (value != 0.0) blocks_[block].entries.push_back({-1, row, col, value});
}

void ConicProgram::add_coefficient(int block, int var, int row, int col, double value) {
  check_entry(block, var, row, col);
  if (value != 0.0) blocks_[block].entries.push_back({var, row, col, value});
}

void ConicProgram::scale_block(int block, double s) {
  require_dims(block >= 0 && block < num_blocks(), "block index out of range");
  if (!(s > 0.0)) throw DomainError("block scale must be positive");
  for (ConeEntry& e : blocks_[block].entries) e.value *= s;
}

RVec ConicProgram::vector_slack(int block, const RVec& y) const {
  const ConeBlock& b = blocks_[block];
  require_dims(b.kind != ConeKind::Semidefinite, "vector_slack on a semidefinite block");
  RVec s = RVec::Zero(b.dim);
  for (const ConeEntry& e : b.entries) s(e.row) += e.var < 0 ? e.value : e.value * y(e.var);
  return s;
}

RMat ConicProgram::matrix_slack(int block, const RVec& y) const {
  const ConeBlock& b = blocks_[block];
  require_dims(b.kind == ConeKind::Semidefinite, "matrix_slack on a vector block");
  RMat s = RMat::Zero(b.dim, b.dim);
  for (const ConeEntry& e : b.entries) {
    const double v = e.var < 0 ? e.value : e.value * y(e.var);
    s(e.row, e.col) += v;
    if (e.row != e.col) s(e.col, e.row) += v;
  }
  return s;
}

double ConicProgram::cone_margin(int block, const RVec& y) const {
  const ConeBlock& b = blocks_[block];
  switch (b.kind) {
    case ConeKind::NonNegative: return vector_slack(block, y).minCoeff();
    case ConeKind::SecondOrder: {
      const RVec s = vector_slack(block, y);
      return s(0) - s.tail(b.dim - 1).norm();
    }
    case ConeKind::Semidefinite: {
      Eigen::SelfAdjointEigenSolver<RMat> es(matrix_slack(block, y), Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
  }
  return 0.0;
}

void ConicProgram::dump(std::ostream& os) const {
  os << "nfisac-conic 1\n";
  os << "vars " << num_vars() << "\n";
  os << "cost";
  for (int i = 0; i < num_vars(); ++i) os << ' ' << fmt(cost_(i));
  os << "\n";
  os << "blocks " << num_blocks() << "\n";
  for (int b = 0; b < num_blocks(); ++b) {
    os << "block " << b << ' ' << cone_kind_name(blocks_[b].kind) << ' ' << blocks_[b].dim << ' '
       << (blocks_[b].label.empty() ? "-" : blocks_[b].label) << "\n";
  }
  for (int b = 0; b < num_blocks(); ++b) {
    for (const ConeEntry& e : blocks_[b].entries) {
      os << "entry " << b << ' ' << e.var << ' ' << e.row << ' ' << e.col << ' ' << fmt(e.value)
         << "\n";
    }
  }
}

}  // namespace nfisac
