#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nfisac/common.hpp"

namespace nfisac {

enum class ConeKind { NonNegative, SecondOrder, Semidefinite };

const char* cone_kind_name(ConeKind kind);

// One coefficient of a cone's affine slack. var == -1 marks the constant term.
// Vector cones use col == 0. Semidefinite blocks store the upper triangle
// (row <= col); an off-diagonal entry stands for both symmetric positions.
struct ConeEntry {
  int var;
  int row;
  int col;
  double value;
};

struct ConeBlock {
  ConeKind kind = ConeKind::NonNegative;
  int dim = 0;  // vector length, or matrix order
  std::string label;
  std::vector<ConeEntry> entries;

  int degree() const { return kind == ConeKind::SecondOrder ? 1 : dim; }
};

// minimize  c^T y  subject to  slack_b(y) = C_b + sum_i y_i A_{b,i}  in cone b, for every block b.
//
// Second-order blocks hold (s_0, s_1) with s_0 >= ||s_1||_2. Semidefinite blocks
// hold real symmetric matrices.
class ConicProgram {
 public:
  int add_variable(const std::string& name, double cost = 0.0);
  int add_block(ConeKind kind, int dim, const std::string& label);
  void add_constant(int block, int row, int col, double value);
  void add_coefficient(int block, int var, int row, int col, double value);
  // Multiply every entry of a block by s > 0 (a congruence that keeps the cone).
  void scale_block(int block, double s);

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const RVec& cost() const { return cost_; }
  RVec& cost() { return cost_; }
  const std::vector<std::string>& names() const { return names_; }
  const ConeBlock& block(int b) const { return blocks_[b]; }
  const std::vector<ConeBlock>& blocks() const { return blocks_; }

  // Slack of a vector block (dim) or the full symmetric matrix of a semidefinite block.
  RVec vector_slack(int block, const RVec& y) const;
  RMat matrix_slack(int block, const RVec& y) const;
  // Smallest eigenvalue (semidefinite), s_0 - ||s_1|| (second order), or min entry.
  double cone_margin(int block, const RVec& y) const;

  // Plain-text sparse dump:
  //   nfisac-conic 1
  //   vars <m>
  //   cost <c_1> ... <c_m>
  //   blocks <count>
  //   block <index> <nonneg|soc|psd> <dim> <label>
  //   entry <block> <var|-1> <row> <col> <value>
  // One `entry` line per coefficient; psd entries list the upper triangle.
  void dump(std::ostream& os) const;

 private:
  void check_entry(int block, int var, int row, int col) const;

  RVec cost_;
  std::vector<std::string> names_;
  std::vector<ConeBlock> blocks_;
};

// Inaccurate: stopped early, best iterate within 10x the tolerance.
enum class ConicStatus { Optimal, Inaccurate, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalFailure };

const char* conic_status_name(ConicStatus status);

struct ConicSolverOptions {
  double tol = 1e-7;
  int max_iterations = 120;
  double step_fraction = 0.95;
  std::ostream* trace = nullptr;  // one line per iteration when set
};

struct ConicSolution {
  ConicStatus status = ConicStatus::NumericalFailure;
  RVec y;
  double objective = 0.0;       // c^T y
  double dual_objective = 0.0;  // -sum <C_b, X_b>
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  bool ok() const { return status == ConicStatus::Optimal || status == ConicStatus::Inaccurate; }
};

ConicSolution solve_conic(const ConicProgram& program, const ConicSolverOptions& options = {});

}  // namespace nfisac
