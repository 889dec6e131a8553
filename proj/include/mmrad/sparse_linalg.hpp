#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace mmrad {

/// Compressed-row storage; after makeCompressed() column indices are strictly
/// increasing within a row and duplicates have been summed.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, Eigen::Index index)
      : std::runtime_error(what), index_(index) {}
  Eigen::Index index() const { return index_; }

 private:
  Eigen::Index index_;
};

/// Block Jacobi preconditioner for two stacked fields on one grid: unknowns i
/// and i + n/2 form a 2x2 block, so pointwise coupling between the fields is
/// inverted exactly. Odd n or a singular block falls back to the diagonal
/// (1 where the diagonal vanishes).
class PairedJacobi {
 public:
  PairedJacobi() = default;
  explicit PairedJacobi(const SparseMatrix& A);

  Vector solve(const Vector& b) const;
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  Eigen::Index half_ = 0;
  // Inverse blocks [p q; r s] for paired rows, or the inverse diagonal in p.
  Vector p_, q_, r_, s_;
};

/// direct: sparse LU with partial pivoting (COLAMD ordering).
/// automatic: BiCGSTAB preconditioned by PairedJacobi; when it misses the
/// residual contract, BiCGSTAB with an incomplete LU, then the direct LU.
enum class SolverKind { direct, automatic };

/// Linear solver bound to one matrix. Solve results are independent of
/// earlier calls; solve() may be called concurrently.
class Factorization {
 public:
  explicit Factorization(const SparseMatrix& A, SolverKind kind = SolverKind::automatic);

  Eigen::Index size() const { return n_; }
  SolverKind kind() const { return kind_; }

  /// Solution with relative residual ||Ax - b||_inf / ||b||_inf <= 1e-10.
  Vector solve(const Vector& b) const;

 private:
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  using DirectLU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;
  using Ilu = Eigen::IncompleteLUT<double, int>;

  const DirectLU& direct() const;
  const Ilu& ilu() const;
  Vector solve_direct(const Vector& b) const;

  Eigen::Index n_ = 0;
  SolverKind kind_;
  SparseMatrix A_;
  std::shared_ptr<PairedJacobi> pairs_;
  mutable std::shared_ptr<DirectLU> lu_;
  mutable std::shared_ptr<Ilu> ilu_;
  mutable std::shared_ptr<std::mutex> lu_mutex_ = std::make_shared<std::mutex>();
};

inline Factorization factorize(const SparseMatrix& A, SolverKind kind = SolverKind::automatic) {
  return Factorization(A, kind);
}
inline Vector solve(const Factorization& f, const Vector& b) { return f.solve(b); }

Vector matvec(const SparseMatrix& A, const Vector& x);

/// ||A x - b||_inf.
double residual_norm(const SparseMatrix& A, const Vector& x, const Vector& b);

constexpr double kSolveRelativeResidual = 1e-10;

/// Matrix Market coordinate/real/general.
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& A);
SparseMatrix read_matrix_market(const std::filesystem::path& path);

}  // namespace mmrad
