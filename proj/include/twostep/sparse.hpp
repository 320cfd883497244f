#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twostep {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Symmetric matrix in full compressed-row storage.  Built only from
/// lower-triangle contributions, which are summed in insertion order and
/// mirrored, so the stored matrix is bitwise symmetric.
class SparseSymmetric {
 public:
  SparseSymmetric() = default;

  /// Entries with row < col are rejected; duplicates are summed.
  static SparseSymmetric from_lower_triplets(int n, std::span<const Triplet> lower);

  /// Several matrices over the union of their patterns (so they can be
  /// combined entrywise with `axpby`).
  static std::vector<SparseSymmetric> with_shared_pattern(int n,
                                                          const std::vector<std::vector<Triplet>>& lower);

  int dimension() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_index() const { return cols_; }
  std::span<const double> values() const { return values_; }

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  double coefficient(int row, int col) const;

  bool same_pattern(const SparseSymmetric& other) const;
  /// a*this + b*other; patterns must match.
  SparseSymmetric axpby(double a, const SparseSymmetric& other, double b) const;

  /// One "row col value" line per stored entry (1-based indices).
  void write_coordinate(std::ostream& out) const;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

enum class Preconditioner { None, Diagonal, SymmetricSweep };

/// z = M^{-1} r for a user-supplied symmetric positive definite M.
using PreconditionerHook = std::function<void(std::span<const double> r, std::span<double> z)>;

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  Preconditioner precond = Preconditioner::Diagonal;
  PreconditionerHook hook;  // overrides `precond` when set
  bool throw_on_failure = true;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  double wall_time = 0.0;
  std::string method;
  /// 0.5 x'Ax - b'x at exit; non-increasing along conjugate gradient iterations.
  double energy = 0.0;
  bool converged = false;
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Preconditioned conjugate gradients.  For consistent semi-definite systems
/// start from x0 = 0 so iterates stay in the preconditioned range.
SolveResult cg_solve(const SparseSymmetric& A, std::span<const double> b, std::span<const double> x0,
                     const SolveOptions& options = {});

/// Sparse Cholesky factorization (CHOLMOD) of A + shift * diag(A).
class SpdFactorization {
 public:
  explicit SpdFactorization(const SparseSymmetric& A, double relative_shift = 0.0);
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  std::vector<double> solve(std::span<const double> b) const;
  int dimension() const;
  /// Adapter for `SolveOptions::hook`; the factorization must outlive it.
  PreconditionerHook as_preconditioner() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Direct solve of an SPD system; throws SolverError on a non-positive pivot.
SolveResult direct_spd_solve(const SparseSymmetric& A, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace twostep
