#include "twostep/sparse.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <cholmod.h>

namespace twostep {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// SparseSymmetric

std::vector<SparseSymmetric> SparseSymmetric::with_shared_pattern(
    int n, const std::vector<std::vector<Triplet>>& lower) {
  struct Rec { int row, col, channel; double value; };
  std::vector<Rec> recs;
  std::size_t total = 0;
  for (const auto& ch : lower) total += ch.size();
  recs.reserve(total);
  for (int ch = 0; ch < static_cast<int>(lower.size()); ++ch)
    for (const auto& t : lower[ch]) {
      if (t.row < t.col) throw std::invalid_argument("sparse: upper-triangle entry passed as lower");
      if (t.row < 0 || t.row >= n || t.col < 0) throw std::out_of_range("sparse: index out of range");
      recs.push_back({t.row, t.col, ch, t.value});
    }
  std::stable_sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  // Unique lower entries with per-channel sums in insertion order.
  const int nch = static_cast<int>(lower.size());
  std::vector<std::array<int, 2>> keys;
  std::vector<double> sums;  // keys.size() * nch
  for (std::size_t i = 0; i < recs.size();) {
    std::size_t j = i;
    keys.push_back({recs[i].row, recs[i].col});
    sums.resize(sums.size() + nch, 0.0);
    double* s = sums.data() + (keys.size() - 1) * nch;
    while (j < recs.size() && recs[j].row == recs[i].row && recs[j].col == recs[i].col) {
      s[recs[j].channel] += recs[j].value;
      ++j;
    }
    i = j;
  }

  // Full pattern: each lower entry (i, j) appears in row i, and in row j when i != j.
  std::vector<int> count(n + 1, 0);
  for (const auto& k : keys) {
    ++count[k[0] + 1];
    if (k[0] != k[1]) ++count[k[1] + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  const std::size_t nnz = count[n];
  std::vector<int> cols(nnz);
  std::vector<std::size_t> src(nnz);
  std::vector<int> fill(count.begin(), count.end() - 1);
  // Rows receive lower entries and mirrored upper entries interleaved; each
  // row is sorted by column afterwards.
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const int i = keys[k][0], j = keys[k][1];
    cols[fill[i]] = j;
    src[fill[i]++] = k;
    if (i != j) {
      cols[fill[j]] = i;
      src[fill[j]++] = k;
    }
  }
  for (int r = 0; r < n; ++r) {
    std::vector<std::pair<int, std::size_t>> row;
    for (int p = count[r]; p < count[r + 1]; ++p) row.emplace_back(cols[p], src[p]);
    std::sort(row.begin(), row.end());
    for (int p = count[r]; p < count[r + 1]; ++p) {
      cols[p] = row[p - count[r]].first;
      src[p] = row[p - count[r]].second;
    }
  }

  std::vector<SparseSymmetric> out(nch);
  for (int ch = 0; ch < nch; ++ch) {
    SparseSymmetric& m = out[ch];
    m.n_ = n;
    m.row_ptr_ = count;
    m.cols_ = cols;
    m.values_.resize(nnz);
    for (std::size_t p = 0; p < nnz; ++p) m.values_[p] = sums[src[p] * nch + ch];
  }
  return out;
}

SparseSymmetric SparseSymmetric::from_lower_triplets(int n, std::span<const Triplet> lower) {
  std::vector<std::vector<Triplet>> ch(1);
  ch[0].assign(lower.begin(), lower.end());
  return std::move(with_shared_pattern(n, ch)[0]);
}

void SparseSymmetric::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[cols_[p]];
    y[i] = s;
  }
}

std::vector<double> SparseSymmetric::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

std::vector<double> SparseSymmetric::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      if (cols_[p] == i) d[i] = values_[p];
  return d;
}

double SparseSymmetric::coefficient(int row, int col) const {
  const auto first = cols_.begin() + row_ptr_[row];
  const auto last = cols_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  return (it != last && *it == col) ? values_[it - cols_.begin()] : 0.0;
}

bool SparseSymmetric::same_pattern(const SparseSymmetric& o) const {
  return n_ == o.n_ && row_ptr_ == o.row_ptr_ && cols_ == o.cols_;
}

SparseSymmetric SparseSymmetric::axpby(double a, const SparseSymmetric& other, double b) const {
  if (!same_pattern(other)) throw std::invalid_argument("sparse: axpby needs identical patterns");
  SparseSymmetric m = *this;
  for (std::size_t p = 0; p < values_.size(); ++p) m.values_[p] = a * values_[p] + b * other.values_[p];
  return m;
}

void SparseSymmetric::write_coordinate(std::ostream& out) const {
  const auto prec = out.precision(17);
  for (int i = 0; i < n_; ++i)
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out << i + 1 << ' ' << cols_[p] + 1 << ' ' << values_[p] << '\n';
  out.precision(prec);
}

// ---------------------------------------------------------------------------
// Conjugate gradients

namespace {

class BuiltinPreconditioner {
 public:
  BuiltinPreconditioner(const SparseSymmetric& A, Preconditioner kind) : A_(A), kind_(kind) {
    if (kind_ != Preconditioner::None) {
      inv_diag_ = A.diagonal();
      for (double& d : inv_diag_) d = d > 0.0 ? 1.0 / d : 1.0;
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const {
    const int n = A_.dimension();
    switch (kind_) {
      case Preconditioner::None:
        std::copy(r.begin(), r.end(), z.begin());
        return;
      case Preconditioner::Diagonal:
        for (int i = 0; i < n; ++i) z[i] = inv_diag_[i] * r[i];
        return;
      case Preconditioner::SymmetricSweep: {
        // (D + L) y = r;  z = (D + U)^{-1} D y
        const auto rp = A_.row_ptr();
        const auto ci = A_.col_index();
        const auto v = A_.values();
        for (int i = 0; i < n; ++i) {
          double s = r[i];
          for (int p = rp[i]; p < rp[i + 1] && ci[p] < i; ++p) s -= v[p] * z[ci[p]];
          z[i] = s * inv_diag_[i];
        }
        for (int i = 0; i < n; ++i) z[i] /= inv_diag_[i];
        for (int i = n - 1; i >= 0; --i) {
          double s = z[i];
          for (int p = rp[i + 1] - 1; p >= rp[i] && ci[p] > i; --p) s -= v[p] * z[ci[p]];
          z[i] = s * inv_diag_[i];
        }
        return;
      }
    }
  }

 private:
  const SparseSymmetric& A_;
  Preconditioner kind_;
  std::vector<double> inv_diag_;
};

std::string method_name(const SolveOptions& o) {
  if (o.hook) return "pcg-custom";
  switch (o.precond) {
    case Preconditioner::None: return "cg";
    case Preconditioner::Diagonal: return "pcg-diagonal";
    case Preconditioner::SymmetricSweep: return "pcg-ssor";
  }
  return "cg";
}

}  // namespace

SolveResult cg_solve(const SparseSymmetric& A, std::span<const double> b, std::span<const double> x0,
                     const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int n = A.dimension();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cg: right-hand side size mismatch");
  if (!x0.empty() && static_cast<int>(x0.size()) != n) throw std::invalid_argument("cg: initial guess size mismatch");

  SolveResult res;
  res.report.method = method_name(options);
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  if (bnorm == 0.0) {
    res.report.converged = true;
    res.report.wall_time = elapsed();
    return res;
  }
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());

  BuiltinPreconditioner builtin(A, options.hook ? Preconditioner::None : options.precond);
  const auto precondition = [&](std::span<const double> r, std::span<double> z) {
    if (options.hook) options.hook(r, z);
    else builtin.apply(r, z);
  };

  std::vector<double>& x = res.x;
  std::vector<double> r(n), z(n), p(n), Ap(n);
  A.multiply(x, Ap);
  for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  double rel = norm2(r) / bnorm;
  int it = 0;
  bool indefinite = false;
  while (rel > options.tol && it < options.max_iter) {
    A.multiply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      indefinite = true;
      break;
    }
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++it;
    rel = norm2(r) / bnorm;
    if (rel <= options.tol) break;
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  // True residual for the report.
  A.multiply(x, Ap);
  for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  res.report.iterations = it;
  res.report.relative_residual = norm2(r) / bnorm;
  double e = 0.0;
  for (int i = 0; i < n; ++i) e += x[i] * (0.5 * Ap[i] - b[i]);
  res.report.energy = e;
  res.report.converged = !indefinite && rel <= options.tol;
  res.report.wall_time = elapsed();
  if (!res.report.converged && options.throw_on_failure) {
    throw SolverError(indefinite ? "cg: non-positive curvature (matrix not positive semi-definite or system inconsistent)"
                                 : "cg: no convergence after " + std::to_string(it) + " iterations (relative residual " +
                                       std::to_string(res.report.relative_residual) + ")",
                      res.report);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CHOLMOD-backed factorization

struct SpdFactorization::Impl {
  cholmod_common common{};
  cholmod_factor* factor = nullptr;
  int n = 0;

  Impl() { cholmod_start(&common); }
  ~Impl() {
    if (factor) cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }
};

SpdFactorization::SpdFactorization(const SparseSymmetric& A, double relative_shift)
    : impl_(std::make_unique<Impl>()) {
  const int n = A.dimension();
  impl_->n = n;
  cholmod_common* cm = &impl_->common;
  cm->print = 0;
  cm->error_handler = nullptr;

  // Lower triangle in compressed-column form: column j of the lower part is
  // row j of the (symmetric) upper part.
  const auto rp = A.row_ptr();
  const auto ci = A.col_index();
  const auto v = A.values();
  std::size_t nnz = 0;
  for (int j = 0; j < n; ++j)
    for (int p = rp[j]; p < rp[j + 1]; ++p) nnz += ci[p] >= j;
  cholmod_sparse* S = cholmod_allocate_sparse(n, n, nnz, 1, 1, -1, CHOLMOD_REAL, cm);
  if (!S) throw std::runtime_error("cholmod: allocation failed");
  auto* Sp = static_cast<int*>(S->p);
  auto* Si = static_cast<int*>(S->i);
  auto* Sx = static_cast<double*>(S->x);
  std::size_t k = 0;
  for (int j = 0; j < n; ++j) {
    Sp[j] = static_cast<int>(k);
    for (int p = rp[j]; p < rp[j + 1]; ++p) {
      if (ci[p] < j) continue;
      Si[k] = ci[p];
      Sx[k] = v[p] * (ci[p] == j ? 1.0 + relative_shift : 1.0);
      ++k;
    }
  }
  Sp[n] = static_cast<int>(k);

  impl_->factor = cholmod_analyze(S, cm);
  bool ok = impl_->factor && cholmod_factorize(S, impl_->factor, cm) && cm->status == CHOLMOD_OK &&
            impl_->factor->minor == static_cast<std::size_t>(n);
  if (ok && !impl_->factor->is_super && !impl_->factor->is_ll) {
    // simplicial LDL' accepts negative pivots
    const auto* Lp = static_cast<const int*>(impl_->factor->p);
    const auto* Lx = static_cast<const double*>(impl_->factor->x);
    for (int j = 0; j < n && ok; ++j) ok = Lx[Lp[j]] > 0.0;
  }
  cholmod_free_sparse(&S, cm);
  if (!ok) {
    SolveReport report;
    report.method = "cholmod";
    throw SolverError("cholmod: matrix is not positive definite (non-positive pivot)", report);
  }
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

int SpdFactorization::dimension() const { return impl_->n; }

std::vector<double> SpdFactorization::solve(std::span<const double> b) const {
  const int n = impl_->n;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cholmod: right-hand side size mismatch");
  cholmod_common* cm = &impl_->common;
  cholmod_dense* B = cholmod_allocate_dense(n, 1, n, CHOLMOD_REAL, cm);
  std::copy(b.begin(), b.end(), static_cast<double*>(B->x));
  cholmod_dense* X = cholmod_solve(CHOLMOD_A, impl_->factor, B, cm);
  std::vector<double> x(static_cast<double*>(X->x), static_cast<double*>(X->x) + n);
  cholmod_free_dense(&B, cm);
  cholmod_free_dense(&X, cm);
  return x;
}

PreconditionerHook SpdFactorization::as_preconditioner() const {
  return [this](std::span<const double> r, std::span<double> z) {
    const auto x = solve(r);
    std::copy(x.begin(), x.end(), z.begin());
  };
}

SolveResult direct_spd_solve(const SparseSymmetric& A, std::span<const double> b) {
  const auto start = std::chrono::steady_clock::now();
  SpdFactorization factor(A);
  SolveResult res;
  res.x = factor.solve(b);
  const auto Ax = A.multiply(res.x);
  double rr = 0.0;
  for (int i = 0; i < A.dimension(); ++i) rr += (b[i] - Ax[i]) * (b[i] - Ax[i]);
  const double bn = norm2(b);
  res.report.method = "cholmod";
  res.report.relative_residual = bn > 0.0 ? std::sqrt(rr) / bn : std::sqrt(rr);
  res.report.converged = true;
  double e = 0.0;
  for (int i = 0; i < A.dimension(); ++i) e += res.x[i] * (0.5 * Ax[i] - b[i]);
  res.report.energy = e;
  res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace twostep
