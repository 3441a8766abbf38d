#pragma once

// Compressed-row complex operators over a sector basis, plus the matrix
// exponential action used by every propagator in the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hsf/error.hpp"

namespace hsf {

using complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTolerance = 1e-12;

struct Triplet {
  std::size_t row;
  std::size_t col;
  complex value;
};

class SparseOperator {
 public:
  SparseOperator() = default;

  /// Sort by (row, col), merge duplicates, drop exact zeros.
  static SparseOperator assemble(std::size_t dim, std::vector<Triplet> entries) {
    for (const auto& t : entries)
      if (t.row >= dim || t.col >= dim) throw ContractError("operator entry index out of range");
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseOperator op;
    op.dim_ = dim;
    op.row_ptr_.assign(dim + 1, 0);
    op.cols_.reserve(entries.size());
    op.values_.reserve(entries.size());
    std::size_t i = 0;
    for (std::size_t r = 0; r < dim; ++r) {
      while (i < entries.size() && entries[i].row == r) {
        const auto c = entries[i].col;
        complex sum = 0.0;
        while (i < entries.size() && entries[i].row == r && entries[i].col == c) sum += entries[i++].value;
        if (sum != complex(0.0)) {
          op.cols_.push_back(c);
          op.values_.push_back(sum);
        }
      }
      op.row_ptr_[r + 1] = op.cols_.size();
    }
    return op;
  }

  static SparseOperator identity(std::size_t dim) {
    std::vector<Triplet> t;
    t.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) t.push_back({i, i, 1.0});
    auto op = assemble(dim, std::move(t));
    op.hermitian_ = true;
    return op;
  }

  static SparseOperator diagonal(std::span<const double> diag) {
    std::vector<Triplet> t;
    t.reserve(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({i, i, diag[i]});
    auto op = assemble(diag.size(), std::move(t));
    op.hermitian_ = true;
    return op;
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }
  [[nodiscard]] bool hermitian() const noexcept { return hermitian_; }

  [[nodiscard]] std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  [[nodiscard]] std::span<const std::size_t> cols() const noexcept { return cols_; }
  [[nodiscard]] std::span<const complex> values() const noexcept { return values_; }

  /// Element lookup by binary search within the row.
  [[nodiscard]] complex at(std::size_t row, std::size_t col) const {
    const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(row));
    const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(row + 1));
    const auto it = std::lower_bound(begin, end, col);
    if (it == end || *it != col) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
  }

  /// max |A_ij - conj(A_ji)| over stored entries.
  [[nodiscard]] double hermiticity_residual() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        worst = std::max(worst, std::abs(values_[k] - std::conj(at(cols_[k], r))));
    return worst;
  }

  /// Verify hermiticity within kHermitianTolerance and record it.
  SparseOperator& mark_hermitian() {
    const double res = hermiticity_residual();
    if (res > kHermitianTolerance)
      throw ContractError("operator is not hermitian (residual " + std::to_string(res) + ")");
    hermitian_ = true;
    return *this;
  }

  void set_hermitian_unchecked(bool flag) noexcept { hermitian_ = flag; }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  [[nodiscard]] std::vector<complex> diagonal_values() const {
    std::vector<complex> d(dim_);
    for (std::size_t r = 0; r < dim_; ++r) d[r] = at(r, r);
    return d;
  }

  /// y = A x with a fixed summation order inside each row.
  void apply(const complex* x, complex* y) const noexcept {
    for (std::size_t r = 0; r < dim_; ++r) {
      complex acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[cols_[k]];
      y[r] = acc;
    }
  }

  [[nodiscard]] DenseMatrix to_dense() const {
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols_[k])) = values_[k];
    return m;
  }

  [[nodiscard]] std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, cols_[k], values_[k]});
    return out;
  }

  /// One "row col re im" line per stored entry, sorted by (row, col).
  void write_triplets(std::ostream& os) const {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        os << r << ' ' << cols_[k] << ' ' << values_[k].real() << ' ' << values_[k].imag() << '\n';
    os.flags(flags);
    os.precision(prec);
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<complex> values_;
  bool hermitian_ = false;
};

inline StateVector matvec(const SparseOperator& A, const StateVector& v) {
  if (static_cast<std::size_t>(v.size()) != A.dim()) throw ContractError("matvec dimension mismatch");
  StateVector out(v.size());
  A.apply(v.data(), out.data());
  return out;
}

/// alpha A + beta B.
inline SparseOperator add_scaled(const SparseOperator& A, const SparseOperator& B, complex alpha, complex beta) {
  if (A.dim() != B.dim()) throw ContractError("add_scaled dimension mismatch");
  std::vector<Triplet> t;
  t.reserve(A.nonzeros() + B.nonzeros());
  for (auto e : A.triplets()) t.push_back({e.row, e.col, alpha * e.value});
  for (auto e : B.triplets()) t.push_back({e.row, e.col, beta * e.value});
  auto out = SparseOperator::assemble(A.dim(), std::move(t));
  if (A.hermitian() && B.hermitian() && alpha.imag() == 0.0 && beta.imag() == 0.0)
    out.set_hermitian_unchecked(true);
  return out;
}

/// Dense e^{-iHt} for a hermitian matrix, via eigendecomposition.
class DenseSpectralPropagator {
 public:
  explicit DenseSpectralPropagator(const DenseMatrix& H) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(H);
    if (solver.info() != Eigen::Success) throw NumericError("dense hermitian eigensolver failed");
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }

  [[nodiscard]] StateVector apply(const StateVector& v, double t) const {
    StateVector c = vectors_.adjoint() * v;
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(complex(0.0, -energies_[k] * t));
    return vectors_ * c;
  }

  [[nodiscard]] DenseMatrix matrix(double t) const {
    Eigen::VectorXcd phase(energies_.size());
    for (Eigen::Index k = 0; k < phase.size(); ++k) phase[k] = std::exp(complex(0.0, -energies_[k] * t));
    return vectors_ * phase.asDiagonal() * vectors_.adjoint();
  }

  [[nodiscard]] const Eigen::VectorXd& energies() const noexcept { return energies_; }
  [[nodiscard]] const DenseMatrix& vectors() const noexcept { return vectors_; }

 private:
  Eigen::VectorXd energies_;
  DenseMatrix vectors_;
};

struct ExpmOptions {
  double tol = 1e-9;              ///< bound on ||w - e^{-iHt} v|| per call
  std::size_t krylov_dim = 30;
  std::size_t dense_max_dim = 512;  ///< use dense eigendecomposition at or below this size
};

struct KrylovStats {
  std::size_t matvecs = 0;
  std::size_t substeps = 0;
};

namespace detail {

/// Restarted Lanczos approximation of e^{-iHt} v for a hermitian H given
/// as y = H x. Each restart builds one Krylov basis and then shrinks the
/// substep until the a-posteriori error estimate fits the budget.
template <class ApplyFn>
StateVector lanczos_expmv(ApplyFn&& apply_h, const StateVector& v, double t, double tol, std::size_t m_max,
                          KrylovStats* stats = nullptr) {
  const Eigen::Index n = v.size();
  StateVector w = v;
  const double beta0 = v.norm();
  if (beta0 == 0.0 || t == 0.0 || n == 0) return w;
  const std::size_t m_cap = std::min<std::size_t>(m_max, static_cast<std::size_t>(n));
  const double direction = t > 0 ? 1.0 : -1.0;
  double remaining = std::abs(t);
  double tau = remaining;
  double budget = tol;
  DenseMatrix V(n, static_cast<Eigen::Index>(m_cap + 1));
  StateVector work(n);
  std::size_t restarts = 0;

  while (remaining > 0.0) {
    const double beta = w.norm();
    V.col(0) = w / beta;
    std::vector<double> alpha;
    std::vector<double> offdiag;
    bool breakdown = false;
    std::size_t m = 0;
    for (std::size_t j = 0; j < m_cap; ++j) {
      apply_h(V.col(static_cast<Eigen::Index>(j)).data(), work.data());
      if (stats) ++stats->matvecs;
      // Full reorthogonalisation, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        const StateVector h = V.leftCols(static_cast<Eigen::Index>(j + 1)).adjoint() * work;
        work.noalias() -= V.leftCols(static_cast<Eigen::Index>(j + 1)) * h;
        if (pass == 0) alpha.push_back(h[static_cast<Eigen::Index>(j)].real());
        else alpha.back() += h[static_cast<Eigen::Index>(j)].real();
      }
      const double b = work.norm();
      m = j + 1;
      if (b <= 1e-13 * std::max(1.0, std::abs(alpha.back()))) {
        breakdown = true;
        break;
      }
      offdiag.push_back(b);
      V.col(static_cast<Eigen::Index>(j + 1)) = work / b;
    }

    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(m));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(m > 0 ? m - 1 : 0));
    for (std::size_t k = 0; k + 1 < m; ++k) sub[static_cast<Eigen::Index>(k)] = offdiag[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::MatrixXd& Q = tri.eigenvectors();
    const Eigen::VectorXd& theta = tri.eigenvalues();
    const double beta_m = breakdown ? 0.0 : offdiag.back();

    auto small_exp = [&](double step) {
      Eigen::VectorXcd y(static_cast<Eigen::Index>(m));
      for (Eigen::Index k = 0; k < y.size(); ++k)
        y[k] = Q(0, k) * std::exp(complex(0.0, -direction * theta[k] * step));
      return Eigen::VectorXcd(Q * y);
    };

    double step = std::min(tau, remaining);
    Eigen::VectorXcd y;
    for (;;) {
      y = small_exp(step);
      const double err = beta * beta_m * std::abs(y[static_cast<Eigen::Index>(m - 1)]);
      const double allowed = budget * step / remaining;
      if (breakdown || err <= allowed) {
        budget -= err;
        if (budget < 0.0) budget = 0.0;
        break;
      }
      step *= 0.5;
      if (step < 1e-14 * std::abs(t))
        throw NumericError("Krylov propagator cannot reach tolerance " + std::to_string(tol));
    }
    w = beta * (V.leftCols(static_cast<Eigen::Index>(m)) * y);
    remaining -= step;
    if (remaining < 1e-15 * std::abs(t)) remaining = 0.0;
    // Grow the substep again after a successful restart.
    tau = breakdown ? remaining : step * 1.25;
    ++restarts;
  }
  if (stats) stats->substeps += restarts;
  return w;
}

}  // namespace detail

/// w = e^{-iHt} v for hermitian H.
inline StateVector expm_multiply(const SparseOperator& H, const StateVector& v, double t,
                                 const ExpmOptions& opts = {}, KrylovStats* stats = nullptr) {
  if (!H.hermitian()) throw ContractError("expm_multiply requires a hermitian operator");
  if (static_cast<std::size_t>(v.size()) != H.dim()) throw ContractError("expm_multiply dimension mismatch");
  if (t == 0.0) return v;
  if (H.dim() <= opts.dense_max_dim) return DenseSpectralPropagator(H.to_dense()).apply(v, t);
  return detail::lanczos_expmv([&H](const complex* x, complex* y) { H.apply(x, y); }, v, t, opts.tol,
                               opts.krylov_dim, stats);
}

}  // namespace hsf
