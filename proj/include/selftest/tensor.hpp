#pragma once

#include <limits>

// Dense complex linear algebra shared by every other module: tensor
// products, partial traces, Hermitian spectral data and the index
// bookkeeping needed to act on one factor of a multipartite vector.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selftest/error.hpp"

namespace selftest {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RowMajorOperator = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace tol {
inline constexpr double kSemantic = 1e-9;  // hermiticity, PSD, POVM completeness
inline constexpr double kExact = 1e-12;    // algebraic identities
inline constexpr double kCluster = 1e-9;   // eigenvalue multiplicity clustering
}  // namespace tol

enum class Subsystem { A, B };

struct SpectralData {
  RealVector eigenvalues;  // descending
  Operator eigenvectors;   // columns aligned with eigenvalues

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

inline double frobenius(const Operator& m) { return m.norm(); }

inline Operator identity(Eigen::Index dim) { return Operator::Identity(dim, dim); }

inline void require_square(const Operator& op, const char* what) {
  if (op.rows() != op.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be square, got " + std::to_string(op.rows()) + "x" +
                    std::to_string(op.cols()));
  }
}

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

inline Operator outer(const Vector& v) { return v * v.adjoint(); }

inline double hermiticity_defect(const Operator& h) {
  require_square(h, "operator");
  return (h - h.adjoint()).norm();
}

inline bool is_hermitian(const Operator& h, double tolerance = tol::kSemantic) {
  return h.rows() == h.cols() && hermiticity_defect(h) <= tolerance * std::max(1.0, h.norm());
}

/// Traces out one factor of a bipartite operator on C^dA (x) C^dB.
/// `keep` names the factor that survives.
inline Operator partial_trace(const Operator& op, Eigen::Index dim_a, Eigen::Index dim_b,
                              Subsystem keep) {
  require_square(op, "partial_trace input");
  if (dim_a <= 0 || dim_b <= 0 || op.rows() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch,
                "partial_trace: operator dim " + std::to_string(op.rows()) + " != " +
                    std::to_string(dim_a) + "*" + std::to_string(dim_b));
  }
  if (keep == Subsystem::A) {
    Operator out = Operator::Zero(dim_a, dim_a);
    for (Eigen::Index i = 0; i < dim_a; ++i) {
      for (Eigen::Index k = 0; k < dim_a; ++k) {
        cplx acc = 0;
        for (Eigen::Index j = 0; j < dim_b; ++j) acc += op(i * dim_b + j, k * dim_b + j);
        out(i, k) = acc;
      }
    }
    return out;
  }
  Operator out = Operator::Zero(dim_b, dim_b);
  for (Eigen::Index i = 0; i < dim_a; ++i) {
    out += op.block(i * dim_b, i * dim_b, dim_b, dim_b);
  }
  return out;
}

// Rotates v so that its first entry of (numerically) largest modulus is
// real and nonnegative.
inline void fix_phase(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  const double top = v.cwiseAbs().maxCoeff();
  if (top == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= top - 1e-12 * std::max(1.0, top)) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      return;
    }
  }
}

inline SpectralData hermitian_eig(const Operator& h) {
  require_square(h, "hermitian_eig input");
  if (!is_hermitian(h, tol::kSemantic)) {
    throw Error(ErrorCode::NotHermitian,
                "hermitian_eig: ||h - h*||_F = " + std::to_string(hermiticity_defect(h)));
  }
  const Operator sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym);
  const Eigen::Index n = sym.rows();
  SpectralData out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    fix_phase(out.eigenvectors.col(i));
  }
  return out;
}

inline double min_eigenvalue(const Operator& h) {
  const SpectralData s = hermitian_eig(h);
  return s.size() == 0 ? 0.0 : s.eigenvalues(s.eigenvalues.size() - 1);
}

inline bool is_psd(const Operator& h, double tolerance = tol::kSemantic) {
  return min_eigenvalue(h) >= -tolerance;
}

/// Applies f to the spectrum of a Hermitian operator.
template <typename F>
Operator spectral_map(const Operator& h, F&& f) {
  const SpectralData s = hermitian_eig(h);
  RealVector mapped(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped(i) = f(s.eigenvalues(i));
  return s.eigenvectors * mapped.asDiagonal() * s.eigenvectors.adjoint();
}

// Negative eigenvalues are clipped to zero before the root is taken.
// Eigenvalues at rounding level (64 ulp of the spectral radius) count as zero,
// so exact projectors keep exact square roots.
inline Operator psd_sqrt(const Operator& h) {
  const SpectralData s = hermitian_eig(h);
  if (s.size() == 0) return h;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(std::abs(s.eigenvalues(0)), std::abs(s.eigenvalues(s.eigenvalues.size() - 1)));
  RealVector mapped(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    const double x = s.eigenvalues(i);
    mapped(i) = x > floor ? std::sqrt(x) : 0.0;
  }
  return s.eigenvectors * mapped.asDiagonal() * s.eigenvectors.adjoint();
}

/// Pseudo-inverse square root; eigenvalues below `cutoff` map to zero.
inline Operator psd_inv_sqrt(const Operator& h, double cutoff = 1e-14) {
  return spectral_map(h, [cutoff](double x) { return x > cutoff ? 1.0 / std::sqrt(x) : 0.0; });
}

inline double isometry_defect(const Operator& v) {
  return (v.adjoint() * v - identity(v.cols())).norm();
}

inline bool is_isometry(const Operator& v, double tolerance = tol::kExact) {
  return v.rows() >= v.cols() && isometry_defect(v) <= tolerance * std::max<double>(1.0, static_cast<double>(v.cols()));
}

// ---------------------------------------------------------------------------
// Bipartite reshaping: psi[i*dB + j] <-> Psi(i, j).

inline Operator to_matrix(const Vector& psi, Eigen::Index dim_a, Eigen::Index dim_b) {
  if (psi.size() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "vector of size " + std::to_string(psi.size()) +
                                                  " is not " + std::to_string(dim_a) + "x" +
                                                  std::to_string(dim_b));
  }
  Operator m(dim_a, dim_b);
  for (Eigen::Index i = 0; i < dim_a; ++i) {
    for (Eigen::Index j = 0; j < dim_b; ++j) m(i, j) = psi(i * dim_b + j);
  }
  return m;
}

inline Vector to_vector(const Operator& m) {
  Vector v(m.rows() * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

inline Eigen::Index product(std::span<const Eigen::Index> dims) {
  return std::accumulate(dims.begin(), dims.end(), Eigen::Index{1}, std::multiplies<>());
}

/// Applies `op` (out x dims[k]) to factor k of a vector on the tensor
/// product of `dims`. Non-square `op` changes that factor's dimension.
inline Vector apply_on_factor(const Vector& v, std::span<const Eigen::Index> dims, std::size_t k,
                              const Operator& op) {
  if (k >= dims.size() || op.cols() != dims[k] || v.size() != product(dims)) {
    throw Error(ErrorCode::DimensionMismatch, "apply_on_factor: operator does not fit factor " +
                                                  std::to_string(k));
  }
  const Eigen::Index left = product(dims.first(k));
  const Eigen::Index right = product(dims.subspan(k + 1));
  const Eigen::Index in_dim = dims[k];
  const Eigen::Index out_dim = op.rows();
  Vector out(left * out_dim * right);
  for (Eigen::Index l = 0; l < left; ++l) {
    Eigen::Map<const RowMajorOperator> slice(v.data() + l * in_dim * right, in_dim, right);
    Eigen::Map<RowMajorOperator> target(out.data() + l * out_dim * right, out_dim, right);
    target.noalias() = op * slice;
  }
  return out;
}

/// Reorders tensor factors: factor j of the result is factor perm[j] of v.
inline Vector permute_factors(const Vector& v, std::span<const Eigen::Index> dims,
                              std::span<const std::size_t> perm) {
  const std::size_t n = dims.size();
  if (perm.size() != n || v.size() != product(dims)) {
    throw Error(ErrorCode::DimensionMismatch, "permute_factors: bad permutation");
  }
  std::vector<Eigen::Index> old_stride(n, 1);
  for (std::size_t i = n; i-- > 1;) old_stride[i - 1] = old_stride[i] * dims[i];
  std::vector<Eigen::Index> new_dims(n);
  for (std::size_t j = 0; j < n; ++j) new_dims[j] = dims[perm[j]];

  Vector out(v.size());
  std::vector<Eigen::Index> idx(n, 0);
  for (Eigen::Index flat = 0; flat < v.size(); ++flat) {
    Eigen::Index src = 0;
    for (std::size_t j = 0; j < n; ++j) src += idx[j] * old_stride[perm[j]];
    out(flat) = v(src);
    for (std::size_t j = n; j-- > 0;) {
      if (++idx[j] < new_dims[j]) break;
      idx[j] = 0;
    }
  }
  return out;
}

/// Permutation matrix implementing permute_factors as a linear map.
inline Operator permutation_operator(std::span<const Eigen::Index> dims,
                                     std::span<const std::size_t> perm) {
  const Eigen::Index n = product(dims);
  Operator p = Operator::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    p.col(i) = permute_factors(e, dims, perm);
  }
  return p;
}

/// Completes the orthonormal columns of `v` to a unitary whose first
/// columns are exactly those of `v`.
inline Operator complete_to_unitary(const Operator& v) {
  const Eigen::Index n = v.rows();
  const Eigen::Index k = v.cols();
  if (k > n) throw Error(ErrorCode::DimensionMismatch, "complete_to_unitary: too many columns");
  Operator out(n, n);
  out.leftCols(k) = v;
  if (k == n) return out;
  const Operator proj = identity(n) - v * v.adjoint();
  const SpectralData s = hermitian_eig(proj);
  out.rightCols(n - k) = s.eigenvectors.leftCols(n - k);
  return out;
}

}  // namespace selftest
