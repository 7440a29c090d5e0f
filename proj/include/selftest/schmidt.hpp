#pragma once

// Schmidt decomposition, local supports, restriction and purification.

#include "selftest/strategy.hpp"

namespace selftest {

struct SchmidtData {
  RealVector coefficients;  // positive, descending
  Operator left;            // dA x rank, columns e_i
  Operator right;           // dB x rank, columns f_i
  Eigen::Index rank = 0;
  Eigen::Index dim_a = 0;
  Eigen::Index dim_b = 0;

  /// sum_i lambda_i e_i (x) f_i
  Vector reconstruct() const {
    return to_vector(left * coefficients.cast<cplx>().asDiagonal() * right.transpose());
  }
};

inline constexpr double kDefaultRankTol = 1e-10;

namespace detail {

// psi = sum_i s_i u_i (x) conj(v_i) for Psi = U S V^*.
inline SchmidtData schmidt_from_matrix(const Operator& psi, double rank_tol) {
  Eigen::BDCSVD<Operator> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  SchmidtData out;
  out.dim_a = psi.rows();
  out.dim_b = psi.cols();
  const double top = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > rank_tol * top && s(k) > 0.0) ++k;
  out.rank = k;
  out.coefficients = s.head(k);
  out.left = svd.matrixU().leftCols(k);
  out.right = svd.matrixV().leftCols(k).conjugate();
  for (Eigen::Index i = 0; i < k; ++i) {
    // Normalize the left vector's phase and push the conjugate phase right.
    const Vector before = out.left.col(i);
    fix_phase(out.left.col(i));
    Eigen::Index pivot = 0;
    before.cwiseAbs().maxCoeff(&pivot);
    if (std::abs(before(pivot)) > 0) {
      const cplx rot = out.left(pivot, i) / before(pivot);  // unit modulus
      out.right.col(i) *= std::conj(rot);
    }
  }
  return out;
}

}  // namespace detail

inline SchmidtData schmidt_decompose(const Vector& psi, Eigen::Index dim_a, Eigen::Index dim_b,
                                     double rank_tol = kDefaultRankTol) {
  if (psi.size() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "schmidt_decompose: state size is not dA*dB");
  }
  if (std::abs(psi.norm() - 1.0) > tol::kExact) {
    throw Error(ErrorCode::InvalidState, "schmidt_decompose: state is not normalized");
  }
  return detail::schmidt_from_matrix(to_matrix(psi, dim_a, dim_b), rank_tol);
}

/// Schmidt rank of an arbitrary (not necessarily normalized) vector.
inline Eigen::Index schmidt_rank(const Vector& psi, Eigen::Index dim_a, Eigen::Index dim_b,
                                 double rank_tol = kDefaultRankTol) {
  if (psi.size() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "schmidt_rank: state size is not dA*dB");
  }
  return detail::schmidt_from_matrix(to_matrix(psi, dim_a, dim_b), rank_tol).rank;
}

struct LocalSupports {
  Operator pi_a;
  Operator pi_b;
};

inline LocalSupports local_supports(const SchmidtData& sd) {
  return {sd.left * sd.left.adjoint(), sd.right * sd.right.adjoint()};
}

inline bool is_full_rank(const Strategy& s, double rank_tol = kDefaultRankTol) {
  const SchmidtData sd = schmidt_decompose(s.pure_state(), s.dim_a, s.dim_b, rank_tol);
  return sd.rank == s.dim_a && sd.rank == s.dim_b;
}

struct Restriction {
  Strategy strategy;
  Operator u_a;  // dA x k, Pi_A = U_A U_A^*
  Operator u_b;
};

/// Compression to the local supports. The restricted state is
/// sum_i lambda_i |i>|i> in the Schmidt bases.
inline Restriction restrict(const Strategy& s, double rank_tol = kDefaultRankTol) {
  const Strategy c = canonicalize_state(s);
  detail::check_structure(c);
  const SchmidtData sd = schmidt_decompose(c.pure_state(), c.dim_a, c.dim_b, rank_tol);
  Restriction r;
  r.u_a = sd.left;
  r.u_b = sd.right;
  Strategy& out = r.strategy;
  out.dim_a = sd.rank;
  out.dim_b = sd.rank;
  // (U_A^* (x) U_B^*) psi, computed on the reshaped state.
  const Operator psi = to_matrix(c.pure_state(), c.dim_a, c.dim_b);
  out.state = to_vector(r.u_a.adjoint() * psi * r.u_b.conjugate());
  for (const Povm& f : c.alice) {
    Povm g;
    for (const Operator& e : f) g.push_back(r.u_a.adjoint() * e * r.u_a);
    out.alice.push_back(std::move(g));
  }
  for (const Povm& f : c.bob) {
    Povm g;
    for (const Operator& e : f) g.push_back(r.u_b.adjoint() * e * r.u_b);
    out.bob.push_back(std::move(g));
  }
  return r;
}

struct Purification {
  Vector state;  // on (A (x) B) (x) P
  Eigen::Index dim_p = 0;
};

/// psi = sum_i sqrt(p_i) |v_i> |i>_P over the spectral decomposition of rho.
inline Purification purify(const Operator& rho, double cutoff = 1e-12) {
  require_square(rho, "purify input");
  if (!is_hermitian(rho) || !is_psd(rho) || std::abs(rho.trace().real() - 1.0) > tol::kSemantic) {
    throw Error(ErrorCode::InvalidState, "purify: input is not a density operator");
  }
  const SpectralData spec = hermitian_eig(rho);
  Eigen::Index rank = 0;
  while (rank < spec.eigenvalues.size() && spec.eigenvalues(rank) > cutoff) ++rank;
  Purification p;
  p.dim_p = rank;
  const Eigen::Index n = rho.rows();
  p.state = Vector::Zero(n * rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    const Vector v = std::sqrt(spec.eigenvalues(i)) * spec.eigenvectors.col(i);
    for (Eigen::Index x = 0; x < n; ++x) p.state(x * rank + i) = v(x);
  }
  p.state /= p.state.norm();
  return p;
}

}  // namespace selftest
