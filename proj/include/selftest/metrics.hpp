#pragma once

// State-dependent norms, the support-preserving and projective measures,
// and hat operators.
//
// For a pure state with reshaped amplitude matrix Psi, sigma_A = Psi Psi^*
// and sigma_B = Psi^T conj(Psi). Writing Phi for Psi (Alice) or Psi^T (Bob),
//   ||[Pi, E]||^2_sigma = tr(E^2 sigma) - tr(E Pi E sigma) = ||(1 - Pi) E Phi||_F^2
//   <1 - E, E>_sigma    = tr(E sigma) - tr(E^2 sigma)
// so nothing larger than a local operator is ever formed.

#include "selftest/schmidt.hpp"

namespace selftest {

inline double state_dependent_norm(const Operator& x, const Operator& sigma) {
  require_square(x, "state_dependent_norm operator");
  if (x.rows() != sigma.rows() || sigma.rows() != sigma.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "state_dependent_norm: operator and state differ in size");
  }
  const double v = (x.adjoint() * x * sigma).trace().real();
  return std::sqrt(std::max(v, 0.0));
}

struct ElementMetric {
  double commutator = 0.0;    // ||[Pi, E]||_sigma
  double projectivity = 0.0;  // <1 - E, E>_sigma, clipped at 0
};

struct StrategyMetrics {
  double support_eps = 0.0;
  double projective_eps = 0.0;
  std::vector<std::vector<ElementMetric>> alice;  // [question][answer]
  std::vector<std::vector<ElementMetric>> bob;
};

namespace detail {

inline constexpr double kNegativeDust = 1e-10;
// tr(E sigma) - tr(E^2 sigma) carries absolute rounding of a few ulps of
// tr(E sigma) <= 1; below this it is indistinguishable from zero.
inline constexpr double kProjectivityFloor = 1e-14;

inline double clip_dust(double v, const char* what) {
  if (v < -kNegativeDust) {
    throw Error(ErrorCode::InvalidPovm, std::string(what) + " is negative (" + std::to_string(v) +
                                            "); element is not a valid effect");
  }
  return std::max(v, 0.0);
}

// phi: local amplitude matrix (d x d_other); support: d x k isometry.
inline ElementMetric element_metric(const Operator& e, const Operator& phi, const Operator& support) {
  const Operator ephi = e * phi;
  const double second = ephi.squaredNorm();                 // tr(E^2 sigma)
  const double first = phi.cwiseProduct((e * phi).conjugate()).sum().real();  // tr(E sigma)
  // ||(1 - Pi) E Phi|| directly; the difference of squares loses half the digits.
  const Operator leak = ephi - support * (support.adjoint() * ephi);
  ElementMetric m;
  m.commutator = leak.norm();
  const double p = clip_dust(first - second, "<1-E,E>_sigma");
  m.projectivity = p <= kProjectivityFloor ? 0.0 : p;
  return m;
}

}  // namespace detail

inline StrategyMetrics strategy_metrics(const Strategy& s, double rank_tol = kDefaultRankTol) {
  const Strategy c = canonicalize_state(s);
  detail::check_structure(c);
  const Vector& psi = c.pure_state();
  const SchmidtData sd = schmidt_decompose(psi, c.dim_a, c.dim_b, rank_tol);
  const Operator phi_a = to_matrix(psi, c.dim_a, c.dim_b);
  const Operator phi_b = phi_a.transpose();

  StrategyMetrics m;
  auto scan = [&](const MeasurementSet& set, const Operator& phi, const Operator& support,
                  std::vector<std::vector<ElementMetric>>& out) {
    for (const Povm& f : set) {
      std::vector<ElementMetric> row;
      for (const Operator& e : f) {
        const ElementMetric em = detail::element_metric(e, phi, support);
        m.support_eps = std::max(m.support_eps, em.commutator);
        m.projective_eps = std::max(m.projective_eps, std::sqrt(em.projectivity));
        row.push_back(em);
      }
      out.push_back(std::move(row));
    }
  };
  scan(c.alice, phi_a, sd.left, m.alice);
  scan(c.bob, phi_b, sd.right, m.bob);
  return m;
}

inline double support_preserving_eps(const Strategy& s) { return strategy_metrics(s).support_eps; }

inline double projective_eps(const Strategy& s) { return strategy_metrics(s).projective_eps; }

struct HatOperators {
  std::vector<std::vector<Operator>> alice;  // A-hat, acting on H_B
  std::vector<std::vector<Operator>> bob;    // B-hat, acting on H_A
};

/// A-hat = sum_{i,k} (lambda_k / lambda_i) <e_i|A|e_k> |f_k><f_i|, so that
/// (A (x) 1)psi and (1 (x) A-hat)psi agree on the support. Zero off-support.
inline HatOperators hat_operators(const Strategy& s, double rank_tol = kDefaultRankTol) {
  const Strategy c = canonicalize_state(s);
  detail::check_structure(c);
  const SchmidtData sd = schmidt_decompose(c.pure_state(), c.dim_a, c.dim_b, rank_tol);
  const Eigen::Index k = sd.rank;
  Eigen::MatrixXd ratio(k, k);  // ratio(r, c) = lambda_r / lambda_c
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index q = 0; q < k; ++q) ratio(r, q) = sd.coefficients(r) / sd.coefficients(q);

  auto hat = [&](const Operator& e, const Operator& own, const Operator& other) {
    const Operator block = own.adjoint() * e * own;  // <own_i|E|own_k>
    const Operator mapped = block.transpose().cwiseProduct(ratio.cast<cplx>());
    return Operator(other * mapped * other.adjoint());
  };
  HatOperators h;
  for (const Povm& f : c.alice) {
    std::vector<Operator> row;
    for (const Operator& e : f) row.push_back(hat(e, sd.left, sd.right));
    h.alice.push_back(std::move(row));
  }
  for (const Povm& f : c.bob) {
    std::vector<Operator> row;
    for (const Operator& e : f) row.push_back(hat(e, sd.right, sd.left));
    h.bob.push_back(std::move(row));
  }
  return h;
}

/// ||(A (x) 1)psi - (1 (x) A-hat)psi|| for an Alice operator and its hat.
inline double alice_hat_residual(const Strategy& s, const Operator& a, const Operator& a_hat) {
  const Operator psi = to_matrix(s.pure_state(), s.dim_a, s.dim_b);
  return (a * psi - psi * a_hat.transpose()).norm();
}

/// ||(1 (x) B)psi - (B-hat (x) 1)psi|| for a Bob operator and its hat.
inline double bob_hat_residual(const Strategy& s, const Operator& b, const Operator& b_hat) {
  const Operator psi = to_matrix(s.pure_state(), s.dim_a, s.dim_b);
  return (psi * b.transpose() - b_hat * psi).norm();
}

}  // namespace selftest
