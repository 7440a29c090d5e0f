#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace selftest;

namespace {

// (|00> + |22>)/sqrt2 with Alice measuring {X02-like, rest} where the first
// element mixes the support with |1>.
Strategy leaky_strategy() {
  Strategy s;
  s.dim_a = 3;
  s.dim_b = 3;
  Vector v = Vector::Zero(9);
  v(0) = v(8) = 1.0 / std::sqrt(2.0);
  s.state = v;
  Vector w(3);
  w << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;  // overlaps the support and |1>
  s.alice = {{outer(w), Operator(identity(3) - outer(w))}};
  Povm z;
  for (Eigen::Index k = 0; k < 3; ++k) z.push_back(outer(ops::basis(3, k)));
  s.bob = {z};
  return s;
}

}  // namespace

TEST(Metrics, StateDependentNorm) {
  std::mt19937_64 gen(31);
  const Operator sigma = random::density(3, 3, gen);
  EXPECT_NEAR(state_dependent_norm(identity(3), sigma), 1.0, 1e-12);
  EXPECT_NEAR(state_dependent_norm(ops::pauli_z(), identity(2) / 2.0), 1.0, 1e-15);
  const Operator x = random::gaussian(3, 3, gen);
  EXPECT_NEAR(state_dependent_norm(x, sigma), std::sqrt((x.adjoint() * x * sigma).trace().real()), 1e-12);
  EXPECT_THROW(state_dependent_norm(identity(2), sigma), Error);
}

TEST(Metrics, FullRankStrategiesAreSupportPreserving) {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Strategy s = random::strategy({3, 3, 2, 2, 3}, gen);
    EXPECT_LT(support_preserving_eps(s), 1e-12);
  }
  EXPECT_EQ(support_preserving_eps(lab::trine_strategy()), 0.0);
}

TEST(Metrics, AncillaBlockStructureIsSupportPreserving) {
  const Strategy s = attach_product_ancilla(lab::canonical_chsh(), ops::basis(2, 0), ops::basis(2, 0));
  EXPECT_LT(support_preserving_eps(s), 1e-12);
}

TEST(Metrics, LeakyElementHasPositiveCommutator) {
  const Strategy s = leaky_strategy();
  const StrategyMetrics m = strategy_metrics(s);
  EXPECT_GT(m.support_eps, 0.1);
  const oracle::Local o = oracle::element(s.pure_state(), 3, 3, s.alice[0][0], 0);
  EXPECT_NEAR(m.alice[0][0].commutator, std::sqrt(o.commutator_sq), 1e-12);
  // closed form: (1 - Pi)E psi = |1>|0> / (2 sqrt2)
  EXPECT_NEAR(m.alice[0][0].commutator * m.alice[0][0].commutator, 0.125, 1e-12);
}

TEST(Metrics, ProjectiveStrategiesAreZeroProjective) {
  EXPECT_LT(projective_eps(lab::canonical_chsh()), 1e-7);
}

TEST(Metrics, TrineElementProjectivity) {
  const StrategyMetrics m = strategy_metrics(lab::trine_strategy());
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(m.bob[2][b].projectivity, 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(m.projective_eps, 1.0 / 3.0, 1e-12);
}

TEST(Metrics, NonProjectiveOffSupportIsZeroProjective) {
  // Alice's second level carries a non-projective split, but the state never sees it.
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 1;
  s.state = Vector(ops::basis(2, 0));
  Operator e0 = Operator::Zero(2, 2);
  e0(0, 0) = 1.0;
  e0(1, 1) = 0.5;
  s.alice = {{e0, Operator(identity(2) - e0)}};
  s.bob = {{identity(1)}};
  EXPECT_LT(projective_eps(s), 1e-12);
}

TEST(Metrics, MixedInputRejected) {
  Strategy s = lab::canonical_chsh();
  s.state = Operator(identity(4) / 4.0);
  try {
    strategy_metrics(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedStateUnsupported);
  }
}

TEST(Metrics, InvalidEffectRaises) {
  Strategy s = lab::canonical_chsh();
  s.alice[0] = {Operator(2.0 * identity(2)), Operator(-identity(2))};
  try {
    strategy_metrics(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPovm);
  }
}

TEST(Metrics, PerElementValuesMatchFullOperatorOracle) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 60; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const StrategyMetrics m = strategy_metrics(s);
    double support = 0.0, proj = 0.0;
    for (std::size_t q = 0; q < s.alice.size(); ++q)
      for (std::size_t a = 0; a < s.alice[q].size(); ++a) {
        const oracle::Local o = oracle::element(s.pure_state(), s.dim_a, s.dim_b, s.alice[q][a], 0);
        EXPECT_NEAR(m.alice[q][a].commutator * m.alice[q][a].commutator, o.commutator_sq, 1e-10);
        EXPECT_NEAR(m.alice[q][a].projectivity, o.projectivity, 1e-12);
        support = std::max(support, std::sqrt(std::max(0.0, o.commutator_sq)));
        proj = std::max(proj, std::sqrt(std::max(0.0, o.projectivity)));
      }
    for (std::size_t q = 0; q < s.bob.size(); ++q)
      for (std::size_t b = 0; b < s.bob[q].size(); ++b) {
        const oracle::Local o = oracle::element(s.pure_state(), s.dim_a, s.dim_b, s.bob[q][b], 1);
        EXPECT_NEAR(m.bob[q][b].commutator * m.bob[q][b].commutator, o.commutator_sq, 1e-10);
        EXPECT_NEAR(m.bob[q][b].projectivity, o.projectivity, 1e-12);
        support = std::max(support, std::sqrt(std::max(0.0, o.commutator_sq)));
        proj = std::max(proj, std::sqrt(std::max(0.0, o.projectivity)));
      }
    EXPECT_NEAR(m.support_eps, support, 1e-6);
    EXPECT_NEAR(m.projective_eps, proj, 1e-6);
  }
}

TEST(Metrics, CommutatorIdentityWithSupportProjector) {
  // ||[Pi, A]||^2_sigma = <psi|(A^2 - A Pi A) (x) 1|psi>
  std::mt19937_64 gen(34);
  for (int trial = 0; trial < 30; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const Operator rho = outer(s.pure_state());
    const Operator pi = oracle::range_projector(oracle::trace_out_b(rho, s.dim_a, s.dim_b));
    const Operator sigma = oracle::trace_out_b(rho, s.dim_a, s.dim_b);
    const StrategyMetrics m = strategy_metrics(s);
    for (std::size_t q = 0; q < s.alice.size(); ++q)
      for (std::size_t a = 0; a < s.alice[q].size(); ++a) {
        const Operator& e = s.alice[q][a];
        const double lhs = std::pow(state_dependent_norm(Operator(pi * e - e * pi), sigma), 2);
        const double rhs = oracle::expect(s.pure_state(), Operator(e * e - e * pi * e), oracle::eye(s.dim_b)).real();
        EXPECT_NEAR(lhs, rhs, 1e-10);
        EXPECT_NEAR(m.alice[q][a].commutator * m.alice[q][a].commutator, rhs, 1e-10);
      }
  }
}

TEST(Metrics, HatOfZOnPhiPlus) {
  Strategy s = lab::canonical_chsh();
  const HatOperators h = hat_operators(s);
  EXPECT_LT((h.alice[0][0] - s.alice[0][0].transpose()).norm(), 1e-12);
  EXPECT_LT(alice_hat_residual(s, s.alice[0][0], h.alice[0][0]), 1e-12);
}

TEST(Metrics, HatOfXOnAsymmetricState) {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  Vector v = Vector::Zero(4);
  v(0) = std::sqrt(0.9);
  v(3) = std::sqrt(0.1);
  s.state = v;
  s.alice = {ops::pm_projectors(ops::pauli_x())};
  s.bob = {ops::pm_projectors(ops::pauli_z())};
  // Hat of the observable X, by linearity from the two projectors.
  const HatOperators h = hat_operators(s);
  const Operator x_hat = h.alice[0][0] - h.alice[0][1];
  Operator expected = Operator::Zero(2, 2);
  expected(0, 1) = 3.0;
  expected(1, 0) = 1.0 / 3.0;
  EXPECT_LT((x_hat - expected).norm(), 1e-12);
  EXPECT_LT(alice_hat_residual(s, ops::pauli_x(), x_hat), 1e-12);
}

TEST(Metrics, HatOfSupportProjectorIsOtherSupport) {
  std::mt19937_64 gen(35);
  Strategy s = random::strategy({3, 4, 1, 1, 2, 2}, gen);
  const SchmidtData sd = schmidt_decompose(s.pure_state(), 3, 4);
  const LocalSupports p = local_supports(sd);
  s.alice = {{p.pi_a, Operator(identity(3) - p.pi_a)}};
  const HatOperators h = hat_operators(s);
  EXPECT_LT((h.alice[0][0] - p.pi_b).norm(), 1e-10);
}

TEST(Metrics, HatResidualEqualsCommutatorNorm) {
  std::mt19937_64 gen(36);
  for (int trial = 0; trial < 50; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const HatOperators h = hat_operators(s);
    const StrategyMetrics m = strategy_metrics(s);
    for (std::size_t q = 0; q < s.alice.size(); ++q)
      for (std::size_t a = 0; a < s.alice[q].size(); ++a)
        EXPECT_NEAR(alice_hat_residual(s, s.alice[q][a], h.alice[q][a]), m.alice[q][a].commutator, 1e-10);
    for (std::size_t q = 0; q < s.bob.size(); ++q)
      for (std::size_t b = 0; b < s.bob[q].size(); ++b)
        EXPECT_NEAR(bob_hat_residual(s, s.bob[q][b], h.bob[q][b]), m.bob[q][b].commutator, 1e-10);
  }
}

TEST(Metrics, AnyHatBoundsTheCommutator) {
  // If some operator on the other side reproduces A psi within r, then the
  // commutator norm is at most 2r.
  std::mt19937_64 gen(37);
  for (int trial = 0; trial < 50; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const HatOperators h = hat_operators(s);
    const StrategyMetrics m = strategy_metrics(s);
    const Operator noise = 0.05 * random::gaussian(s.dim_b, s.dim_b, gen);
    const Operator guess = h.alice[0][0] + noise;
    const double r = alice_hat_residual(s, s.alice[0][0], guess);
    EXPECT_LE(m.alice[0][0].commutator, 2.0 * r + 1e-12);
  }
}

TEST(Metrics, InvarianceUnderAncillaAndLocalUnitaries) {
  std::mt19937_64 gen(38);
  for (int trial = 0; trial < 30; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const StrategyMetrics m0 = strategy_metrics(s);
    const Strategy t = attach_product_ancilla(s, random::state(2, gen), random::state(3, gen));
    const Strategy u = conjugate_local(s, random::unitary(s.dim_a, gen), random::unitary(s.dim_b, gen));
    EXPECT_NEAR(strategy_metrics(t).support_eps, m0.support_eps, 1e-10);
    EXPECT_NEAR(strategy_metrics(t).projective_eps, m0.projective_eps, 1e-10);
    EXPECT_NEAR(strategy_metrics(u).support_eps, m0.support_eps, 1e-10);
    EXPECT_NEAR(strategy_metrics(u).projective_eps, m0.projective_eps, 1e-10);
  }
}
