#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace selftest;

namespace {

const double kR2 = std::sqrt(2.0);

Strategy classical_chsh() {
  // Deterministic a = b = 0 on a product state; wins 3 of 4 question pairs.
  Strategy s;
  s.dim_a = 1;
  s.dim_b = 1;
  s.state = Vector(Vector::Ones(1));
  const Povm always0{Operator::Ones(1, 1), Operator::Zero(1, 1)};
  s.alice = {always0, always0};
  s.bob = {always0, always0};
  return s;
}

}  // namespace

TEST(Strategy, CanonicalChshIsValid) {
  const ValidationReport r = validate_strategy(lab::canonical_chsh());
  EXPECT_TRUE(r.valid);
  for (const FamilyReport& f : r.alice) EXPECT_LT(f.completeness_defect, 1e-14);
  for (const FamilyReport& f : r.bob) EXPECT_LT(f.completeness_defect, 1e-14);
  EXPECT_LT(r.state_norm_defect, 1e-14);
}

TEST(Strategy, TrineSumsToIdentity) {
  const Povm m = ops::trine();
  Operator sum = Operator::Zero(2, 2);
  for (const Operator& e : m) {
    sum += e;
    EXPECT_GE(min_eigenvalue(e), -1e-15);
  }
  EXPECT_LT((sum - identity(2)).norm(), 1e-15);
  EXPECT_TRUE(validate_strategy(lab::trine_strategy()).valid);
}

TEST(Strategy, DoubleIdentityFamilyIsInvalid) {
  Strategy s = lab::canonical_chsh();
  s.alice[0] = {identity(2), identity(2)};
  const ValidationReport r = validate_strategy(s);
  EXPECT_FALSE(r.valid);
  EXPECT_NEAR(r.alice[0].completeness_defect, std::sqrt(2.0), 1e-14);
  EXPECT_FALSE(r.issues.empty());
}

TEST(Strategy, DimensionInconsistencyThrows) {
  Strategy s = lab::canonical_chsh();
  s.bob[0][0] = identity(3);
  EXPECT_THROW(validate_strategy(s), Error);
}

TEST(Strategy, UnnormalizedStateIsInvalid) {
  Strategy s = lab::canonical_chsh();
  s.state = Vector(2.0 * ops::phi_plus());
  EXPECT_FALSE(validate_strategy(s).valid);
}

TEST(Strategy, ChshGameOperatorSpectrum) {
  const Operator w = game_operator(games::chsh(), lab::canonical_chsh());
  EXPECT_LT(hermiticity_defect(w), 1e-12);
  const SpectralData s = hermitian_eig(w);
  EXPECT_NEAR(s.eigenvalues(0), (2 + kR2) / 4, 1e-12);
  EXPECT_NEAR(s.eigenvalues(1), 0.5, 1e-12);
  EXPECT_NEAR(s.eigenvalues(2), 0.5, 1e-12);
  EXPECT_NEAR(s.eigenvalues(3), (2 - kR2) / 4, 1e-12);
}

TEST(Strategy, ConstantGames) {
  std::mt19937_64 gen(11);
  const Strategy s = random::strategy({3, 2, 2, 3, 3}, gen);
  const NonlocalGame one = games::constant(true, 2, 3, 3, 3);
  const NonlocalGame zero = games::constant(false, 2, 3, 3, 3);
  EXPECT_LT((game_operator(one, s) - identity(6)).norm(), 1e-12);
  EXPECT_LT(game_operator(zero, s).norm(), 1e-15);
  EXPECT_NEAR(win_probability(one, s), 1.0, 1e-12);
}

TEST(Strategy, ChshWinProbability) {
  EXPECT_NEAR(win_probability(games::chsh(), lab::canonical_chsh()), (2 + kR2) / 4, 1e-12);
}

TEST(Strategy, MixedStatesInZBasis) {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  const Povm z = ops::pm_projectors(ops::pauli_z());
  s.alice = {z, z};
  s.bob = {z, z};
  // independent uniform answers
  s.state = Operator(identity(4) / 4.0);
  EXPECT_NEAR(win_probability(games::chsh(), s), 0.5, 1e-12);
  // shared random bit: a = b always, loses only on (1,1)
  const Operator zz = outer(kron(ops::basis(2, 0), ops::basis(2, 0)));
  const Operator oo = outer(kron(ops::basis(2, 1), ops::basis(2, 1)));
  s.state = Operator(0.5 * (zz + oo));
  EXPECT_NEAR(win_probability(games::chsh(), s), 0.75, 1e-12);
}

TEST(Strategy, OptimalityGap) {
  const double omega_q = lab::kChshQuantumValue;
  EXPECT_NEAR(optimality_gap(games::chsh(), lab::canonical_chsh(), omega_q), 0.0, 1e-15);
  EXPECT_NEAR(optimality_gap(games::chsh(), classical_chsh(), omega_q), omega_q - 0.75, 1e-15);
  EXPECT_LT(optimality_gap(games::chsh(), classical_chsh(), 0.5), 0.0);
}

TEST(Strategy, ChshCorrelationEntries) {
  const Correlation c = correlation_of(lab::canonical_chsh());
  const double c8 = std::cos(M_PI / 8);
  EXPECT_NEAR(c(0, 0, 0, 0), c8 * c8 / 2, 1e-14);
  EXPECT_TRUE(c.well_formed());
}

TEST(Strategy, TrineMarginals) {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  s.state = ops::phi_plus();
  s.alice = {{identity(2)}};
  s.bob = {ops::trine()};
  const Correlation c = correlation_of(s);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(c(0, b, 0, 0), 1.0 / 3.0, 1e-14);
}

TEST(Strategy, ProductStateZ) {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  s.state = kron(ops::basis(2, 0), ops::basis(2, 0));
  const Povm z = ops::pm_projectors(ops::pauli_z());
  s.alice = {z};
  s.bob = {z};
  EXPECT_NEAR(correlation_of(s)(0, 0, 0, 0), 1.0, 1e-15);
}

TEST(Strategy, CorrelationMatchesFullOperatorOracle) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const Correlation c = correlation_of(s);
    EXPECT_TRUE(c.well_formed());
    for (std::size_t q = 0; q < s.alice.size(); ++q)
      for (std::size_t t = 0; t < s.bob.size(); ++t)
        for (std::size_t a = 0; a < s.alice[q].size(); ++a)
          for (std::size_t b = 0; b < s.bob[t].size(); ++b)
            EXPECT_NEAR(c(a, b, q, t), oracle::prob(s, q, a, t, b), 1e-12);
  }
}

TEST(Strategy, MixedAndPureAgree) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Strategy pure = random::strategy(oracle::random_shape(gen), gen);
    Strategy mixed = pure;
    mixed.state = Operator(outer(pure.pure_state()));
    EXPECT_LT(correlation_of(pure).max_abs_difference(correlation_of(mixed)), 1e-12);
  }
}

TEST(Strategy, WinProbabilityEqualsTraceOfGameOperator) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 50; ++trial) {
    const Strategy s = random::strategy({2 + trial % 3, 2 + trial % 2, 2, 2, 2}, gen);
    const NonlocalGame g = games::chsh();
    const Operator w = game_operator(g, s);
    const Vector& psi = s.pure_state();
    EXPECT_NEAR(win_probability(g, s), psi.dot(w * psi).real(), 1e-12);
  }
}

TEST(Strategy, IncompatibleGameThrows) {
  const NonlocalGame g = games::constant(true, 3, 2, 2, 2);
  try {
    win_probability(g, lab::canonical_chsh());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleGame);
  }
}

TEST(Strategy, AncillaAttachmentKeepsCorrelation) {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 30; ++trial) {
    const Strategy s = random::strategy(oracle::random_shape(gen), gen);
    const Vector alpha = random::state(2, gen);
    const Vector beta = random::state(3, gen);
    const Strategy t = attach_product_ancilla(s, alpha, beta);
    EXPECT_LT(correlation_of(s).max_abs_difference(correlation_of(t)), 1e-12);
    const Vector aux = random::state(6, gen);
    const Strategy u = attach_ancilla(s, aux, 3, 2);
    EXPECT_LT(correlation_of(s).max_abs_difference(correlation_of(u)), 1e-12);
  }
}

TEST(Strategy, GameValidation) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(2, 2, 0.3);
  EXPECT_THROW(NonlocalGame::make(pi, 2, 2, [](auto...) { return true; }), Error);
}
