#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace selftest;

namespace {

Povm z_pvm() { return {outer(ops::basis(2, 0)), outer(ops::basis(2, 1))}; }

// ||(V R (x) 1)psi - (P V (x) 1)psi||^2 with the full operators.
double residual_sq(const Vector& psi, Eigen::Index db, const Operator& v, const Operator& r, const Operator& p) {
  const Operator lhs = oracle::kron(Operator(v * r), oracle::eye(db));
  const Operator rhs = oracle::kron(Operator(p * v), oracle::eye(db));
  return ((lhs - rhs) * psi).squaredNorm();
}

}  // namespace

TEST(Naimark, SinglePvm) {
  const NaimarkDilation d = naimark_single(z_pvm());
  EXPECT_EQ(d.dim_out, 4);
  EXPECT_TRUE(verify_dilation({z_pvm()}, d).pass);
}

TEST(Naimark, SingleTrine) {
  const NaimarkDilation d = naimark_single(ops::trine());
  EXPECT_EQ(d.dim_out, 6);
  const DilationReport r = verify_dilation({ops::trine()}, d);
  EXPECT_TRUE(r.pass);
  for (double e : r.element_defect[0]) EXPECT_LT(e, 1e-12);
}

TEST(Naimark, SingleTrivialPovm) {
  const NaimarkDilation d = naimark_single({identity(3)});
  EXPECT_EQ(d.dim_out, 3);
  EXPECT_LT((d.isometry - identity(3)).norm(), 1e-14);
  EXPECT_LT((d.pvms[0][0] - identity(3)).norm(), 1e-14);
}

TEST(Naimark, SingleRejectsInvalid) {
  try {
    naimark_single({identity(2), identity(2)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPovm);
  }
}

TEST(Naimark, ChshPlusTrineFamilies) {
  const MeasurementSet bob = lab::trine_strategy().bob;
  const NaimarkDilation d = naimark_family(bob);
  const DilationReport r = verify_dilation(bob, d);
  EXPECT_TRUE(r.pass) << "worst " << r.worst;
}

TEST(Naimark, ProjectiveFamilyAbsorbsComplementOnOutcomeZero) {
  const MeasurementSet fam{z_pvm(), ops::pm_projectors(ops::pauli_x())};
  const NaimarkDilation d = naimark_family(fam);
  EXPECT_TRUE(verify_dilation(fam, d).pass);
  // The first family was re-embedded: P = V2 P1 V2^* with the complement on outcome 0.
  const NaimarkDilation first = naimark_single(fam[0]);
  const NaimarkDilation step = [&] {
    const Operator& v1 = first.isometry;
    Povm lifted;
    for (std::size_t j = 0; j < 2; ++j) {
      Operator r = v1 * fam[1][j] * v1.adjoint();
      if (j == 0) r += identity(4) - v1 * v1.adjoint();
      lifted.push_back(r);
    }
    return naimark_single(lifted);
  }();
  const Operator& v2 = step.isometry;
  const Operator complement = identity(step.dim_out) - v2 * v2.adjoint();
  EXPECT_LT((d.pvms[0][0] - (v2 * first.pvms[0][0] * v2.adjoint() + complement)).norm(), 1e-12);
  EXPECT_LT((d.pvms[0][1] - v2 * first.pvms[0][1] * v2.adjoint()).norm(), 1e-12);
}

TEST(Naimark, TwoCopiesAgreeOnRange) {
  const Povm x = ops::pm_projectors(ops::pauli_x());
  const NaimarkDilation d = naimark_family({x, x});
  ASSERT_TRUE(verify_dilation({x, x}, d).pass);
  std::mt19937_64 gen(41);
  for (int k = 0; k < 5; ++k) {
    const Vector phi = d.isometry * random::state(2, gen);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(((d.pvms[0][j] - d.pvms[1][j]) * phi).norm(), 1e-12);
  }
}

TEST(Naimark, PvmRangeIsInvariant) {
  // For projective input, V V^* commutes with P on the range of V.
  const Povm f = ops::pm_projectors(ops::obs_h());
  const NaimarkDilation d = naimark_single(f);
  const Operator vv = d.isometry * d.isometry.adjoint();
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_LT(((vv * d.pvms[0][j] - d.pvms[0][j] * vv) * d.isometry).norm(), 1e-12);
  }
}

TEST(Naimark, RandomFamiliesVerify) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 2 + trial % 3;
    std::vector<Povm> fam;
    for (int q = 0; q < 1 + trial % 3; ++q) fam.push_back(random::povm(d, 2 + (trial + q) % 3, gen));
    const NaimarkDilation n = naimark_family(fam);
    const DilationReport r = verify_dilation(fam, n);
    EXPECT_TRUE(r.pass) << "worst " << r.worst;
  }
}

TEST(Naimark, TamperedDilationFailsAtTheRightPlace) {
  const MeasurementSet fam = lab::trine_strategy().bob;
  NaimarkDilation d = naimark_family(fam);
  d.pvms[2][1] = identity(d.dim_out);
  const DilationReport r = verify_dilation(fam, d);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.worst_family, 2u);
  EXPECT_GT(r.element_defect[2][1], 0.5);
  for (std::size_t f = 0; f < fam.size(); ++f)
    for (std::size_t j = 0; j < fam[f].size(); ++j)
      if (f != 2 || j != 1) {
        EXPECT_LT(r.element_defect[f][j], 1e-10);
      }
}

TEST(Naimark, IdentityDilationOfPvm) {
  NaimarkDilation d;
  d.dim_in = d.dim_out = 2;
  d.isometry = identity(2);
  d.pvms = {z_pvm()};
  EXPECT_TRUE(verify_dilation({z_pvm()}, d).pass);
}

TEST(Naimark, StrategyPreservesCorrelation) {
  for (const Strategy& s : {lab::canonical_chsh(), lab::trine_strategy()}) {
    const NaimarkStrategy n = naimark_strategy(s);
    EXPECT_TRUE(validate_strategy(n.strategy).valid);
    EXPECT_LT(projective_eps(n.strategy), 1e-7);
    EXPECT_LT(oracle::correlation_distance(s, n.strategy), 1e-12);
  }
}

TEST(Naimark, TrivialPovmsEmbedStateOnly) {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  s.state = ops::phi_plus();
  s.alice = {{identity(2)}};
  s.bob = {{identity(2)}};
  const NaimarkStrategy n = naimark_strategy(s);
  EXPECT_EQ(n.strategy.dim_a, 2);
  EXPECT_LT((n.strategy.pure_state() - s.pure_state()).norm(), 1e-14);
}

TEST(Naimark, StrategyRejectsMixed) {
  Strategy s = lab::canonical_chsh();
  s.state = Operator(identity(4) / 4.0);
  EXPECT_THROW(naimark_strategy(s), Error);
}

TEST(Naimark, MinimalTrineDilation) {
  const NaimarkDilation d = minimal_trine_dilation();
  const MeasurementSet bob = lab::trine_strategy().bob;
  const DilationReport r = verify_dilation(bob, d, 1e-12);
  EXPECT_TRUE(r.pass) << "worst " << r.worst;
  const Povm& m = d.pvms[2];
  EXPECT_LT((d.isometry.adjoint() * m[0] * d.isometry - ops::trine()[0]).norm(), 1e-12);
  EXPECT_LT((m[0] + m[1] + m[2] - identity(3)).norm(), 1e-12);
  const Povm& h = d.pvms[0];
  EXPECT_LT((h[0] + h[1] - identity(3)).norm(), 1e-14);
  EXPECT_LT((h[0] * h[0] - h[0]).norm(), 1e-14);
}

TEST(Naimark, MinimalDilationsAreUnitarilyRelated) {
  // A second minimal dilation of the trine with the same V: flip the sign of
  // the third coordinate of each e_j. The unitary mapping M'_j V|k> to
  // M''_j V|k> must be unitary and intertwine both the isometry and the PVM.
  const NaimarkDilation d1 = minimal_trine_dilation();
  Operator flip = identity(3);
  flip(2, 2) = -1.0;
  Povm m2;
  for (const Operator& p : d1.pvms[2]) m2.push_back(flip * p * flip);
  Operator from(3, 6), to(3, 6);
  for (Eigen::Index j = 0; j < 3; ++j)
    for (Eigen::Index k = 0; k < 2; ++k) {
      from.col(j * 2 + k) = d1.pvms[2][static_cast<std::size_t>(j)] * d1.isometry.col(k);
      to.col(j * 2 + k) = m2[static_cast<std::size_t>(j)] * d1.isometry.col(k);
    }
  const Operator u = to * from.completeOrthogonalDecomposition().pseudoInverse();
  EXPECT_LT((u.adjoint() * u - identity(3)).norm(), 1e-12);
  EXPECT_LT((u * d1.isometry - d1.isometry).norm(), 1e-12);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_LT((u * d1.pvms[2][j] * u.adjoint() - m2[j]).norm(), 1e-12);
  EXPECT_TRUE(verify_dilation({ops::trine()}, NaimarkDilation{2, 3, d1.isometry, {m2}}).pass);
}

TEST(Naimark, ResidualIdentityGenericAndMinimal) {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 2 + trial % 3;
    const Eigen::Index db = 2 + trial % 2;
    const Povm f = random::povm(d, 2 + trial % 3, gen);
    const Vector psi = random::state_with_rank(d, db, 1 + trial % std::min(d, db), gen);
    const NaimarkDilation n = naimark_single(f);
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double lhs = residual_sq(psi, db, n.isometry, f[j], n.pvms[0][j]);
      const double rhs = oracle::expect(psi, Operator((identity(d) - f[j]) * f[j]), oracle::eye(db)).real();
      EXPECT_NEAR(lhs, rhs, 1e-10);
    }
  }
  const NaimarkDilation m = minimal_trine_dilation();
  const Vector psi = ops::phi_plus();
  const Povm trine = ops::trine();
  for (std::size_t j = 0; j < 3; ++j) {
    const Operator& r = trine[j];
    EXPECT_NEAR(residual_sq(psi, 2, m.isometry, r, m.pvms[2][j]),
                oracle::expect(psi, Operator((identity(2) - r) * r), oracle::eye(2)).real(), 1e-12);
  }
}

TEST(Naimark, SupportPreservingZeroProjectiveStaysSupportPreserving) {
  // Padded CHSH: support-preserving and projective on the support.
  const Strategy s = attach_product_ancilla(lab::canonical_chsh(), ops::basis(2, 0), ops::basis(3, 1));
  ASSERT_LT(support_preserving_eps(s), 1e-12);
  const NaimarkStrategy n = naimark_strategy(s);
  EXPECT_LT(support_preserving_eps(n.strategy), 1e-9);
}
