#pragma once

// Local dilations S -> S~ under the vector, matrix and extraction forms,
// together with the standard witness constructions.
//
// A witness maps H_A -> H_A~ (x) H_A^ and H_B -> H_B~ (x) H_B^. After applying
// U_A (x) U_B the factors are ordered (A~ A^)(B~ B^) [P]; residuals are taken
// after reordering to A~ B~ A^ B^ [P], where the target is |psi~> (x) |aux>.

#include <random>

#include "selftest/metrics.hpp"
#include "selftest/naimark.hpp"
#include "selftest/random.hpp"

namespace selftest {

struct DilationWitness {
  Operator u_a;  // (dim A~ * dim A^) x dim A
  Operator u_b;
  Vector aux;    // on A^ (x) B^ (x) P
  Eigen::Index aux_a = 1;
  Eigen::Index aux_b = 1;

  Eigen::Index aux_p() const { return aux.size() / (aux_a * aux_b); }
};

struct ResidualReport {
  double state_residual = 0.0;
  std::vector<std::vector<double>> alice;  // [s][a]
  std::vector<std::vector<double>> bob;    // [t][b]
  double eps = 0.0;
};

/// Scalar-ancilla witness (aux = 1).
inline DilationWitness make_witness(Operator u_a, Operator u_b) {
  DilationWitness w;
  w.u_a = std::move(u_a);
  w.u_b = std::move(u_b);
  w.aux = Vector::Ones(1);
  return w;
}

namespace detail {

inline void check_witness(const DilationWitness& w, Eigen::Index src_a, Eigen::Index src_b,
                          Eigen::Index dst_a, Eigen::Index dst_b) {
  if (w.u_a.cols() != src_a || w.u_b.cols() != src_b) {
    throw Error(ErrorCode::DimensionMismatch, "witness isometries do not start at the source spaces");
  }
  if (w.u_a.rows() != dst_a * w.aux_a || w.u_b.rows() != dst_b * w.aux_b) {
    throw Error(ErrorCode::DimensionMismatch,
                "witness isometries do not factor as target (x) ancilla (U_A rows " +
                    std::to_string(w.u_a.rows()) + ", expected " + std::to_string(dst_a) + "*" +
                    std::to_string(w.aux_a) + ")");
  }
  if (w.aux_a <= 0 || w.aux_b <= 0 || w.aux.size() % (w.aux_a * w.aux_b) != 0 || w.aux.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "ancilla size does not match its declared factors");
  }
  const double worst = std::max(isometry_defect(w.u_a), isometry_defect(w.u_b));
  if (worst > tol::kSemantic) {
    throw Error(ErrorCode::StructuralMismatch,
                "witness map is not an isometry (defect " + std::to_string(worst) + ")");
  }
}

// (U_A (x) U_B (x) 1_P) v, reordered to A~ B~ A^ B^ P.
inline Vector apply_witness(const Vector& v, Eigen::Index src_a, Eigen::Index src_b, Eigen::Index dim_p,
                            const DilationWitness& w, Eigen::Index dst_a, Eigen::Index dst_b) {
  const std::array<Eigen::Index, 3> in{src_a, src_b, dim_p};
  Vector x = apply_on_factor(v, in, 0, w.u_a);
  const std::array<Eigen::Index, 3> mid{w.u_a.rows(), src_b, dim_p};
  x = apply_on_factor(x, mid, 1, w.u_b);
  const std::array<Eigen::Index, 5> dims{dst_a, w.aux_a, dst_b, w.aux_b, dim_p};
  const std::array<std::size_t, 5> perm{0, 2, 1, 3, 4};
  return permute_factors(x, dims, perm);
}

// Alice acts on factor 0 of a vector on A (x) rest.
inline Vector alice_row(const Vector& v, Eigen::Index da, const Operator& a) {
  const std::array<Eigen::Index, 2> dims{da, v.size() / da};
  return apply_on_factor(v, dims, 0, a);
}

// Bob acts on factor 1 of a vector on A (x) B (x) rest.
inline Vector bob_row(const Vector& v, Eigen::Index da, Eigen::Index db, const Operator& b) {
  const std::array<Eigen::Index, 3> dims{da, db, v.size() / (da * db)};
  return apply_on_factor(v, dims, 1, b);
}

inline void check_question_shape(const Strategy& src, const Strategy& dst) {
  auto same = [](const MeasurementSet& x, const MeasurementSet& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t q = 0; q < x.size(); ++q)
      if (x[q].size() != y[q].size()) return false;
    return true;
  };
  if (!same(src.alice, dst.alice) || !same(src.bob, dst.bob)) {
    throw Error(ErrorCode::IncompatibleGame, "strategies have different question/answer shapes");
  }
}

inline ResidualReport residuals_on(const Vector& psi, Eigen::Index dim_p, const Strategy& src,
                                   const Strategy& dst, const DilationWitness& w) {
  const Vector& target_state = dst.pure_state();
  const Eigen::Index da = src.dim_a;
  const Eigen::Index db = src.dim_b;
  auto distance = [&](const Vector& src_vec, const Vector& dst_vec) {
    const Vector mapped = apply_witness(src_vec, da, db, dim_p, w, dst.dim_a, dst.dim_b);
    return (mapped - kron(dst_vec, w.aux)).norm();
  };
  ResidualReport r;
  r.state_residual = distance(psi, target_state);
  r.eps = r.state_residual;
  for (std::size_t q = 0; q < src.alice.size(); ++q) {
    std::vector<double> row;
    for (std::size_t a = 0; a < src.alice[q].size(); ++a) {
      const double e = distance(alice_row(psi, da, src.alice[q][a]),
                                alice_row(target_state, dst.dim_a, dst.alice[q][a]));
      row.push_back(e);
      r.eps = std::max(r.eps, e);
    }
    r.alice.push_back(std::move(row));
  }
  for (std::size_t t = 0; t < src.bob.size(); ++t) {
    std::vector<double> row;
    for (std::size_t b = 0; b < src.bob[t].size(); ++b) {
      const double e = distance(bob_row(psi, da, db, src.bob[t][b]),
                                bob_row(target_state, dst.dim_a, dst.dim_b, dst.bob[t][b]));
      row.push_back(e);
      r.eps = std::max(r.eps, e);
    }
    r.bob.push_back(std::move(row));
  }
  return r;
}

}  // namespace detail

inline constexpr int kPurificationProbes = 8;

/// Vector-form residuals of `w` for src -> dst. Mixed sources are purified
/// spectrally (P ordered last); the check is then repeated under
/// `probes` random unitaries on H_P, applied to both the purification and
/// the ancilla, and the worst report is returned.
inline ResidualReport dilation_residuals(const Strategy& src_in, const Strategy& dst_in,
                                         const DilationWitness& w, int probes = kPurificationProbes,
                                         std::uint64_t seed = 0) {
  const Strategy src = canonicalize_state(src_in);
  const Strategy dst = canonicalize_state(dst_in);
  detail::check_structure(src);
  detail::check_structure(dst);
  detail::check_question_shape(src, dst);
  detail::check_witness(w, src.dim_a, src.dim_b, dst.dim_a, dst.dim_b);
  if (src.is_pure()) {
    if (w.aux_p() != 1) {
      throw Error(ErrorCode::DimensionMismatch, "pure source takes an ancilla on A^ (x) B^ only");
    }
    return detail::residuals_on(src.pure_state(), 1, src, dst, w);
  }
  const Purification pur = purify(std::get<Operator>(src.state));
  if (w.aux_p() != pur.dim_p) {
    throw Error(ErrorCode::DimensionMismatch, "ancilla purifying factor has dim " +
                                                  std::to_string(w.aux_p()) + ", source rank is " +
                                                  std::to_string(pur.dim_p));
  }
  ResidualReport worst = detail::residuals_on(pur.state, pur.dim_p, src, dst, w);
  std::mt19937_64 gen(seed);
  for (int k = 0; k < probes; ++k) {
    const Operator q = random::unitary(pur.dim_p, gen);
    const std::array<Eigen::Index, 2> sdims{src.dim_a * src.dim_b, pur.dim_p};
    const std::array<Eigen::Index, 2> adims{w.aux_a * w.aux_b, pur.dim_p};
    DilationWitness wk = w;
    wk.aux = apply_on_factor(w.aux, adims, 1, q);
    const ResidualReport r =
        detail::residuals_on(apply_on_factor(pur.state, sdims, 1, q), pur.dim_p, src, dst, wk);
    if (r.eps > worst.eps) worst = r;
  }
  return worst;
}

/// Witness for restrict(s) -> s: the support isometries with a scalar ancilla.
inline DilationWitness restriction_embedding(const Strategy& s) {
  const Restriction r = restrict(s);
  return make_witness(r.u_a, r.u_b);
}

/// Witness for s -> naimark_strategy(s): the dilation isometries.
inline DilationWitness naimark_embedding(const Strategy& s) {
  const NaimarkStrategy n = naimark_strategy(s);
  return make_witness(n.v_a, n.v_b);
}

/// Composes w1 (X -> Y) and w2 (Y -> Z) into a witness X -> Z whose ancilla
/// spaces are A^2 (x) A^1 and B^2 (x) B^1.
inline DilationWitness compose(const DilationWitness& w1, const DilationWitness& w2) {
  if (w1.aux_p() != 1 || w2.aux_p() != 1) {
    throw Error(ErrorCode::MixedStateUnsupported, "composition is defined for pure-source witnesses");
  }
  if (w2.u_a.cols() * w1.aux_a != w1.u_a.rows() || w2.u_b.cols() * w1.aux_b != w1.u_b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "witnesses do not chain");
  }
  DilationWitness out;
  out.u_a = kron(w2.u_a, identity(w1.aux_a)) * w1.u_a;
  out.u_b = kron(w2.u_b, identity(w1.aux_b)) * w1.u_b;
  out.aux_a = w2.aux_a * w1.aux_a;
  out.aux_b = w2.aux_b * w1.aux_b;
  const std::array<Eigen::Index, 4> dims{w2.aux_a, w2.aux_b, w1.aux_a, w1.aux_b};
  const std::array<std::size_t, 4> perm{0, 2, 1, 3};
  out.aux = permute_factors(kron(w2.aux, w1.aux), dims, perm);
  return out;
}

namespace detail {

// Injective map C^{rows} -> C^{n} (x) C^{k}: |y> |-> |y>|0> for y < n, the
// remaining basis vectors go to |y>|j>, j >= 1, in lexicographic order.
inline Operator padding_isometry(Eigen::Index rows, Eigen::Index n, Eigen::Index k) {
  Operator j = Operator::Zero(n * k, rows);
  for (Eigen::Index y = 0; y < n; ++y) j(y * k, y) = 1.0;
  Eigen::Index next = n;
  for (Eigen::Index y = 0; y < n && next < rows; ++y) {
    for (Eigen::Index t = 1; t < k && next < rows; ++t) j(y * k + t, next++) = 1.0;
  }
  return j;
}

inline Eigen::Index round_up_to_multiple(Eigen::Index x, Eigen::Index m) { return ((x + m - 1) / m) * m; }

}  // namespace detail

/// Given w certifying src -> dst with a product ancilla, builds a witness
/// certifying dst -> src with the same residual on every row.
///
/// Per side: rotate the ancilla factor to |0>, complete U (n -> m*k) to a
/// unitary Q with Q E_n = U, and set V' = J Q^* E_m where E embeds by
/// |x> -> |x>|0> and J pads C^{m k} into C^n (x) C^{n''/n}. The padded
/// dimension n'' is the smallest multiple of n that is >= max(m_A k_A, m_B k_B).
inline DilationWitness reverse_witness(const Strategy& src_in, const Strategy& dst_in,
                                       const DilationWitness& w) {
  const Strategy src = canonicalize_state(src_in);
  const Strategy dst = canonicalize_state(dst_in);
  detail::check_structure(src);
  detail::check_structure(dst);
  detail::check_witness(w, src.dim_a, src.dim_b, dst.dim_a, dst.dim_b);
  if (w.aux_p() != 1) {
    throw Error(ErrorCode::MixedStateUnsupported, "reverse_witness needs a pure-source witness");
  }
  Vector alpha = Vector::Ones(1);
  Vector beta = Vector::Ones(1);
  if (w.aux.size() > 1) {
    const SchmidtData sd =
        detail::schmidt_from_matrix(to_matrix(w.aux / w.aux.norm(), w.aux_a, w.aux_b), kDefaultRankTol);
    if (sd.rank != 1) {
      throw Error(ErrorCode::EntangledAncilla,
                  "ancilla has Schmidt rank " + std::to_string(sd.rank) + "; the padding construction needs a product ancilla");
    }
    alpha = sd.left.col(0);
    beta = sd.right.col(0);
  }
  const Eigen::Index span_a = w.u_a.rows();  // m_A k_A
  const Eigen::Index span_b = w.u_b.rows();
  const Eigen::Index floor = std::max(span_a, span_b);

  auto side = [&](const Operator& u, const Vector& factor, Eigen::Index m, Eigen::Index k,
                  Eigen::Index n, Eigen::Index& k_out) {
    // Rotate the ancilla factor to |0>.
    const Operator rot = complete_to_unitary(factor).adjoint();
    const Operator u0 = kron(identity(m), rot) * u;
    const Operator q = complete_to_unitary(u0);
    k_out = detail::round_up_to_multiple(floor, n) / n;
    const Operator j = detail::padding_isometry(m * k, n, k_out);
    Operator e_m = Operator::Zero(m * k, m);
    for (Eigen::Index x = 0; x < m; ++x) e_m(x * k, x) = 1.0;
    return Operator(j * q.adjoint() * e_m);
  };
  DilationWitness out;
  Eigen::Index ka = 1, kb = 1;
  out.u_a = side(w.u_a, alpha, dst.dim_a, w.aux_a, src.dim_a, ka);
  out.u_b = side(w.u_b, beta, dst.dim_b, w.aux_b, src.dim_b, kb);
  out.aux_a = ka;
  out.aux_b = kb;
  out.aux = kron(ops::basis(ka, 0), ops::basis(kb, 0));
  return out;
}

// ---------------------------------------------------------------------------
// Matrix form.

/// Reduced ancilla state tr_P |aux><aux| of a vector-form witness.
inline Operator matrix_form_aux(const DilationWitness& w) {
  const Eigen::Index k = w.aux_a * w.aux_b;
  return partial_trace(outer(w.aux), k, w.aux_p(), Subsystem::A);
}

/// max over (s,a,t,b) of ||U(A (x) B)rho U^* - (A~ (x) B~)|psi~><psi~| (x) sigma_aux||_F.
inline double matrix_form_residual(const Strategy& src_in, const Strategy& dst_in, const Operator& u_a,
                                   const Operator& u_b, const Operator& sigma_aux) {
  const Strategy src = canonicalize_state(src_in);
  const Strategy dst = canonicalize_state(dst_in);
  detail::check_structure(src);
  detail::check_structure(dst);
  detail::check_question_shape(src, dst);
  require_square(sigma_aux, "sigma_aux");
  if (u_a.cols() != src.dim_a || u_b.cols() != src.dim_b || u_a.rows() % dst.dim_a != 0 ||
      u_b.rows() % dst.dim_b != 0) {
    throw Error(ErrorCode::DimensionMismatch, "isometries do not match strategy dimensions");
  }
  const Eigen::Index ka = u_a.rows() / dst.dim_a;
  const Eigen::Index kb = u_b.rows() / dst.dim_b;
  if (sigma_aux.rows() != ka * kb) {
    throw Error(ErrorCode::DimensionMismatch, "sigma_aux does not live on A^ (x) B^");
  }
  const std::array<Eigen::Index, 4> dims{dst.dim_a, ka, dst.dim_b, kb};
  const std::array<std::size_t, 4> perm{0, 2, 1, 3};
  const Operator u = permutation_operator(dims, perm) * kron(u_a, u_b);
  const Operator rho = src.density();
  const Operator target_state = outer(dst.pure_state());
  double worst = 0.0;
  for (std::size_t s = 0; s < src.alice.size(); ++s) {
    for (std::size_t t = 0; t < src.bob.size(); ++t) {
      for (std::size_t a = 0; a < src.alice[s].size(); ++a) {
        for (std::size_t b = 0; b < src.bob[t].size(); ++b) {
          const Operator lhs = u * kron(src.alice[s][a], src.bob[t][b]) * rho * u.adjoint();
          const Operator rhs =
              kron(Operator(kron(dst.alice[s][a], dst.bob[t][b]) * target_state), sigma_aux);
          worst = std::max(worst, (lhs - rhs).norm());
        }
      }
    }
  }
  return worst;
}

/// Converse direction: from matrix-form data (U, sigma_aux) build the
/// vector-form ancilla aux' = sum_i lambda_i aux'_i (x) |i>_P, where
/// rho = sum_i lambda_i^2 |alpha_i><alpha_i| and
/// U|alpha_i> = |psi~> (x) |aux'_i>. The purification matches purify().
inline DilationWitness vector_witness_from_matrix_form(const Strategy& src_in, const Strategy& dst_in,
                                                       const Operator& u_a, const Operator& u_b) {
  const Strategy src = canonicalize_state(src_in);
  const Strategy dst = canonicalize_state(dst_in);
  detail::check_structure(src);
  detail::check_structure(dst);
  DilationWitness w;
  w.u_a = u_a;
  w.u_b = u_b;
  if (u_a.rows() % dst.dim_a != 0 || u_b.rows() % dst.dim_b != 0) {
    throw Error(ErrorCode::DimensionMismatch, "isometries do not factor through the target");
  }
  w.aux_a = u_a.rows() / dst.dim_a;
  w.aux_b = u_b.rows() / dst.dim_b;
  const Eigen::Index k = w.aux_a * w.aux_b;
  const Vector& target = dst.pure_state();
  auto project = [&](const Vector& alpha) {
    const Vector mapped = detail::apply_witness(alpha, src.dim_a, src.dim_b, 1, w, dst.dim_a, dst.dim_b);
    // (<psi~| (x) 1) on A~B~ (x) A^B^
    Vector out = Vector::Zero(k);
    for (Eigen::Index x = 0; x < target.size(); ++x) out += std::conj(target(x)) * mapped.segment(x * k, k);
    return out;
  };
  if (src.is_pure()) {
    w.aux = project(src.pure_state());
    return w;
  }
  const Operator& rho = std::get<Operator>(src.state);
  const Purification pur = purify(rho);
  const SpectralData spec = hermitian_eig(rho);
  double norm = 0.0;
  for (Eigen::Index i = 0; i < pur.dim_p; ++i) norm += std::max(spec.eigenvalues(i), 0.0);
  w.aux = Vector::Zero(k * pur.dim_p);
  for (Eigen::Index i = 0; i < pur.dim_p; ++i) {
    const double lambda = std::sqrt(std::max(spec.eigenvalues(i), 0.0) / norm);
    const Vector ai = project(spec.eigenvectors.col(i));
    for (Eigen::Index x = 0; x < k; ++x) w.aux(x * pur.dim_p + i) = lambda * ai(x);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Extraction form.

struct ExtractionReport {
  double state_residual = 0.0;
  std::vector<std::vector<double>> alice;  // ||U_A A U_A^* - A~ (x) 1||_F
  std::vector<std::vector<double>> bob;
  double eps = 0.0;
  Vector aux;  // recovered ancilla on A^ (x) B^
  Eigen::Index aux_a = 1;
  Eigen::Index aux_b = 1;
};

inline ExtractionReport extraction_report(const Strategy& src_in, const Strategy& dst_in,
                                          const Operator& u_a, const Operator& u_b) {
  const Strategy src = canonicalize_state(src_in);
  const Strategy dst = canonicalize_state(dst_in);
  detail::check_structure(src);
  detail::check_structure(dst);
  detail::check_question_shape(src, dst);
  if (!is_full_rank(src) || !is_full_rank(dst)) {
    throw Error(ErrorCode::NotFullRank, "extraction form is defined for pure full-rank strategies");
  }
  if (u_a.rows() != u_a.cols() || u_b.rows() != u_b.cols() || u_a.cols() != src.dim_a ||
      u_b.cols() != src.dim_b || src.dim_a % dst.dim_a != 0 || src.dim_b % dst.dim_b != 0) {
    throw Error(ErrorCode::DimensionMismatch, "extraction needs square unitaries H -> H~ (x) H^");
  }
  if (isometry_defect(u_a) > tol::kSemantic || isometry_defect(u_b) > tol::kSemantic) {
    throw Error(ErrorCode::StructuralMismatch, "extraction maps must be unitary");
  }
  ExtractionReport r;
  r.aux_a = src.dim_a / dst.dim_a;
  r.aux_b = src.dim_b / dst.dim_b;
  DilationWitness w;
  w.u_a = u_a;
  w.u_b = u_b;
  w.aux_a = r.aux_a;
  w.aux_b = r.aux_b;
  const Eigen::Index k = r.aux_a * r.aux_b;
  const Vector& target = dst.pure_state();
  const Vector mapped = detail::apply_witness(src.pure_state(), src.dim_a, src.dim_b, 1, w, dst.dim_a, dst.dim_b);
  Vector aux = Vector::Zero(k);
  for (Eigen::Index x = 0; x < target.size(); ++x) aux += std::conj(target(x)) * mapped.segment(x * k, k);
  const double n = aux.norm();
  if (n < 1e-6) {
    throw Error(ErrorCode::StructuralMismatch, "mapped state has no overlap with the target state");
  }
  r.aux = aux / n;
  r.state_residual = (mapped - kron(target, r.aux)).norm();
  r.eps = r.state_residual;
  const Operator ia = identity(r.aux_a);
  const Operator ib = identity(r.aux_b);
  for (std::size_t s = 0; s < src.alice.size(); ++s) {
    std::vector<double> row;
    for (std::size_t a = 0; a < src.alice[s].size(); ++a) {
      row.push_back((u_a * src.alice[s][a] * u_a.adjoint() - kron(dst.alice[s][a], ia)).norm());
      r.eps = std::max(r.eps, row.back());
    }
    r.alice.push_back(std::move(row));
  }
  for (std::size_t t = 0; t < src.bob.size(); ++t) {
    std::vector<double> row;
    for (std::size_t b = 0; b < src.bob[t].size(); ++b) {
      row.push_back((u_b * src.bob[t][b] * u_b.adjoint() - kron(dst.bob[t][b], ib)).norm());
      r.eps = std::max(r.eps, row.back());
    }
    r.bob.push_back(std::move(row));
  }
  return r;
}

inline double extraction_residual(const Strategy& src, const Strategy& dst, const Operator& u_a,
                                  const Operator& u_b) {
  return extraction_report(src, dst, u_a, u_b).eps;
}

/// From a vector-form witness between full-rank strategies, compress the
/// ancilla to its supports: W = (1 (x) T^*)U, aux' = (T_A^* (x) T_B^*)aux
/// with T built from the ancilla's Schmidt vectors.
inline DilationWitness extraction_witness_from_vector(const Strategy& src, const Strategy& dst,
                                                      const DilationWitness& w) {
  if (w.aux_p() != 1) throw Error(ErrorCode::MixedStateUnsupported, "pure witness required");
  const SchmidtData sd = detail::schmidt_from_matrix(to_matrix(w.aux, w.aux_a, w.aux_b), kDefaultRankTol);
  const Eigen::Index r = sd.rank;
  if (src.dim_a != r * dst.dim_a || src.dim_b != r * dst.dim_b) {
    throw Error(ErrorCode::StructuralMismatch, "source dimension is not rank(aux) times target dimension");
  }
  DilationWitness out;
  out.u_a = kron(identity(dst.dim_a), Operator(sd.left.adjoint())) * w.u_a;
  out.u_b = kron(identity(dst.dim_b), Operator(sd.right.adjoint())) * w.u_b;
  out.aux_a = r;
  out.aux_b = r;
  out.aux = to_vector(sd.left.adjoint() * to_matrix(w.aux, w.aux_a, w.aux_b) * sd.right.conjugate());
  return out;
}

}  // namespace selftest
