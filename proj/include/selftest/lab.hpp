#pragma once

// Worked examples: the CHSH and trine strategies, the beta functionals,
// eigengap bounds, the rank-deficient pencil, effective measurements,
// higher-order moments and seeded perturbations.

#include <optional>
#include <random>

#include "selftest/dilation.hpp"
#include "selftest/parallel.hpp"

namespace selftest::lab {

/// (2 + sqrt 2)/4, the quantum value of CHSH. Supplied, never computed.
inline const double kChshQuantumValue = (2.0 + std::sqrt(2.0)) / 4.0;

inline NonlocalGame chsh_game() { return games::chsh(); }

inline Strategy canonical_chsh() {
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  s.state = ops::phi_plus();
  s.alice = ops::chsh_alice();
  s.bob = ops::chsh_bob();
  return s;
}

/// CHSH plus a third Bob question measuring the trine POVM.
inline Strategy trine_strategy() {
  Strategy s = canonical_chsh();
  s.bob.push_back(ops::trine());
  return s;
}

/// <psi| X (x) Y |psi>, or tr(rho (X (x) Y)) for mixed states.
inline cplx expectation(const Strategy& s, const Operator& x, const Operator& y) {
  if (x.rows() != s.dim_a || y.rows() != s.dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "expectation: operators do not match strategy dims");
  }
  if (s.is_pure()) {
    const Operator psi = to_matrix(s.pure_state(), s.dim_a, s.dim_b);
    return (psi.adjoint() * x * psi * y.transpose()).trace();
  }
  return (std::get<Operator>(s.state) * kron(x, y)).trace();
}

struct BetaValues {
  double beta0 = 0.0;
  std::optional<double> beta1;  // present when Bob has a three-outcome third question
};

/// beta0 = <A0B0 + A0B1 + A1B0 - A1B1>,
/// beta1 = <A0F0 - A0F1/2 + (sqrt3/2)A1F1 - A0F2/2 - (sqrt3/2)A1F2>,
/// with A_i, B_i the observables of the binary questions and F_j the
/// elements of Bob's question 2.
inline BetaValues beta_functionals(const Strategy& s) {
  detail::check_structure(s);
  auto binary = [](const MeasurementSet& set, std::size_t q) { return q < set.size() && set[q].size() == 2; };
  if (!binary(s.alice, 0) || !binary(s.alice, 1) || !binary(s.bob, 0) || !binary(s.bob, 1)) {
    throw Error(ErrorCode::DimensionMismatch, "beta functionals need two binary questions per player");
  }
  const Operator a0 = ops::observable(s.alice[0]);
  const Operator a1 = ops::observable(s.alice[1]);
  const Operator b0 = ops::observable(s.bob[0]);
  const Operator b1 = ops::observable(s.bob[1]);
  BetaValues v;
  v.beta0 = (expectation(s, a0, b0) + expectation(s, a0, b1) + expectation(s, a1, b0) -
             expectation(s, a1, b1))
                .real();
  if (s.bob.size() >= 3) {
    if (s.bob[2].size() != 3) {
      throw Error(ErrorCode::DimensionMismatch, "beta1 needs a three-outcome third Bob question");
    }
    const Povm& f = s.bob[2];
    const double h = std::sqrt(3.0) / 2.0;
    v.beta1 = (expectation(s, a0, f[0]) - 0.5 * expectation(s, a0, f[1]) + h * expectation(s, a1, f[1]) -
               0.5 * expectation(s, a0, f[2]) - h * expectation(s, a1, f[2]))
                  .real();
  }
  return v;
}

/// C = 2 (sum_{s,t} pi(s,t) sum_{a,b} V(a,b|s,t)) max(|A|, |B|).
inline double robustness_constant(const NonlocalGame& g) {
  g.validate();
  double mass = 0.0;
  for (std::size_t s = 0; s < g.num_s; ++s)
    for (std::size_t t = 0; t < g.num_t; ++t) {
      double wins = 0.0;
      for (std::size_t a = 0; a < g.num_a; ++a)
        for (std::size_t b = 0; b < g.num_b; ++b) wins += g.wins(a, b, s, t) ? 1.0 : 0.0;
      mass += g.pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) * wins;
    }
  return 2.0 * mass * static_cast<double>(std::max(g.num_a, g.num_b));
}

struct EigengapReport {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double gap = 0.0;
  int top_multiplicity = 0;
  double p0 = 0.0;           // ||(<psi~| (x) 1) phi||^2
  double state_bound = 0.0;  // sqrt(2 - 2 sqrt(p0)) = min_aux ||phi - psi~ (x) aux||
  double energy = 0.0;       // <phi| W (x) 1 |phi>
  double delta = 0.0;        // lambda0 - energy
  double delta_eff = 0.0;
  double p0_bound = 0.0;        // 1 - delta_eff / gap
  double distance_bound = 0.0;  // sqrt(2 delta_eff / gap)
  bool premise = false;         // energy >= lambda0 - delta_eff
  bool bound_holds = true;      // premise implies both bounds
  Vector aux;                   // normalized (<psi~| (x) 1) phi
};

/// Overlap of `candidate` (on the W space, optionally tensored with an
/// ancilla placed last) with the nondegenerate top eigenvector of W.
inline EigengapReport eigengap_analysis(const Operator& w, const Vector& canonical_psi, const Vector& candidate,
                                        double delta_eff) {
  const SpectralData spec = hermitian_eig(w);
  const Eigen::Index n = w.rows();
  if (canonical_psi.size() != n || candidate.size() % n != 0 || candidate.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "eigengap: vectors do not fit the game operator");
  }
  EigengapReport r;
  r.lambda0 = spec.eigenvalues(0);
  Eigen::Index mult = 1;
  while (mult < n && r.lambda0 - spec.eigenvalues(mult) <= tol::kCluster) ++mult;
  r.top_multiplicity = static_cast<int>(mult);
  if (mult > 1) {
    throw Error(ErrorCode::DegenerateSpectrum,
                "top eigenvalue has multiplicity " + std::to_string(mult) + "; the overlap bound does not apply");
  }
  r.lambda1 = n > 1 ? spec.eigenvalues(1) : r.lambda0;
  r.gap = r.lambda0 - r.lambda1;
  const double top_overlap = std::norm(spec.eigenvectors.col(0).dot(canonical_psi)) / canonical_psi.squaredNorm();
  if (top_overlap < 1.0 - tol::kSemantic) {
    throw Error(ErrorCode::InvalidState, "canonical state is not the top eigenvector of W");
  }
  const Vector psi = canonical_psi / canonical_psi.norm();
  const Vector phi = candidate / candidate.norm();
  const Eigen::Index k = phi.size() / n;
  const Operator phi_m = to_matrix(phi, n, k);
  r.aux = phi_m.transpose() * psi.conjugate();  // (<psi~| (x) 1) phi
  r.p0 = std::min(1.0, r.aux.squaredNorm());
  r.state_bound = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sqrt(r.p0)));
  if (r.aux.norm() > 0) r.aux /= r.aux.norm();
  r.energy = (phi_m.adjoint() * w * phi_m).trace().real();
  r.delta = r.lambda0 - r.energy;
  r.delta_eff = delta_eff;
  const double d = std::max(delta_eff, 0.0);
  r.p0_bound = 1.0 - d / r.gap;
  r.distance_bound = std::sqrt(2.0 * d / r.gap);
  r.premise = r.energy >= r.lambda0 - delta_eff - tol::kExact;
  if (r.premise) {
    r.bound_holds = r.p0 >= r.p0_bound - tol::kSemantic && r.state_bound <= r.distance_bound + tol::kSemantic;
  }
  return r;
}

struct PencilResult {
  cplx x0 = 0.0;
  Vector state;           // normalized phi + x0 psi, or psi + x0 phi when swapped
  Eigen::Index rank = 0;  // Schmidt rank of `state`
  bool swapped = false;
};

/// Finds x0 with det(M_phi + x0 M_psi) = 0 through the eigenvalues of
/// -M_psi^{-1} M_phi. A singular M_phi gives x0 = 0 directly; a singular
/// M_psi with invertible M_phi makes the determinant constant in x, so the
/// roles are swapped and the root of det(M_psi + y M_phi) is returned.
inline PencilResult rank_deficient_combination(const Vector& phi, const Vector& psi, Eigen::Index d,
                                               double rank_tol = 1e-8) {
  if (phi.size() != d * d || psi.size() != d * d) {
    throw Error(ErrorCode::DimensionMismatch, "pencil: vectors must live in C^d (x) C^d");
  }
  const Operator m_phi = to_matrix(phi, d, d);
  const Operator m_psi = to_matrix(psi, d, d);
  auto singular = [&](const Operator& m) {
    Eigen::JacobiSVD<Operator> svd(m);
    const RealVector& s = svd.singularValues();
    return s(0) == 0.0 || s(d - 1) <= rank_tol * s(0);
  };
  auto smallest_sv = [&](const Operator& m) {
    Eigen::JacobiSVD<Operator> svd(m);
    const RealVector& s = svd.singularValues();
    return s(0) == 0.0 ? 0.0 : s(d - 1) / s(0);
  };
  auto finish = [&](const Vector& v, cplx x, bool swapped) {
    if (v.norm() < 1e-12) throw Error(ErrorCode::InvalidState, "pencil: inputs are linearly dependent");
    PencilResult r;
    r.x0 = x;
    r.state = v / v.norm();
    r.rank = schmidt_rank(r.state, d, d, rank_tol);
    r.swapped = swapped;
    return r;
  };
  auto root = [&](const Operator& p, const Operator& q) {
    // eigenvalues of -q^{-1} p are the roots of det(p + x q)
    const Operator m = -q.partialPivLu().solve(p);
    Eigen::ComplexEigenSolver<Operator> es(m, false);
    cplx best = es.eigenvalues()(0);
    double best_sv = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const cplx x = es.eigenvalues()(i);
      const double sv = smallest_sv(p + x * q);
      if (sv < best_sv) {
        best_sv = sv;
        best = x;
      }
    }
    return best;
  };
  if (singular(m_phi)) return finish(phi, 0.0, false);
  if (!singular(m_psi)) {
    const cplx x = root(m_phi, m_psi);
    return finish(phi + x * psi, x, false);
  }
  const cplx y = root(m_psi, m_phi);
  return finish(psi + y * phi, y, true);
}

/// G_j = tr_B'[(1 (x) sigma^1/2) U F_j U^* (1 (x) sigma^1/2)] for an isometry
/// U : H -> H_B~ (x) H_B' given with dim H_B~ = `dim_tilde`.
inline std::vector<Operator> effective_measurement(const std::vector<Operator>& f, const Operator& u,
                                                   Eigen::Index dim_tilde, const Operator& sigma) {
  require_square(sigma, "sigma");
  if (dim_tilde <= 0 || u.rows() % dim_tilde != 0 || u.rows() / dim_tilde != sigma.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "effective_measurement: U does not factor as B~ (x) B'");
  }
  if (isometry_defect(u) > tol::kSemantic) {
    throw Error(ErrorCode::StructuralMismatch, "effective_measurement: U is not an isometry");
  }
  const Eigen::Index k = sigma.rows();
  const Operator root = kron(identity(dim_tilde), psd_sqrt(sigma));
  std::vector<Operator> g;
  for (const Operator& e : f) {
    if (e.rows() != u.cols() || e.cols() != u.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "effective_measurement: element does not act on dom U");
    }
    g.push_back(partial_trace(root * u * e * u.adjoint() * root, dim_tilde, k, Subsystem::A));
  }
  return g;
}

/// For an isometry V : C^d -> C^{d'}, a map U : C^{d'} -> C^d (x) C^k with
/// U V |i> = |i>|0>, so that sigma = |0><0| recovers V^* F V.
inline Operator factorizing_isometry(const Operator& v, Eigen::Index& k_out) {
  const Eigen::Index d = v.cols();
  const Eigen::Index dp = v.rows();
  const Eigen::Index k = (dp + d - 1) / d;
  k_out = k;
  Operator embed = Operator::Zero(d * k, dp);  // C^{d'} inside C^{dk}
  embed.leftCols(dp) = Operator::Identity(d * k, dp);
  const Operator range = embed * v;  // d*k x d
  // Q (|i>|0>) = range|i>: fill columns i*k with range, the rest orthonormally.
  const Operator completed = complete_to_unitary(range);
  Operator q(d * k, d * k);
  Eigen::Index extra = d;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index t = 0; t < k; ++t) {
      q.col(i * k + t) = t == 0 ? completed.col(i) : completed.col(extra++);
    }
  }
  return q.adjoint() * embed;
}

/// Minimal trine dilation map C^3 -> C^2 (x) C^2: |0> -> |00>, |1> -> |10>, |2> -> |01>.
inline Operator trine_factorization() {
  Operator w = Operator::Zero(4, 3);
  w(0, 0) = 1.0;
  w(2, 1) = 1.0;
  w(1, 2) = 1.0;
  return w;
}

using Word = std::vector<std::pair<std::size_t, std::size_t>>;  // (question, answer)

/// <psi| A_{s1 a1} ... A_{sk ak} (x) B_{t1 b1} ... B_{tl bl} |psi>.
inline cplx higher_order_moment(const Strategy& s, const Word& alice_word, const Word& bob_word) {
  detail::check_structure(s);
  auto product_of = [](const MeasurementSet& set, const Word& word, Eigen::Index dim, const char* who) {
    Operator p = identity(dim);
    for (const auto& [q, a] : word) {
      if (q >= set.size() || a >= set[q].size()) {
        throw Error(ErrorCode::IndexOutOfRange, std::string(who) + " word refers to (" + std::to_string(q) +
                                                    ", " + std::to_string(a) + ")");
      }
      p = p * set[q][a];
    }
    return p;
  };
  return expectation(s, product_of(s.alice, alice_word, s.dim_a, "alice"),
                     product_of(s.bob, bob_word, s.dim_b, "bob"));
}

/// ((1 (x) V)|Phi+>, {Z, X}, minimal dilation of Bob's families). Variant 2
/// moves the defect 1 - VV^* of Bob's question `moved` to its other outcome.
inline Strategy moment_strategy(int variant, std::size_t moved = 1) {
  const NaimarkDilation d = minimal_trine_dilation();
  Strategy s;
  s.dim_a = 2;
  s.dim_b = 3;
  s.state = to_vector(to_matrix(ops::phi_plus(), 2, 2) * d.isometry.transpose());
  s.alice = ops::chsh_alice();
  s.bob = d.pvms;
  if (variant == 2) {
    if (moved > 1) throw Error(ErrorCode::IndexOutOfRange, "only binary questions can be re-dilated");
    const Operator& v = d.isometry;
    const Operator defect = identity(3) - v * v.adjoint();
    const Povm base = ops::chsh_bob()[moved];
    // The minimal dilation carries the defect on outcome 0 for H and 1 for G.
    const std::size_t target = moved == 0 ? 1 : 0;
    Povm f;
    for (std::size_t j = 0; j < 2; ++j) {
      Operator p = v * base[j] * v.adjoint();
      if (j == target) p += defect;
      f.push_back(std::move(p));
    }
    s.bob[moved] = std::move(f);
  } else if (variant != 1) {
    throw Error(ErrorCode::IndexOutOfRange, "moment strategy variant must be 1 or 2");
  }
  return s;
}

struct MomentSeparation {
  double m1 = 0.0;  // S1 with word M'0 G'+ M'0
  double m2 = 0.0;  // S2 with the G family re-dilated
  double h1 = 0.0;  // same construction through the H family
  double h2 = 0.0;
};

inline MomentSeparation moment_separation() {
  MomentSeparation m;
  const Word alice{};
  // Bob question 1 is {G-, G+}; G+ is outcome 1. Question 0 is {H+, H-}.
  const Word through_g{{2, 0}, {1, 1}, {2, 0}};
  const Word through_h{{2, 0}, {0, 0}, {2, 0}};
  m.m1 = higher_order_moment(moment_strategy(1), alice, through_g).real();
  m.m2 = higher_order_moment(moment_strategy(2, 1), alice, through_g).real();
  m.h1 = higher_order_moment(moment_strategy(1), alice, through_h).real();
  m.h2 = higher_order_moment(moment_strategy(2, 0), alice, through_h).real();
  return m;
}

struct SeesawResult {
  Vector state;
  double omega = 0.0;
};

/// Top eigenvector of W for the measurements of `s` (its state is ignored).
inline SeesawResult seesaw_state(const NonlocalGame& g, const Strategy& measurements) {
  Strategy s = measurements;
  s.state = Vector(Vector::Zero(s.dim_a * s.dim_b));
  const Operator w = game_operator(g, s);
  const SpectralData spec = hermitian_eig(w);
  return {spec.eigenvectors.col(0), spec.eigenvalues(0)};
}

struct PerturbOptions {
  bool state = true;
  bool measurements = true;
};

namespace detail {

inline Povm reproject(const Povm& family) {
  const Eigen::Index d = family.front().rows();
  Povm clipped;
  Operator total = Operator::Zero(d, d);
  for (const Operator& e : family) {
    clipped.push_back(spectral_map(0.5 * (e + e.adjoint()), [](double x) { return std::max(x, 0.0); }));
    total += clipped.back();
  }
  if (min_eigenvalue(total) <= 1e-12) {
    // Every element vanished on some direction; spread a little identity.
    const double pad = 1e-6 / static_cast<double>(family.size());
    for (Operator& e : clipped) e += pad * identity(d);
    total += 1e-6 * identity(d);
  }
  const Operator t = psd_inv_sqrt(total);
  Povm out;
  for (const Operator& e : clipped) {
    const Operator x = t * e * t;
    out.push_back(0.5 * (x + x.adjoint()));
  }
  return out;
}

}  // namespace detail

/// State: normalize((1 - m) psi + m r) for a seeded random r (mixed states
/// blend with a random density). Elements: E + m H, clipped to PSD and
/// renormalized by T^{-1/2} E T^{-1/2} with T the family sum.
inline Strategy perturb_strategy(const Strategy& s, double magnitude, std::uint64_t seed,
                                 PerturbOptions options = {}) {
  if (magnitude < 0.0 || magnitude > 1.0) {
    throw Error(ErrorCode::InvalidStrategy, "perturbation magnitude must lie in [0, 1]");
  }
  if (magnitude == 0.0) return s;
  std::mt19937_64 gen(seed);
  Strategy out = s;
  const Eigen::Index n = s.dim_a * s.dim_b;
  if (options.state) {
    if (s.is_pure()) {
      const Vector r = random::state(n, gen);
      Vector v = (1.0 - magnitude) * s.pure_state() + magnitude * r;
      if (v.norm() < 1e-12) v = r;
      out.state = Vector(v / v.norm());
    } else {
      const Operator r = random::density(n, n, gen);
      out.state = Operator((1.0 - magnitude) * std::get<Operator>(s.state) + magnitude * r);
    }
  }
  if (options.measurements) {
    auto perturb = [&](MeasurementSet& set) {
      for (Povm& f : set) {
        Povm moved;
        for (const Operator& e : f) {
          Operator h = random::hermitian(e.rows(), gen);
          h /= h.norm();
          moved.push_back(e + magnitude * h);
        }
        f = detail::reproject(moved);
      }
    };
    perturb(out.alice);
    perturb(out.bob);
  }
  return out;
}

struct RobustnessRow {
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index aux_dim = 1;
  double delta = 0.0;    // lambda0 - <phi|W|phi>
  double epsilon = 0.0;  // min_aux ||phi - psi~ (x) aux||
  double bound = 0.0;    // sqrt(2 delta / gap)
};

/// Perturbs the canonical CHSH state (optionally tensored with a random
/// ancilla of dimension aux_dim) and measures distance against the
/// eigengap bound. Measurements stay canonical.
inline RobustnessRow robustness_point(double magnitude, std::uint64_t seed, Eigen::Index aux_dim = 1) {
  const Strategy canon = canonical_chsh();
  const Operator w = game_operator(chsh_game(), canon);
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  const Vector alpha = aux_dim == 1 ? Vector(Vector::Ones(1)) : random::state(aux_dim, gen);
  Strategy extended;
  extended.dim_a = 4 * aux_dim;
  extended.dim_b = 1;
  extended.state = kron(canon.pure_state(), alpha);
  const Strategy moved = perturb_strategy(extended, magnitude, seed, {true, false});
  const EigengapReport rep = eigengap_analysis(w, canon.pure_state(), moved.pure_state(), 0.0);
  RobustnessRow row;
  row.magnitude = magnitude;
  row.seed = seed;
  row.aux_dim = aux_dim;
  row.delta = std::max(rep.delta, 0.0);
  row.epsilon = rep.state_bound;
  row.bound = std::sqrt(2.0 * row.delta / rep.gap);
  return row;
}

inline std::vector<RobustnessRow> robustness_sweep(const std::vector<double>& magnitudes, std::uint64_t seed,
                                                   std::size_t per_magnitude = 1) {
  std::vector<RobustnessRow> rows(magnitudes.size() * per_magnitude);
  parallel_for(rows.size(), [&](std::size_t i) {
    const std::size_t k = i % per_magnitude;
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    rows[i] = robustness_point(magnitudes[i / per_magnitude], s, static_cast<Eigen::Index>(1 + k % 3));
  });
  return rows;
}

}  // namespace selftest::lab
