#pragma once

// Seeded random instances. Every generator takes the engine by reference so
// callers control reproducibility.

#include <random>

#include "selftest/strategy.hpp"

namespace selftest::random {

using Engine = std::mt19937_64;

inline Operator gaussian(Eigen::Index rows, Eigen::Index cols, Engine& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Operator m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = n(gen);
      const double im = n(gen);
      m(i, j) = cplx(re, im);
    }
  return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
inline Operator unitary(Eigen::Index n, Engine& gen) {
  const Operator g = gaussian(n, n, gen);
  Eigen::HouseholderQR<Operator> qr(g);
  Operator q = qr.householderQ();
  const Operator r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

inline Operator isometry(Eigen::Index rows, Eigen::Index cols, Engine& gen) {
  return unitary(rows, gen).leftCols(cols);
}

inline Operator hermitian(Eigen::Index n, Engine& gen) {
  const Operator g = gaussian(n, n, gen);
  return 0.5 * (g + g.adjoint());
}

inline Vector state(Eigen::Index n, Engine& gen) {
  Vector v = gaussian(n, 1, gen).col(0);
  return v / v.norm();
}

/// Pure state on C^dA (x) C^dB with Schmidt rank exactly `rank`.
inline Vector state_with_rank(Eigen::Index dim_a, Eigen::Index dim_b, Eigen::Index rank,
                              Engine& gen) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const Operator left = isometry(dim_a, rank, gen);
  const Operator right = isometry(dim_b, rank, gen);
  RealVector coeff(rank);
  for (Eigen::Index i = 0; i < rank; ++i) coeff(i) = u(gen);
  coeff /= coeff.norm();
  const Operator psi = left * coeff.cast<cplx>().asDiagonal() * right.transpose();
  return to_vector(psi);
}

inline Operator density(Eigen::Index n, Eigen::Index rank, Engine& gen) {
  const Operator g = gaussian(n, rank, gen);
  Operator rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

/// Generic POVM with m outcomes: normalized Wishart elements.
inline Povm povm(Eigen::Index dim, std::size_t outcomes, Engine& gen) {
  std::uniform_int_distribution<Eigen::Index> rank_of(1, dim);
  std::vector<Eigen::Index> ranks(outcomes);
  Eigen::Index covered = 0;
  for (Eigen::Index& r : ranks) covered += (r = rank_of(gen));
  // the ranks must cover C^dim or the normalization leaves a hole
  for (std::size_t j = 0; covered < dim; j = (j + 1) % outcomes) {
    if (ranks[j] < dim) {
      ++ranks[j];
      ++covered;
    }
  }
  std::vector<Operator> raw;
  Operator total = Operator::Zero(dim, dim);
  for (std::size_t j = 0; j < outcomes; ++j) {
    const Operator g = gaussian(dim, ranks[j], gen);
    raw.push_back(g * g.adjoint());
    total += raw.back();
  }
  const Operator t = psd_inv_sqrt(total);
  Povm out;
  for (const Operator& e : raw) {
    const Operator x = t * e * t;
    out.push_back(0.5 * (x + x.adjoint()));
  }
  return out;
}

/// Random PVM: columns of a Haar unitary dealt to outcomes; when
/// outcomes > dim the surplus outcomes get the zero projector.
inline Povm pvm(Eigen::Index dim, std::size_t outcomes, Engine& gen) {
  const Operator u = unitary(dim, gen);
  std::vector<std::size_t> owner(static_cast<std::size_t>(dim));
  std::uniform_int_distribution<std::size_t> pick(0, outcomes - 1);
  for (std::size_t i = 0; i < owner.size(); ++i) owner[i] = i < outcomes ? i : pick(gen);
  Povm out(outcomes, Operator::Zero(dim, dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    out[owner[static_cast<std::size_t>(i)]] += u.col(i) * u.col(i).adjoint();
  }
  return out;
}

struct StrategyShape {
  Eigen::Index dim_a = 2;
  Eigen::Index dim_b = 2;
  std::size_t questions_a = 2;
  std::size_t questions_b = 2;
  std::size_t outcomes = 2;
  Eigen::Index rank = -1;  // Schmidt rank of the state, -1 = min(dA, dB)
  bool projective = false;
};

inline Strategy strategy(const StrategyShape& shape, Engine& gen) {
  Strategy s;
  s.dim_a = shape.dim_a;
  s.dim_b = shape.dim_b;
  const Eigen::Index rank = shape.rank < 0 ? std::min(shape.dim_a, shape.dim_b) : shape.rank;
  s.state = state_with_rank(shape.dim_a, shape.dim_b, rank, gen);
  auto family = [&](Eigen::Index d) {
    return shape.projective ? pvm(d, shape.outcomes, gen) : povm(d, shape.outcomes, gen);
  };
  for (std::size_t q = 0; q < shape.questions_a; ++q) s.alice.push_back(family(shape.dim_a));
  for (std::size_t q = 0; q < shape.questions_b; ++q) s.bob.push_back(family(shape.dim_b));
  return s;
}

}  // namespace selftest::random
