#pragma once

// Fixed qubit operators used by the worked examples.

#include "selftest/strategy.hpp"

namespace selftest::ops {

inline Operator pauli_x() {
  Operator m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Operator pauli_z() {
  Operator m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// (X + Z)/sqrt 2
inline Operator obs_h() { return (pauli_x() + pauli_z()) / std::sqrt(2.0); }

/// (X - Z)/sqrt 2
inline Operator obs_g() { return (pauli_x() - pauli_z()) / std::sqrt(2.0); }

/// {P+, P-} for an observable with spectrum {+1, -1}.
inline Povm pm_projectors(const Operator& obs) {
  const Operator id = identity(obs.rows());
  return {0.5 * (id + obs), 0.5 * (id - obs)};
}

/// A = A+ - A- for a binary family.
inline Operator observable(const Povm& pair) {
  if (pair.size() != 2) throw Error(ErrorCode::DimensionMismatch, "observable needs a binary family");
  return pair[0] - pair[1];
}

/// M0 = (1 + Z)/3, M1,2 = (1 - Z/2 +- (sqrt3/2) X)/3.
inline Povm trine() {
  const Operator id = identity(2);
  const double r3 = std::sqrt(3.0);
  return {(id + pauli_z()) / 3.0, (id - 0.5 * pauli_z() + 0.5 * r3 * pauli_x()) / 3.0,
          (id - 0.5 * pauli_z() - 0.5 * r3 * pauli_x()) / 3.0};
}

/// Alice question 0 measures Z, question 1 measures X.
inline MeasurementSet chsh_alice() { return {pm_projectors(pauli_z()), pm_projectors(pauli_x())}; }

/// Bob question 0 measures H. Question 1 measures the observable -G, i.e.
/// the family {G-, G+}; with this labelling the CHSH predicate and the
/// beta_0 expression A0B0 + A0B1 + A1B0 - A1B1 peak together.
inline MeasurementSet chsh_bob() { return {pm_projectors(obs_h()), pm_projectors(-obs_g())}; }

inline Vector phi_plus() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

inline Vector basis(Eigen::Index dim, Eigen::Index k) {
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return v;
}

}  // namespace selftest::ops
