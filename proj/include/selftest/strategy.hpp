#pragma once

// Games, strategies and the statistics they generate.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "selftest/tensor.hpp"

namespace selftest {

using Povm = std::vector<Operator>;
using MeasurementSet = std::vector<Povm>;  // indexed by question

/// Two-player game: question distribution `pi` over S x T and a 0/1
/// predicate indexed [s][t][a][b]. Questions and answers are 0-based.
struct NonlocalGame {
  std::size_t num_s = 0;
  std::size_t num_t = 0;
  std::size_t num_a = 0;
  std::size_t num_b = 0;
  Eigen::MatrixXd pi;
  std::vector<std::uint8_t> predicate;

  std::size_t index(std::size_t a, std::size_t b, std::size_t s, std::size_t t) const {
    return ((s * num_t + t) * num_a + a) * num_b + b;
  }
  bool wins(std::size_t a, std::size_t b, std::size_t s, std::size_t t) const {
    return predicate[index(a, b, s, t)] != 0;
  }

  void validate() const {
    if (pi.rows() != static_cast<Eigen::Index>(num_s) ||
        pi.cols() != static_cast<Eigen::Index>(num_t)) {
      throw Error(ErrorCode::IncompatibleGame, "pi must be |S| x |T|");
    }
    if (predicate.size() != num_s * num_t * num_a * num_b) {
      throw Error(ErrorCode::IncompatibleGame, "predicate must have |S||T||A||B| entries");
    }
    if ((pi.array() < 0.0).any()) throw Error(ErrorCode::IncompatibleGame, "pi has negative entries");
    if (std::abs(pi.sum() - 1.0) > tol::kExact) {
      throw Error(ErrorCode::IncompatibleGame, "pi does not sum to 1");
    }
  }

  static NonlocalGame make(Eigen::MatrixXd pi, std::size_t num_a, std::size_t num_b,
                           const std::function<bool(std::size_t, std::size_t, std::size_t,
                                                    std::size_t)>& rule) {
    NonlocalGame g;
    g.num_s = static_cast<std::size_t>(pi.rows());
    g.num_t = static_cast<std::size_t>(pi.cols());
    g.num_a = num_a;
    g.num_b = num_b;
    g.pi = std::move(pi);
    g.predicate.assign(g.num_s * g.num_t * num_a * num_b, 0);
    for (std::size_t s = 0; s < g.num_s; ++s)
      for (std::size_t t = 0; t < g.num_t; ++t)
        for (std::size_t a = 0; a < num_a; ++a)
          for (std::size_t b = 0; b < num_b; ++b) g.predicate[g.index(a, b, s, t)] = rule(a, b, s, t);
    g.validate();
    return g;
  }
};

namespace games {

/// CHSH: uniform binary questions, win iff a xor b == s and t.
inline NonlocalGame chsh() {
  return NonlocalGame::make(Eigen::MatrixXd::Constant(2, 2, 0.25), 2, 2,
                            [](auto a, auto b, auto s, auto t) { return (a ^ b) == (s & t); });
}

/// Uniform questions and a predicate that is identically `value`.
inline NonlocalGame constant(bool value, std::size_t num_s, std::size_t num_t, std::size_t num_a,
                             std::size_t num_b) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(num_s),
                                                 static_cast<Eigen::Index>(num_t),
                                                 1.0 / static_cast<double>(num_s * num_t));
  return NonlocalGame::make(std::move(pi), num_a, num_b, [value](auto...) { return value; });
}

}  // namespace games

struct Strategy {
  Eigen::Index dim_a = 0;
  Eigen::Index dim_b = 0;
  std::variant<Vector, Operator> state;  // pure vector or density operator
  MeasurementSet alice;
  MeasurementSet bob;

  bool is_pure() const { return std::holds_alternative<Vector>(state); }

  const Vector& pure_state() const {
    if (!is_pure()) {
      throw Error(ErrorCode::MixedStateUnsupported, "operation requires a pure state");
    }
    return std::get<Vector>(state);
  }

  Operator density() const {
    if (is_pure()) return outer(std::get<Vector>(state));
    return std::get<Operator>(state);
  }

  Eigen::Index state_dim() const {
    return is_pure() ? std::get<Vector>(state).size() : std::get<Operator>(state).rows();
  }
};

inline double purity(const Operator& rho) { return (rho * rho).trace().real(); }

inline bool is_effectively_pure(const Operator& rho) { return purity(rho) >= 1.0 - tol::kSemantic; }

/// Replaces a rank-one density operator by its vector; other states pass through.
inline Strategy canonicalize_state(Strategy s) {
  if (!s.is_pure() && is_effectively_pure(std::get<Operator>(s.state))) {
    const SpectralData spec = hermitian_eig(std::get<Operator>(s.state));
    s.state = Vector(spec.eigenvectors.col(0));
  }
  return s;
}

struct FamilyReport {
  std::size_t question = 0;
  std::size_t outcomes = 0;
  double completeness_defect = 0.0;  // ||sum E - 1||_F
  double min_eigenvalue = 0.0;       // over all elements
  double hermiticity_defect = 0.0;   // max over elements
};

struct ValidationReport {
  bool valid = true;
  std::vector<FamilyReport> alice;
  std::vector<FamilyReport> bob;
  double state_norm_defect = 0.0;  // | ||psi|| - 1 | or |tr rho - 1|
  double state_min_eigenvalue = 0.0;
  double state_hermiticity_defect = 0.0;
  std::vector<std::string> issues;
};

namespace detail {

inline void check_dims(const MeasurementSet& set, Eigen::Index dim, const char* who) {
  for (std::size_t q = 0; q < set.size(); ++q) {
    for (std::size_t k = 0; k < set[q].size(); ++k) {
      const Operator& e = set[q][k];
      if (e.rows() != dim || e.cols() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(who) + " question " + std::to_string(q) + " element " +
                        std::to_string(k) + " is " + std::to_string(e.rows()) + "x" +
                        std::to_string(e.cols()) + ", expected " + std::to_string(dim));
      }
    }
  }
}

inline FamilyReport inspect_family(const Povm& family, std::size_t question) {
  FamilyReport r;
  r.question = question;
  r.outcomes = family.size();
  if (family.empty()) {
    r.completeness_defect = 1.0;
    return r;
  }
  Operator sum = Operator::Zero(family.front().rows(), family.front().cols());
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Operator& e : family) {
    sum += e;
    r.hermiticity_defect = std::max(r.hermiticity_defect, hermiticity_defect(e));
    const Operator sym = 0.5 * (e + e.adjoint());
    r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(sym));
  }
  r.completeness_defect = (sum - identity(sum.rows())).norm();
  return r;
}

inline void check_structure(const Strategy& s) {
  if (s.dim_a <= 0 || s.dim_b <= 0) {
    throw Error(ErrorCode::DimensionMismatch, "local dimensions must be positive");
  }
  const Eigen::Index n = s.dim_a * s.dim_b;
  if (s.is_pure()) {
    if (std::get<Vector>(s.state).size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "state vector size does not match dA*dB");
    }
  } else {
    const Operator& rho = std::get<Operator>(s.state);
    if (rho.rows() != n || rho.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "density operator does not match dA*dB");
    }
  }
  check_dims(s.alice, s.dim_a, "alice");
  check_dims(s.bob, s.dim_b, "bob");
}

}  // namespace detail

inline ValidationReport validate_strategy(const Strategy& s, double tolerance = tol::kSemantic) {
  detail::check_structure(s);
  ValidationReport report;
  auto scan = [&](const MeasurementSet& set, std::vector<FamilyReport>& out, const char* who) {
    for (std::size_t q = 0; q < set.size(); ++q) {
      FamilyReport r = detail::inspect_family(set[q], q);
      const std::string tag = std::string(who) + " question " + std::to_string(q);
      if (set[q].empty()) report.issues.push_back(tag + ": empty family");
      if (r.completeness_defect > tolerance)
        report.issues.push_back(tag + ": elements do not sum to identity (defect " +
                                std::to_string(r.completeness_defect) + ")");
      if (r.min_eigenvalue < -tolerance)
        report.issues.push_back(tag + ": element not PSD (min eigenvalue " +
                                std::to_string(r.min_eigenvalue) + ")");
      if (r.hermiticity_defect > tolerance)
        report.issues.push_back(tag + ": element not hermitian");
      out.push_back(r);
    }
  };
  scan(s.alice, report.alice, "alice");
  scan(s.bob, report.bob, "bob");

  if (s.is_pure()) {
    report.state_norm_defect = std::abs(std::get<Vector>(s.state).norm() - 1.0);
    report.state_min_eigenvalue = 0.0;
  } else {
    const Operator& rho = std::get<Operator>(s.state);
    report.state_norm_defect = std::abs(rho.trace().real() - 1.0);
    report.state_hermiticity_defect = hermiticity_defect(rho);
    report.state_min_eigenvalue = min_eigenvalue(0.5 * (rho + rho.adjoint()));
    if (report.state_hermiticity_defect > tolerance) report.issues.push_back("state: not hermitian");
    if (report.state_min_eigenvalue < -tolerance) report.issues.push_back("state: not PSD");
  }
  if (report.state_norm_defect > tolerance) report.issues.push_back("state: not normalized");
  if (s.alice.empty() || s.bob.empty()) report.issues.push_back("strategy has no questions");
  report.valid = report.issues.empty();
  return report;
}

inline void require_valid(const Strategy& s, double tolerance = tol::kSemantic) {
  const ValidationReport r = validate_strategy(s, tolerance);
  if (!r.valid) throw Error(ErrorCode::InvalidStrategy, r.issues.front());
}

namespace detail {

inline void check_game_fit(const NonlocalGame& g, const Strategy& s) {
  g.validate();
  if (s.alice.size() != g.num_s || s.bob.size() != g.num_t) {
    throw Error(ErrorCode::IncompatibleGame, "question counts differ between game and strategy");
  }
  for (const Povm& f : s.alice)
    if (f.size() != g.num_a) throw Error(ErrorCode::IncompatibleGame, "alice answer count mismatch");
  for (const Povm& f : s.bob)
    if (f.size() != g.num_b) throw Error(ErrorCode::IncompatibleGame, "bob answer count mismatch");
}

}  // namespace detail

/// W = sum pi(s,t) V(a,b|s,t) A_sa (x) B_tb.
inline Operator game_operator(const NonlocalGame& g, const Strategy& s) {
  detail::check_structure(s);
  detail::check_game_fit(g, s);
  const Eigen::Index n = s.dim_a * s.dim_b;
  Operator w = Operator::Zero(n, n);
  for (std::size_t q = 0; q < g.num_s; ++q) {
    for (std::size_t t = 0; t < g.num_t; ++t) {
      const double weight = g.pi(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(t));
      if (weight == 0.0) continue;
      for (std::size_t a = 0; a < g.num_a; ++a) {
        Operator bob_sum = Operator::Zero(s.dim_b, s.dim_b);
        bool any = false;
        for (std::size_t b = 0; b < g.num_b; ++b) {
          if (g.wins(a, b, q, t)) {
            bob_sum += s.bob[t][b];
            any = true;
          }
        }
        if (any) w += weight * kron(s.alice[q][a], bob_sum);
      }
    }
  }
  return w;
}

/// Table p(a,b|s,t), stored per (s,t) as an |A_s| x |B_t| matrix so that
/// families with different outcome counts are representable.
struct Correlation {
  std::vector<std::vector<Eigen::MatrixXd>> table;  // [s][t](a, b)

  std::size_t num_s() const { return table.size(); }
  std::size_t num_t() const { return table.empty() ? 0 : table.front().size(); }
  double operator()(std::size_t a, std::size_t b, std::size_t s, std::size_t t) const {
    return table[s][t](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }

  double max_abs_difference(const Correlation& other) const {
    if (other.num_s() != num_s() || other.num_t() != num_t()) {
      throw Error(ErrorCode::DimensionMismatch, "correlation shapes differ");
    }
    double worst = 0.0;
    for (std::size_t s = 0; s < num_s(); ++s) {
      for (std::size_t t = 0; t < num_t(); ++t) {
        if (table[s][t].rows() != other.table[s][t].rows() ||
            table[s][t].cols() != other.table[s][t].cols()) {
          throw Error(ErrorCode::DimensionMismatch, "correlation shapes differ");
        }
        worst = std::max(worst, (table[s][t] - other.table[s][t]).cwiseAbs().maxCoeff());
      }
    }
    return worst;
  }

  /// Entries within [-1e-12, 1 + 1e-12] and each block summing to one.
  bool well_formed(double sum_tol = tol::kSemantic) const {
    for (const auto& row : table) {
      for (const Eigen::MatrixXd& block : row) {
        if (block.minCoeff() < -tol::kExact || block.maxCoeff() > 1.0 + tol::kExact) return false;
        if (std::abs(block.sum() - 1.0) > sum_tol) return false;
      }
    }
    return true;
  }
};

inline Correlation correlation_of(const Strategy& s) {
  detail::check_structure(s);
  require_valid(s);
  Correlation c;
  c.table.resize(s.alice.size());
  if (s.is_pure()) {
    const Operator psi = to_matrix(std::get<Vector>(s.state), s.dim_a, s.dim_b);
    for (std::size_t q = 0; q < s.alice.size(); ++q) {
      c.table[q].resize(s.bob.size());
      // <psi|A (x) B|psi> = sum_kl (Psi^* A Psi)_kl B_kl
      std::vector<Operator> reduced;
      reduced.reserve(s.alice[q].size());
      for (const Operator& a : s.alice[q]) reduced.push_back(psi.adjoint() * a * psi);
      for (std::size_t t = 0; t < s.bob.size(); ++t) {
        Eigen::MatrixXd block(static_cast<Eigen::Index>(s.alice[q].size()),
                              static_cast<Eigen::Index>(s.bob[t].size()));
        for (std::size_t a = 0; a < reduced.size(); ++a) {
          for (std::size_t b = 0; b < s.bob[t].size(); ++b) {
            block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                reduced[a].cwiseProduct(s.bob[t][b]).sum().real();
          }
        }
        c.table[q][t] = std::move(block);
      }
    }
    return c;
  }
  const Operator& rho = std::get<Operator>(s.state);
  const Operator id_b = identity(s.dim_b);
  for (std::size_t q = 0; q < s.alice.size(); ++q) {
    c.table[q].resize(s.bob.size());
    std::vector<Operator> reduced;  // tr_A[(A (x) 1) rho]
    for (const Operator& a : s.alice[q]) {
      reduced.push_back(partial_trace(kron(a, id_b) * rho, s.dim_a, s.dim_b, Subsystem::B));
    }
    for (std::size_t t = 0; t < s.bob.size(); ++t) {
      Eigen::MatrixXd block(static_cast<Eigen::Index>(s.alice[q].size()),
                            static_cast<Eigen::Index>(s.bob[t].size()));
      for (std::size_t a = 0; a < reduced.size(); ++a) {
        for (std::size_t b = 0; b < s.bob[t].size(); ++b) {
          block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              (s.bob[t][b] * reduced[a]).trace().real();
        }
      }
      c.table[q][t] = std::move(block);
    }
  }
  return c;
}

/// omega(S, G) = sum pi V p, which equals tr(W rho).
inline double win_probability(const NonlocalGame& g, const Strategy& s) {
  detail::check_game_fit(g, s);
  const Correlation c = correlation_of(s);
  double omega = 0.0;
  for (std::size_t q = 0; q < g.num_s; ++q)
    for (std::size_t t = 0; t < g.num_t; ++t)
      for (std::size_t a = 0; a < g.num_a; ++a)
        for (std::size_t b = 0; b < g.num_b; ++b)
          if (g.wins(a, b, q, t))
            omega += g.pi(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(t)) * c(a, b, q, t);
  return omega;
}

/// delta = omega_q - omega(S, G), returned as-is even when negative.
inline double optimality_gap(const NonlocalGame& g, const Strategy& s, double omega_q) {
  return omega_q - win_probability(g, s);
}

// ---------------------------------------------------------------------------
// Structural transformations used throughout the dilation machinery.

/// Attaches |aux> on C^dA' (x) C^dB' and extends every element by identity.
/// The result's local spaces are ordered A (x) A' and B (x) B'.
inline Strategy attach_ancilla(const Strategy& s, const Vector& aux, Eigen::Index dim_a_aux,
                               Eigen::Index dim_b_aux) {
  if (aux.size() != dim_a_aux * dim_b_aux) {
    throw Error(ErrorCode::DimensionMismatch, "ancilla size does not match its local dims");
  }
  const Vector& psi = s.pure_state();
  const std::array<Eigen::Index, 4> dims{s.dim_a, s.dim_b, dim_a_aux, dim_b_aux};
  const std::array<std::size_t, 4> perm{0, 2, 1, 3};
  Strategy out;
  out.dim_a = s.dim_a * dim_a_aux;
  out.dim_b = s.dim_b * dim_b_aux;
  out.state = permute_factors(kron(psi, aux), dims, perm);
  const Operator ia = identity(dim_a_aux);
  const Operator ib = identity(dim_b_aux);
  for (const Povm& f : s.alice) {
    Povm g;
    for (const Operator& e : f) g.push_back(kron(e, ia));
    out.alice.push_back(std::move(g));
  }
  for (const Povm& f : s.bob) {
    Povm g;
    for (const Operator& e : f) g.push_back(kron(e, ib));
    out.bob.push_back(std::move(g));
  }
  return out;
}

inline Strategy attach_product_ancilla(const Strategy& s, const Vector& alpha, const Vector& beta) {
  return attach_ancilla(s, kron(alpha, beta), alpha.size(), beta.size());
}

/// State (U (x) V)psi, elements U E U^*. U and V must be unitary.
inline Strategy conjugate_local(const Strategy& s, const Operator& u, const Operator& v) {
  if (u.rows() != s.dim_a || u.cols() != s.dim_a || v.rows() != s.dim_b || v.cols() != s.dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "local unitaries do not match strategy dims");
  }
  Strategy out = s;
  if (s.is_pure()) {
    out.state = to_vector(u * to_matrix(s.pure_state(), s.dim_a, s.dim_b) * v.transpose());
  } else {
    const Operator uv = kron(u, v);
    out.state = Operator(uv * std::get<Operator>(s.state) * uv.adjoint());
  }
  for (Povm& f : out.alice)
    for (Operator& e : f) e = u * e * u.adjoint();
  for (Povm& f : out.bob)
    for (Operator& e : f) e = v * e * v.adjoint();
  return out;
}

}  // namespace selftest
