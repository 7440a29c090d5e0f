#pragma once

// Naimark dilations of POVM families and of strategies.
//
// Single family: H -> H (x) C^m, phi |-> sum_j sqrt(R_j) phi (x) e_j with
// P_j = 1 (x) e_j e_j^*. Further families are dilated one at a time on the
// current dilation space; the defect 1 - VV^* is always absorbed into
// outcome 0, both for the new family and for the re-embedded old ones.

#include "selftest/operators.hpp"

namespace selftest {

struct NaimarkDilation {
  Eigen::Index dim_in = 0;
  Eigen::Index dim_out = 0;
  Operator isometry;             // dim_out x dim_in
  std::vector<Povm> pvms;        // per family
};

namespace detail {

inline void require_povm(const Povm& f, double tolerance = tol::kSemantic) {
  if (f.empty()) throw Error(ErrorCode::InvalidPovm, "empty POVM");
  const FamilyReport r = inspect_family(f, 0);
  for (const Operator& e : f) {
    if (e.rows() != f.front().rows() || e.cols() != f.front().rows()) {
      throw Error(ErrorCode::InvalidPovm, "POVM elements differ in shape");
    }
  }
  if (r.completeness_defect > tolerance || r.min_eigenvalue < -tolerance ||
      r.hermiticity_defect > tolerance) {
    throw Error(ErrorCode::InvalidPovm, "not a POVM (completeness defect " +
                                            std::to_string(r.completeness_defect) +
                                            ", min eigenvalue " + std::to_string(r.min_eigenvalue) + ")");
  }
}

}  // namespace detail

inline NaimarkDilation naimark_single(const Povm& povm) {
  detail::require_povm(povm);
  const Eigen::Index d = povm.front().rows();
  const auto m = static_cast<Eigen::Index>(povm.size());
  NaimarkDilation out;
  out.dim_in = d;
  out.dim_out = d * m;
  out.isometry = Operator::Zero(d * m, d);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Operator root = psd_sqrt(povm[static_cast<std::size_t>(j)]);
    for (Eigen::Index x = 0; x < d; ++x) out.isometry.row(x * m + j) = root.row(x);
  }
  Povm proj;
  for (Eigen::Index j = 0; j < m; ++j) {
    Operator ej = Operator::Zero(m, m);
    ej(j, j) = 1.0;
    proj.push_back(kron(identity(d), ej));
  }
  out.pvms.push_back(std::move(proj));
  return out;
}

inline NaimarkDilation naimark_family(const std::vector<Povm>& families) {
  if (families.empty()) throw Error(ErrorCode::InvalidPovm, "naimark_family: no families");
  const Eigen::Index d = families.front().empty() ? 0 : families.front().front().rows();
  for (const Povm& f : families) {
    detail::require_povm(f);
    if (f.front().rows() != d) {
      throw Error(ErrorCode::DimensionMismatch, "naimark_family: families act on different spaces");
    }
  }
  NaimarkDilation acc = naimark_single(families.front());
  for (std::size_t i = 1; i < families.size(); ++i) {
    const Operator& v1 = acc.isometry;
    const Operator defect = identity(acc.dim_out) - v1 * v1.adjoint();
    Povm lifted;
    for (std::size_t j = 0; j < families[i].size(); ++j) {
      Operator r = v1 * families[i][j] * v1.adjoint();
      if (j == 0) r += defect;
      lifted.push_back(0.5 * (r + r.adjoint()));
    }
    NaimarkDilation step = naimark_single(lifted);
    const Operator& v2 = step.isometry;
    const Operator defect2 = identity(step.dim_out) - v2 * v2.adjoint();
    std::vector<Povm> pvms;
    for (const Povm& old : acc.pvms) {
      Povm moved;
      for (std::size_t j = 0; j < old.size(); ++j) {
        Operator p = v2 * old[j] * v2.adjoint();
        if (j == 0) p += defect2;
        moved.push_back(std::move(p));
      }
      pvms.push_back(std::move(moved));
    }
    pvms.push_back(std::move(step.pvms.front()));
    acc.isometry = v2 * v1;
    acc.dim_out = step.dim_out;
    acc.pvms = std::move(pvms);
  }
  return acc;
}

struct DilationReport {
  bool pass = true;
  double isometry_defect = 0.0;
  std::vector<std::vector<double>> element_defect;  // ||R - V^* P V||_F
  std::vector<std::vector<double>> idempotency;     // ||P^2 - P||_F
  std::vector<std::vector<double>> hermiticity;     // ||P - P^*||_F
  std::vector<double> completeness;                 // ||sum P - 1||_F
  double worst = 0.0;
  std::size_t worst_family = 0;
  std::size_t worst_element = 0;
};

inline DilationReport verify_dilation(const std::vector<Povm>& povms, const NaimarkDilation& d,
                                      double tolerance = 1e-10) {
  DilationReport r;
  r.isometry_defect = isometry_defect(d.isometry);
  r.worst = r.isometry_defect;
  if (povms.size() != d.pvms.size()) {
    r.pass = false;
    r.worst = std::numeric_limits<double>::infinity();
    return r;
  }
  auto note = [&](double v, std::size_t i, std::size_t j) {
    if (v > r.worst) {
      r.worst = v;
      r.worst_family = i;
      r.worst_element = j;
    }
  };
  for (std::size_t i = 0; i < povms.size(); ++i) {
    std::vector<double> el, idem, herm;
    if (povms[i].size() != d.pvms[i].size()) {
      r.pass = false;
      r.worst = std::numeric_limits<double>::infinity();
      r.worst_family = i;
      return r;
    }
    Operator sum = Operator::Zero(d.dim_out, d.dim_out);
    for (std::size_t j = 0; j < povms[i].size(); ++j) {
      const Operator& p = d.pvms[i][j];
      sum += p;
      el.push_back((povms[i][j] - d.isometry.adjoint() * p * d.isometry).norm());
      idem.push_back((p * p - p).norm());
      herm.push_back((p - p.adjoint()).norm());
      note(el.back(), i, j);
      note(idem.back(), i, j);
      note(herm.back(), i, j);
    }
    r.completeness.push_back((sum - identity(d.dim_out)).norm());
    note(r.completeness.back(), i, 0);
    r.element_defect.push_back(std::move(el));
    r.idempotency.push_back(std::move(idem));
    r.hermiticity.push_back(std::move(herm));
  }
  r.pass = r.worst <= tolerance;
  return r;
}

struct NaimarkStrategy {
  Strategy strategy;
  Operator v_a;
  Operator v_b;
  NaimarkDilation alice;
  NaimarkDilation bob;
};

/// (V_A (x) V_B)psi with the dilated families of both players.
inline NaimarkStrategy naimark_strategy(const Strategy& s) {
  const Strategy c = canonicalize_state(s);
  detail::check_structure(c);
  const Vector& psi = c.pure_state();
  NaimarkStrategy out;
  out.alice = naimark_family(c.alice);
  out.bob = naimark_family(c.bob);
  out.v_a = out.alice.isometry;
  out.v_b = out.bob.isometry;
  Strategy& t = out.strategy;
  t.dim_a = out.alice.dim_out;
  t.dim_b = out.bob.dim_out;
  t.state = to_vector(out.v_a * to_matrix(psi, c.dim_a, c.dim_b) * out.v_b.transpose());
  t.alice = out.alice.pvms;
  t.bob = out.bob.pvms;
  return out;
}

/// Minimal dilation of Bob's families in the trine strategy, on C^3 with V
/// the canonical embedding of C^2. Families are in Bob's question order:
/// H', then the q1 pair {G'-, G'+}, then M'_j = |e_j><e_j|. The defect
/// 1 - VV^* is absorbed into H'+ and G'+.
inline NaimarkDilation minimal_trine_dilation() {
  NaimarkDilation d;
  d.dim_in = 2;
  d.dim_out = 3;
  d.isometry = Operator::Zero(3, 2);
  d.isometry(0, 0) = 1.0;
  d.isometry(1, 1) = 1.0;
  const Operator& v = d.isometry;
  const Operator defect = identity(3) - v * v.adjoint();

  const MeasurementSet bob = ops::chsh_bob();
  const Povm& h = bob[0];  // {H+, H-}
  const Povm& g = bob[1];  // {G-, G+}
  d.pvms.push_back({Operator(v * h[0] * v.adjoint() + defect), Operator(v * h[1] * v.adjoint())});
  d.pvms.push_back({Operator(v * g[0] * v.adjoint()), Operator(v * g[1] * v.adjoint() + defect)});

  const double r2 = std::sqrt(2.0);
  const double r3 = std::sqrt(3.0);
  const double r6 = std::sqrt(6.0);
  Vector e0(3), e1(3), e2(3);
  e0 << r2 / r3, 0.0, 1.0 / r3;
  e1 << -1.0 / r6, -r3 / r6, r2 / r6;
  e2 << -1.0 / r6, r3 / r6, r2 / r6;
  d.pvms.push_back({outer(e0), outer(e1), outer(e2)});
  return d;
}

}  // namespace selftest
