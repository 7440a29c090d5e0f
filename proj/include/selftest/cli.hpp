#pragma once

// Command dispatch behind tools/selftest_lab. Exit codes: 0 success or
// pass, 1 a check failed, 2 bad input.

#include <iostream>

#include "selftest/io.hpp"

namespace selftest::cli {

enum class Command { Validate, Correlation, Metrics, Restrict, Naimark, CheckDilation, Repro };
enum class Format { Json, Csv };

inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kInputError = 2;

struct RunConfig {
  Command command = Command::Validate;
  std::vector<std::string> inputs;
  std::string game_path;  // optional game for validate/correlation
  std::string target;     // repro target
  double tol = tol::kSemantic;
  std::uint64_t seed = 0;
  Format format = Format::Json;
  std::string out;  // empty = stdout
  std::vector<double> magnitudes{0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  std::size_t per_magnitude = 20;
};

inline std::optional<Command> parse_command(const std::string& name) {
  if (name == "validate") return Command::Validate;
  if (name == "correlation") return Command::Correlation;
  if (name == "metrics") return Command::Metrics;
  if (name == "restrict") return Command::Restrict;
  if (name == "naimark") return Command::Naimark;
  if (name == "check-dilation") return Command::CheckDilation;
  if (name == "repro") return Command::Repro;
  return std::nullopt;
}

namespace detail {

struct Outcome {
  std::string text;
  int code = kOk;
};

inline std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

inline void need_inputs(const RunConfig& c, std::size_t n, const char* usage) {
  if (c.inputs.size() != n) throw Error(ErrorCode::Parse, std::string("usage: ") + usage);
}

inline Strategy load_valid(const std::string& path, double tolerance) {
  Strategy s = io::parse_strategy_file(path);
  const ValidationReport r = validate_strategy(s, tolerance);
  if (!r.valid) {
    std::string msg = path + ": invalid strategy";
    for (const std::string& issue : r.issues) msg += "\n  " + issue;
    throw Error(ErrorCode::InvalidStrategy, msg);
  }
  return s;
}

inline std::optional<NonlocalGame> load_game(const RunConfig& c) {
  if (c.game_path.empty()) return std::nullopt;
  const io::Json j = io::read_json(c.game_path);
  try {
    return io::decode_game(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, c.game_path + ": " + e.what());
  }
}

inline std::string correlation_csv(const Correlation& c) {
  std::string out = "s,t,a,b,p\n";
  for (std::size_t s = 0; s < c.table.size(); ++s)
    for (std::size_t t = 0; t < c.table[s].size(); ++t) {
      const Eigen::MatrixXd& m = c.table[s][t];
      for (Eigen::Index a = 0; a < m.rows(); ++a)
        for (Eigen::Index b = 0; b < m.cols(); ++b) {
          out += std::to_string(s) + "," + std::to_string(t) + "," + std::to_string(a) + "," + std::to_string(b) +
                 "," + io::format_double(m(a, b)) + "\n";
        }
    }
  return out;
}

inline Outcome validate(const RunConfig& c) {
  need_inputs(c, 1, "validate STRATEGY.json");
  const Strategy s = io::parse_strategy_file(c.inputs[0]);
  const ValidationReport r = validate_strategy(s, c.tol);
  io::Json j = io::encode(r);
  if (const auto g = load_game(c); g && r.valid) {
    j["win_probability"] = win_probability(*g, s);
  }
  return {dump(j), r.valid ? kOk : kCheckFailed};
}

inline Outcome correlation(const RunConfig& c) {
  need_inputs(c, 1, "correlation STRATEGY.json");
  const Strategy s = load_valid(c.inputs[0], c.tol);
  const Correlation p = correlation_of(s);
  if (c.format == Format::Csv) return {correlation_csv(p), kOk};
  io::Json j;
  j["correlation"] = io::encode(p);
  if (const auto g = load_game(c)) j["win_probability"] = win_probability(*g, s);
  return {dump(j), kOk};
}

inline Outcome metrics(const RunConfig& c) {
  need_inputs(c, 1, "metrics STRATEGY.json");
  const Strategy s = load_valid(c.inputs[0], c.tol);
  return {dump(io::encode(strategy_metrics(s))), kOk};
}

inline Outcome restrict_cmd(const RunConfig& c) {
  need_inputs(c, 1, "restrict STRATEGY.json");
  const Strategy s = load_valid(c.inputs[0], c.tol);
  const Restriction r = restrict(s);
  io::Json j;
  j["strategy"] = io::encode(r.strategy);
  j["U_A"] = io::encode(r.u_a);
  j["U_B"] = io::encode(r.u_b);
  return {dump(j), kOk};
}

inline Outcome naimark_cmd(const RunConfig& c) {
  need_inputs(c, 1, "naimark STRATEGY.json");
  const Strategy s = load_valid(c.inputs[0], c.tol);
  const NaimarkStrategy n = naimark_strategy(s);
  io::Json j;
  j["strategy"] = io::encode(n.strategy);
  j["V_A"] = io::encode(n.v_a);
  j["V_B"] = io::encode(n.v_b);
  return {dump(j), kOk};
}

inline Outcome check_dilation(const RunConfig& c) {
  need_inputs(c, 3, "check-dilation SOURCE.json TARGET.json WITNESS.json");
  const Strategy src = load_valid(c.inputs[0], c.tol);
  const Strategy dst = load_valid(c.inputs[1], c.tol);
  io::WitnessFile wf;
  {
    const io::Json j = io::read_json(c.inputs[2]);
    try {
      wf = io::decode_witness(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, c.inputs[2] + ": " + e.what());
    }
  }
  if (wf.u_a.rows() % dst.dim_a != 0 || wf.u_b.rows() % dst.dim_b != 0) {
    throw Error(ErrorCode::DimensionMismatch, "witness isometries do not map into the target spaces");
  }
  const Eigen::Index aux_a = wf.aux_dims ? wf.aux_dims->first : wf.u_a.rows() / dst.dim_a;
  const Eigen::Index aux_b = wf.aux_dims ? wf.aux_dims->second : wf.u_b.rows() / dst.dim_b;

  io::Json j;
  double eps = 0.0;
  if (wf.form == "extraction") {
    const ExtractionReport r = extraction_report(src, dst, wf.u_a, wf.u_b);
    eps = r.eps;
    j = io::encode(r);
  } else if (wf.form == "matrix") {
    Operator sigma;
    if (wf.sigma_aux) {
      sigma = *wf.sigma_aux;
    } else if (wf.aux) {
      DilationWitness w = make_witness(wf.u_a, wf.u_b);
      w.aux = *wf.aux;
      w.aux_a = aux_a;
      w.aux_b = aux_b;
      sigma = matrix_form_aux(w);
    } else {
      throw Error(ErrorCode::Parse, c.inputs[2] + ": matrix form needs aux or sigma_aux");
    }
    eps = matrix_form_residual(src, dst, wf.u_a, wf.u_b, sigma);
    j["eps"] = eps;
  } else {
    if (!wf.aux) throw Error(ErrorCode::Parse, c.inputs[2] + ": vector form needs aux");
    DilationWitness w = make_witness(wf.u_a, wf.u_b);
    w.aux = *wf.aux;
    w.aux_a = aux_a;
    w.aux_b = aux_b;
    const ResidualReport r = dilation_residuals(src, dst, w, kPurificationProbes, c.seed);
    eps = r.eps;
    j = io::encode(r);
  }
  j["form"] = wf.form;
  j["tol"] = c.tol;
  j["pass"] = eps <= c.tol;
  return {dump(j), eps <= c.tol ? kOk : kCheckFailed};
}

inline bool near(double x, double y, double t) { return std::abs(x - y) <= t; }

inline Outcome repro_chsh(const RunConfig&) {
  const Strategy s = lab::canonical_chsh();
  const NonlocalGame g = lab::chsh_game();
  const double omega = win_probability(g, s);
  const lab::BetaValues beta = lab::beta_functionals(s);
  const Operator w = game_operator(g, s);
  const SpectralData spec = hermitian_eig(w);
  const lab::EigengapReport gap = lab::eigengap_analysis(w, s.pure_state(), s.pure_state(), 0.0);
  io::Json j;
  j["win_probability"] = omega;
  j["expected_win_probability"] = lab::kChshQuantumValue;
  j["beta0"] = beta.beta0;
  std::vector<double> ev(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
  j["spectrum"] = ev;
  j["gap"] = gap.gap;
  j["top_multiplicity"] = gap.top_multiplicity;
  j["robustness_constant"] = lab::robustness_constant(g);
  const bool pass = near(omega, lab::kChshQuantumValue, 1e-12) && near(beta.beta0, 2.0 * std::sqrt(2.0), 1e-12) &&
                    near(gap.gap, std::sqrt(2.0) / 4.0, 1e-12) && gap.top_multiplicity == 1;
  j["pass"] = pass;
  return {dump(j), pass ? kOk : kCheckFailed};
}

inline Outcome repro_trine(const RunConfig&) {
  const Strategy s = lab::trine_strategy();
  const lab::BetaValues beta = lab::beta_functionals(s);
  const StrategyMetrics m = strategy_metrics(s);
  io::Json j;
  j["beta0"] = beta.beta0;
  j["beta1"] = *beta.beta1;
  j["correlation"] = io::encode(correlation_of(s));
  j["support_eps"] = m.support_eps;
  j["projective_eps"] = m.projective_eps;
  const bool pass = near(beta.beta0, 2.0 * std::sqrt(2.0), 1e-12) && near(*beta.beta1, 1.0, 1e-12);
  j["pass"] = pass;
  return {dump(j), pass ? kOk : kCheckFailed};
}

inline Outcome repro_moments(const RunConfig&) {
  const lab::MomentSeparation m = lab::moment_separation();
  const double r2 = std::sqrt(2.0);
  io::Json j;
  j["m1"] = m.m1;
  j["m2"] = m.m2;
  j["difference"] = m.m1 - m.m2;
  j["expected_m1"] = (4.0 - r2) / 18.0;
  j["expected_m2"] = (2.0 - r2) / 18.0;
  j["through_h"] = {{"m1", m.h1}, {"m2", m.h2}, {"difference", m.h1 - m.h2}};
  const bool pass = near(m.m1, (4.0 - r2) / 18.0, 1e-12) && near(m.m2, (2.0 - r2) / 18.0, 1e-12) &&
                    near(m.m1 - m.m2, 1.0 / 9.0, 1e-12);
  j["pass"] = pass;
  return {dump(j), pass ? kOk : kCheckFailed};
}

inline Outcome repro_pencil(const RunConfig& c) {
  std::mt19937_64 gen(c.seed);
  io::Json rows = io::Json::array();
  bool pass = true;
  for (Eigen::Index d = 2; d <= 4; ++d) {
    const Vector phi = random::state(d * d, gen);
    const Vector psi = random::state(d * d, gen);
    const lab::PencilResult r = lab::rank_deficient_combination(phi, psi, d);
    pass = pass && r.rank < d;
    rows.push_back({{"d", d},
                    {"x0", io::encode(r.x0)},
                    {"swapped", r.swapped},
                    {"schmidt_rank", r.rank},
                    {"rank_phi", schmidt_rank(phi, d, d)},
                    {"rank_psi", schmidt_rank(psi, d, d)}});
  }
  io::Json j;
  j["seed"] = c.seed;
  j["trials"] = std::move(rows);
  j["pass"] = pass;
  return {dump(j), pass ? kOk : kCheckFailed};
}

inline Outcome repro_robustness(const RunConfig& c) {
  const std::vector<lab::RobustnessRow> rows = lab::robustness_sweep(c.magnitudes, c.seed, c.per_magnitude);
  bool pass = true;
  for (const lab::RobustnessRow& r : rows) pass = pass && r.epsilon <= r.bound + 1e-9;
  if (c.format == Format::Csv) return {io::robustness_csv(rows), pass ? kOk : kCheckFailed};
  io::Json arr = io::Json::array();
  for (const lab::RobustnessRow& r : rows) {
    arr.push_back({{"magnitude", r.magnitude},
                   {"seed", r.seed},
                   {"aux_dim", r.aux_dim},
                   {"delta", r.delta},
                   {"epsilon", r.epsilon},
                   {"bound", r.bound}});
  }
  io::Json j;
  j["rows"] = std::move(arr);
  j["pass"] = pass;
  return {dump(j), pass ? kOk : kCheckFailed};
}

inline Outcome repro(const RunConfig& c) {
  if (c.target == "chsh") return repro_chsh(c);
  if (c.target == "trine") return repro_trine(c);
  if (c.target == "moments") return repro_moments(c);
  if (c.target == "pencil") return repro_pencil(c);
  if (c.target == "robustness") return repro_robustness(c);
  throw Error(ErrorCode::Parse, "unknown repro target '" + c.target +
                                    "' (expected chsh, trine, moments, pencil or robustness)");
}

}  // namespace detail

inline int run(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::Outcome result;
  try {
    if (!(config.tol > 0.0)) throw Error(ErrorCode::Parse, "--tol must be positive");
    switch (config.command) {
      case Command::Validate: result = detail::validate(config); break;
      case Command::Correlation: result = detail::correlation(config); break;
      case Command::Metrics: result = detail::metrics(config); break;
      case Command::Restrict: result = detail::restrict_cmd(config); break;
      case Command::Naimark: result = detail::naimark_cmd(config); break;
      case Command::CheckDilation: result = detail::check_dilation(config); break;
      case Command::Repro: result = detail::repro(config); break;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  if (config.out.empty()) {
    out << result.text;
  } else {
    try {
      io::write_text(config.out, result.text);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kInputError;
    }
  }
  return result.code;
}

}  // namespace selftest::cli
