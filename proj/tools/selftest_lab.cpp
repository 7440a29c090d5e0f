// selftest_lab: command-line front end for the selftest library.

#include <CLI11.hpp>

#include "selftest/cli.hpp"

int main(int argc, char** argv) {
  using selftest::cli::Command;
  selftest::cli::RunConfig config;
  std::string format = "json";

  CLI::App app{"Self-testing toolkit for bipartite nonlocal games"};
  app.require_subcommand(1);
  app.add_option("--tol", config.tol, "Tolerance for validation and dilation checks")->capture_default_str();
  app.add_option("--seed", config.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--out", config.out, "Write output to PATH instead of stdout");

  struct Sub {
    const char* name;
    const char* help;
    Command command;
    std::size_t inputs;
  };
  const Sub subs[] = {
      {"validate", "Validate a strategy file", Command::Validate, 1},
      {"correlation", "Correlation table of a strategy", Command::Correlation, 1},
      {"metrics", "Support-preservation and projectivity metrics", Command::Metrics, 1},
      {"restrict", "Restrict a strategy to its local supports", Command::Restrict, 1},
      {"naimark", "Naimark-dilate a strategy", Command::Naimark, 1},
      {"check-dilation", "Residuals of a dilation witness: SOURCE TARGET WITNESS", Command::CheckDilation, 3},
  };
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("inputs", config.inputs, "Input files")->required()->expected(static_cast<int>(s.inputs));
    if (s.command == Command::Validate || s.command == Command::Correlation) {
      sub->add_option("--game", config.game_path, "Game file; adds the winning probability");
    }
    sub->callback([&config, c = s.command] { config.command = c; });
  }
  CLI::App* repro = app.add_subcommand("repro", "Reproduce a worked example");
  repro->add_option("target", config.target, "chsh, trine, moments, pencil or robustness")->required();
  repro->add_option("--magnitudes", config.magnitudes, "Perturbation magnitudes for the robustness sweep");
  repro->add_option("--per-magnitude", config.per_magnitude, "Seeds per magnitude")->capture_default_str();
  repro->callback([&config] { config.command = Command::Repro; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : selftest::cli::kInputError;
  }
  config.format = format == "csv" ? selftest::cli::Format::Csv : selftest::cli::Format::Json;
  return selftest::cli::run(config);
}
