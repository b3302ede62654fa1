// Command-line front end: tori_cli <subcommand> --config job.json [--out report.json]

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "tori/cli.hpp"

namespace {

int emit(const tori::json& report, const std::string& out_path) {
  std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out_path);
  if (!f) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  f << text;
  return 0;
}

int fail(const tori::ErrorCode& e, const std::string& message) {
  std::cout << tori::error_report(e, message).dump(2) << "\n";
  return e.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admissibility, multiplicities and oracle checks for anisotropic tori"};
  app.require_subcommand(1, 1);
  std::string config_path, out_path;
  std::optional<long> precision, oracle_level;
  std::optional<std::int64_t> seed;
  bool timing = false;
  const std::map<std::string, std::string> about = {
      {"classify", "list the subtori of a maximal torus by divisor set"},
      {"admissible", "decide admissibility, with certificates"},
      {"multiplicity", "closed-form multiplicities next to reduction volumes"},
      {"volume", "reduction volumes only"},
      {"verify", "compare closed forms with the finite-quotient oracle"},
      {"appendix-a", "minimal invariant submodules against enumeration"},
      {"embeddable", "decide whether a norm-one torus embeds in a symplectic group"},
  };
  for (const auto& name : tori::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "job configuration (JSON)")->required();
    sub->add_option("--precision", precision, "working precision in digits");
    sub->add_option("--oracle-level", oracle_level, "quotient level N for oracle checks");
    sub->add_option("--out", out_path, "write the report here instead of standard output");
    sub->add_option("--seed", seed, "seed recorded for randomized suites");
    sub->add_flag("--timing", timing, "include wall-clock timing (makes output non-reproducible)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  std::string subcommand = app.get_subcommands().front()->get_name();

  tori::json config;
  {
    std::ifstream f(config_path);
    if (!f) return fail(tori::kConfigInvalid, "cannot read " + config_path);
    try {
      f >> config;
    } catch (const tori::json::exception& e) {
      return fail(tori::kConfigInvalid, std::string("invalid JSON: ") + e.what());
    }
  }
  tori::RunOptions opt;
  opt.precision = precision;
  opt.oracle_level = oracle_level;
  opt.seed = seed;
  opt.timing = timing;
  try {
    return emit(tori::run(subcommand, config, opt), out_path);
  } catch (const tori::ConfigError& e) {
    return fail(tori::kConfigInvalid, e.what());
  } catch (const tori::BudgetError& e) {
    return fail(tori::kBudgetExceeded, e.what());
  } catch (const tori::PrecisionError& e) {
    return fail(tori::kPrecisionExhausted, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(tori::kUnsupported, e.what());
  } catch (const std::exception& e) {
    return fail(tori::kInternal, e.what());
  }
}
