// fpl: run the experiments and write their report bundles.
//
//   fpl run --experiment <name> --config <path> --seed <u64> --out <dir> [--overwrite]
//   fpl list
//
// Exit status: 0 all criteria pass, 2 some criterion failed, 1 usage or I/O error.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fpl/experiments.hpp"

namespace ex = fpl::experiments;

namespace {

const char* type_name(ex::ParamType t) {
  switch (t) {
    case ex::ParamType::Int: return "int";
    case ex::ParamType::Real: return "real";
    case ex::ParamType::IntList: return "int list";
    case ex::ParamType::RealList: return "real list";
    case ex::ParamType::Text: return "text";
  }
  return "?";
}

void print_list(std::ostream& os) {
  for (const auto& s : ex::schemas()) {
    os << s.name << "\n  " << s.description << "\n";
    for (const auto& p : s.params) {
      os << "    " << p.name << " (" << type_name(p.type) << ")";
      if (p.required) os << " required";
      else os << " default " << (p.default_value.empty() ? "<empty>" : p.default_value);
      os << ": " << p.doc << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermionic projector numerical laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  bool overwrite = false;
  run->add_option("--experiment", experiment, "experiment name (see `fpl list`)")->required();
  run->add_option("--config", config_path, "key = value configuration file");
  run->add_option("--seed", seed, "64-bit seed")->required();
  run->add_option("--out", out_dir, "output directory (default $FPL_OUT_DIR)");
  run->add_flag("--overwrite", overwrite, "replace existing report files");

  auto* list = app.add_subcommand("list", "list experiments and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (list->parsed()) {
    print_list(std::cout);
    return 0;
  }

  try {
    if (out_dir.empty()) {
      const char* env = std::getenv("FPL_OUT_DIR");
      if (env == nullptr || *env == '\0') {
        std::cerr << "error: no output directory; pass --out or set FPL_OUT_DIR\n" << run->help();
        return 1;
      }
      out_dir = env;
    }
    ex::Config cfg = config_path.empty() ? ex::Config{} : ex::Config::load(config_path);
    ex::Report report = ex::run_experiment(experiment, cfg, seed);
    auto paths = ex::write_report(report, out_dir, overwrite);
    for (const auto& [name, pass] : report.criteria) std::cout << name << ": " << (pass ? "pass" : "fail") << "\n";
    for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
    return report.all_pass() ? 0 : 2;
  } catch (const fpl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == fpl::Errc::UnknownExperiment) {
      std::cerr << run->help() << "\nexperiments:\n";
      for (const auto& s : ex::schemas()) std::cerr << "  " << s.name << "\n";
    }
    return 1;
  }
}
