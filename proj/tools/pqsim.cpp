#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pqsim/config.hpp"
#include "pqsim/runner.hpp"

namespace {

std::optional<std::uint64_t> seed_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto s = pqsim::parse_seed(text);
  if (!s) throw pqsim::ConfigError("--seed", 0, "expected an unsigned 64-bit integer, got '" + text + "'");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqsim: simulator for post-quantum measurement devices"};
  app.require_subcommand(1);

  std::string seed_text;
  bool records = false;

  auto* run_cmd = app.add_subcommand("run", "Run a configuration file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "Configuration file")->required();
  run_cmd->add_option("--seed", seed_text, "Seed (overrides the file and PQSIM_SEED)");

  auto* demo_cmd = app.add_subcommand("demo", "Run a built-in experiment");
  std::string demo_name;
  int demo_d = 2;
  int demo_m = 3;
  std::size_t demo_trials = 1;
  demo_cmd->add_option("name", demo_name, "fpvnem | spod-update | no-signalling | cloning | tomography | "
                                          "ensemble-readout | ensemble-overlap")
      ->required();
  demo_cmd->add_option("--d", demo_d, "Local dimension");
  demo_cmd->add_option("--m", demo_m, "Precision in bits");
  demo_cmd->add_option("--trials", demo_trials, "Seeded repetitions");
  demo_cmd->add_option("--seed", seed_text, "Seed (overrides PQSIM_SEED)");
  demo_cmd->add_flag("--records", records, "Print key=value records instead of the summary");

  auto* list_cmd = app.add_subcommand("list-devices", "List the device catalog");
  bool json = false;
  std::string filter;
  list_cmd->add_flag("--json", json, "JSON output");
  list_cmd->add_option("filter", filter, "Keep kinds whose name contains this text");

  auto* check_cmd = app.add_subcommand("check", "Run an OPF checker");
  std::string check_kind;
  pqsim::CheckConfig check;
  check_cmd->add_option("kind", check_kind, "closure | product-form | estimation")->required();
  check_cmd->add_option("--family", check.family, "Family id");
  check_cmd->add_option("--d", check.d, "Dimension");
  check_cmd->add_option("--m", check.m, "Precision in bits");
  check_cmd->add_option("--samples", check.samples, "Random samples");
  check_cmd->add_option("--seed", seed_text, "Seed (overrides PQSIM_SEED)");
  check_cmd->add_flag("--records", records, "Print key=value records instead of the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list_cmd->parsed()) {
      pqsim::list_devices(std::cout, json, filter);
      return 0;
    }

    const auto seed = seed_flag(seed_text);
    std::string text;
    if (run_cmd->parsed()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "pqsim: cannot read " << config_path << "\n";
        return 2;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      text = buf.str();
    } else if (demo_cmd->parsed()) {
      auto exp = pqsim::demo_config(demo_name);
      if (!exp) {
        std::cerr << "pqsim: unknown demo '" << demo_name << "'\n";
        return 2;
      }
      exp->d = demo_d;
      exp->m = demo_m;
      exp->trials = demo_trials;
      pqsim::RunConfig cfg;
      cfg.action = *exp;
      cfg.output.format = records ? "records" : "text";
      text = pqsim::to_config_text(cfg);
    } else {
      check.kind = check_kind == "product-form" ? "product_form" : check_kind;
      if (check.kind == "estimation" && !check_cmd->count("--family")) check.family = "readout";
      if (check.kind == "product_form" && !check_cmd->count("--family")) check.family = "fpvnem";
      pqsim::RunConfig cfg;
      cfg.action = check;
      cfg.output.format = records ? "records" : "text";
      text = pqsim::to_config_text(cfg);
    }

    // Demo and check arguments go through the same validation as files.
    std::vector<std::string> warnings;
    const pqsim::RunConfig cfg = pqsim::parse_config(text, &warnings);
    for (const auto& w : warnings) std::cerr << "pqsim: warning: " << w << "\n";
    return pqsim::run(cfg, std::cout, std::cerr, seed);
  } catch (const pqsim::ConfigError& e) {
    std::cerr << "pqsim: " << e.what() << "\n";
    return 2;
  }
}
