// Command-line front end for the walk laboratory: four experiment families
// (run, couple, urn, report) sharing one config surface. Every artifact file
// carries the tool version, the randomness-derivation version and a full
// config echo in its header, so archived outputs are reproducible from the
// file alone plus the binary.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vrrw/harness.hpp"

namespace {

struct CliState {
  vrrw::RunConfig cfg;
  std::string seed_text = "1";
  std::string preset_text = "s51";
  std::vector<std::string> weight_specs;  // SITE=WEIGHT
  std::string config_file;
};

void apply_weight_specs(CliState& st) {
  for (const auto& spec : st.weight_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw vrrw::ConfigError("weight override must look like SITE=WEIGHT: " +
                              spec);
    try {
      st.cfg.weights.overrides[std::stoll(spec.substr(0, eq))] =
          std::stoll(spec.substr(eq + 1));
    } catch (const vrrw::ConfigError&) {
      throw;
    } catch (...) {
      throw vrrw::ConfigError("bad weight override: " + spec);
    }
  }
}

void add_common_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--steps", st.cfg.steps, "Steps per replicate (urn: draws)");
  cmd->add_option("--replicates", st.cfg.replicates, "Number of replicates");
  cmd->add_option("--seed", st.seed_text, "Master seed, decimal or 0x-hex");
  cmd->add_option("--v0", st.cfg.v0, "Starting site");
  cmd->add_option("--checkpoints", st.cfg.checkpoints,
                  "geometric:BASE or list:n1,n2,...");
  cmd->add_option("--window", st.cfg.window, "Trailing window fraction");
  cmd->add_option("--upsilon-threshold", st.cfg.upsilon_threshold,
                  "Tail-increment threshold for seldom-departed candidates");
  cmd->add_option("--out", st.cfg.out, "Output path prefix");
  cmd->add_option("--threads", st.cfg.threads, "Worker threads (0 = auto)");
  cmd->add_option("--weight", st.weight_specs,
                  "Initial weight override SITE=WEIGHT (repeatable)");
  cmd->add_option("--ledger-col", st.cfg.ledger_cols,
                  "Extra CSV column FUNC@SITE, FUNC in "
                  "{Y,Y+,Y-,Yt+,Yt-,Yb+,Yb-} (repeatable)");
  cmd->add_option("--config", st.config_file,
                  "JSON config file (exclusive of other flags)");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"vrrw-lab: reinforced-walk simulation and verification"};
  app.require_subcommand(1);
  CliState st;

  CLI::App* run = app.add_subcommand("run", "Simulate walks and report traps");
  add_common_options(run, st);

  CLI::App* couple =
      app.add_subcommand("couple", "Coupled pair + dominance audit");
  add_common_options(couple, st);
  couple->add_option("--x", st.cfg.coupling.x, "Perturbed site");
  couple->add_option("--g", st.cfg.coupling.g, "Perturbation scale");
  couple->add_option("--cap-M", st.cfg.coupling.cap_m, "Escape box factor M");
  couple->add_option("--k", st.cfg.coupling.k, "Activation step / level");
  couple->add_option("--v-cap", st.cfg.coupling.v_cap,
                     "Deactivation step / level (0: 2k)");
  couple->add_option("--window-kind", st.cfg.coupling.window_kind,
                     "step or s51 (threshold-valued k, V)");
  couple->add_option("--preset", st.preset_text, "Series preset s51|s52|s53");
  couple->add_option("--perturb", st.cfg.coupling.perturb,
                     "right (dominant) or left (negative control)");
  couple->add_option("--series-max", st.cfg.series_max,
                     "Diagnostic levels emitted");

  CLI::App* urn = app.add_subcommand("urn", "Urn-model experiments");
  add_common_options(urn, st);
  urn->add_option("--kind", st.cfg.urn.kind, "polya or friedman");
  urn->add_option("--a", st.cfg.urn.a0, "Initial left count");
  urn->add_option("--b", st.cfg.urn.b0, "Initial right count");
  urn->add_option("--alpha", st.cfg.urn.alpha,
                  "Geometric batch success probability");

  CLI::App* report =
      app.add_subcommand("report", "Aggregate a prior run CSV into a summary");
  add_common_options(report, st);
  report->add_option("--in", st.cfg.report_input, "Input run CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (active == run) st.cfg.command = vrrw::Command::run;
    if (active == couple) {
      st.cfg.command = vrrw::Command::couple;
      st.cfg.coupling_set = true;
      st.cfg.coupling.preset = vrrw::parse_preset(st.preset_text);
    }
    if (active == urn) {
      st.cfg.command = vrrw::Command::urn;
      st.cfg.urn_set = true;
    }
    if (active == report) st.cfg.command = vrrw::Command::report;

    vrrw::RunConfig cfg;
    if (!st.config_file.empty()) {
      for (const auto* opt : active->get_options()) {
        if (opt->get_name() == "--config" || opt->count() == 0) continue;
        throw vrrw::ConfigError(
            "--config is exclusive: remove flag " + opt->get_name());
      }
      cfg = vrrw::load_config_file(st.config_file);
    } else {
      st.cfg.seed = vrrw::parse_seed(st.seed_text);
      apply_weight_specs(st);
      cfg = st.cfg;
    }

    const auto result = vrrw::execute(cfg);
    if (!result.csv_path.empty())
      std::printf("wrote %s\n", result.csv_path.c_str());
    std::printf("wrote %s\n", result.json_path.c_str());
    return 0;
  } catch (const vrrw::ConfigError& e) {
    vrrw::json err = {{"error", "config"}, {"what", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const vrrw::OutputError& e) {
    vrrw::json err = {{"error", "output"}, {"what", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    vrrw::json err = {{"error", "internal"}, {"what", e.what()}};
    std::cerr << err.dump() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
