#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "kamtorus/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral KAM scheme for partially hyperbolic affine actions on tori"};
  app.require_subcommand(0, 1);
  std::string reference;
  app.add_option("--write-reference", reference, "Write the reference config with every default and exit");

  kt::CommandArgs args;
  int threads = 0;
  long long seed = -1;
  const char* names[] = {"check", "solve", "step", "run", "exclude", "verify-estimates"};
  const char* help[] = {"Validate the action and the arithmetic conditions",
                        "Solve the twisted cohomological equation on random right-hand sides",
                        "One inductive step at the first truncation level",
                        "Full scheme: exclusion, steps and conjugacy verification",
                        "Parameter exclusion on the scenario interval",
                        "Empirical stability of the norm estimates"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", args.config, "Scenario file")->required();
    sub->add_option("--out", args.out, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (default: scenario value)");
    sub->add_option("--seed", seed, "Seed (default: scenario value)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kt::kExitConfig;
  }
  if (!reference.empty()) {
    std::ofstream out(reference);
    if (!out) {
      std::cerr << "config error: cannot write " << reference << "\n";
      return kt::kExitConfig;
    }
    out << kt::scenario_to_text(kt::default_scenario());
    return kt::kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kt::kExitConfig;
  }
  if (threads != 0) args.threads = threads;
  if (seed >= 0) args.seed = static_cast<unsigned>(seed);
  return kt::run_command(app.get_subcommands().front()->get_name(), args, std::cout);
}
