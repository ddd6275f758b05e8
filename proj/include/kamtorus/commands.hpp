#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "kamtorus/scenario.hpp"

namespace kt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCertification = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitInternal = 1;

struct CommandArgs {
  std::string config;
  std::string out = ".";
  std::optional<int> threads;
  std::optional<unsigned> seed;
};

// check | solve | step | run | exclude | verify-estimates. Loads the scenario,
// writes the reports below args.out and returns the exit code. Config errors
// are reported on `log` and return kExitConfig.
int run_command(const std::string& name, const CommandArgs& args, std::ostream& log);

// The command bodies on an already validated scenario.
int cmd_check(const Scenario& s, const std::string& out, std::ostream& log);
int cmd_solve(const Scenario& s, const std::string& out, std::ostream& log);
int cmd_step(const Scenario& s, const std::string& out, std::ostream& log);
int cmd_run(const Scenario& s, const std::string& out, std::ostream& log);
int cmd_exclude(const Scenario& s, const std::string& out, std::ostream& log);
int cmd_verify_estimates(const Scenario& s, const std::string& out, std::ostream& log);

// Smallest Diophantine gap at level N of the curve at sample points spaced by `step`
// inside each interval (both ends included), one value per interval.
struct IntervalGaps {
  std::vector<double> per_interval;
  std::vector<double> samples;
};
IntervalGaps interval_gaps(const ParamSet& kept, const FrequencyFamily& phi, int N, const std::vector<cplx>& E,
                           double b, double step);

}  // namespace kt
