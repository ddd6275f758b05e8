#include "kamtorus/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "kamtorus/cohomology.hpp"
#include "kamtorus/estimates.hpp"
#include "kamtorus/report_io.hpp"

namespace kt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string path_in(const std::string& out, const char* name) { return (fs::path(out) / name).string(); }

std::vector<std::vector<int>> to_int_rows(const std::vector<std::vector<i64>>& m) {
  std::vector<std::vector<int>> r;
  for (const auto& row : m) r.emplace_back(row.begin(), row.end());
  return r;
}

json scenario_header(const Scenario& s) {
  return {{"seed", s.seed}, {"threads", s.threads}, {"A", to_int_rows(s.A)}, {"B", to_int_rows(s.B)}, {"d2", s.d2}};
}

FourierField random_field(int d1, int d2, int box, double amplitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierField v(d1, d2, box);
  for (auto& c : v.coeffs()) c = amplitude * cplx(u(rng), u(rng));
  return v;
}

double grid_values_sup(const FourierField& v, int G) {
  double sup = 0;
  for (const auto& z : sample_on_grid(v, std::vector<int>(v.dim(), G)).v) sup = std::max(sup, std::abs(z));
  return sup;
}

}  // namespace

IntervalGaps interval_gaps(const ParamSet& kept, const FrequencyFamily& phi, int N, const std::vector<cplx>& E,
                           double b, double step) {
  IntervalGaps g;
  for (const auto& iv : kept.intervals()) {
    double best = std::numeric_limits<double>::infinity();
    const long count = std::max(1L, static_cast<long>(std::ceil(iv.length() / step)));
    for (long j = 0; j <= count; ++j) {
      const double t = j == count ? iv.hi : iv.lo + j * step;
      const DiophantineCert c = in_D(phi.at(t), N, E, b);
      double m = std::numeric_limits<double>::infinity();
      for (const auto& r : c.min_gaps) m = std::min(m, r.gap);
      g.samples.push_back(m);
      best = std::min(best, m);
    }
    g.per_interval.push_back(best);
  }
  return g;
}

int cmd_check(const Scenario& s, const std::string& out, std::ostream& log) {
  const TorusAutomorphism A = scenario_A(s), B = scenario_B(s);
  const FrequencyFamily phi = scenario_phi(s), psi = scenario_psi(s);
  json conds = json::array();
  CsvTable table({"condition", "pass", "detail"});
  bool all = true;
  auto add = [&](const std::string& name, bool pass, const std::string& detail, json extra) {
    all = all && pass;
    extra["condition"] = name;
    extra["pass"] = pass;
    extra["detail"] = detail;
    conds.push_back(extra);
    table.add_row({name, pass ? "1" : "0", detail});
    log << (pass ? "pass " : "FAIL ") << name << ": " << detail << "\n";
  };

  add("normal_form", true, "linear parts are (A x Id, B x Id)", json::object());
  add("commuting", check_commuting(A, B), "AB = BA", json::object());
  add("ergodic_A", is_ergodic(A), "no eigenvalue of A is a root of unity", json::object());
  add("ergodic_B", is_ergodic(B), "no eigenvalue of B is a root of unity", json::object());

  const HrReport hr = check_hr_report(A, B, s.check.K);
  std::string hr_detail = "A^k B^l ergodic for 0 < max(|k|, |l|) <= " + std::to_string(s.check.K);
  if (hr.witness)
    hr_detail = "A^k B^l is not ergodic at (k, l) = (" + std::to_string(hr.witness->first) + ", " +
                std::to_string(hr.witness->second) + ")";
  add("higher_rank", hr.pass, hr_detail, to_json(hr));

  try {
    const PyartliResult py = pyartli_check(phi, s.check.nu, s.check.pyartli_nodes);
    add("pyartli", py.pass, "min det " + format_number(py.min_det) + " at t = " + format_number(py.witness_t),
        to_json(py));
  } catch (const Error& e) {
    add("pyartli", false, std::string("error: ") + e.what(), json::object());
  }

  const std::vector<double> alpha = phi.at(s.check.t), beta = psi.at(s.check.t);
  try {
    std::vector<std::pair<cplx, cplx>> pairs = {{cplx(1), cplx(1)}};
    for (const auto& p : simultaneous_eigenbasis(A, B).pairs) pairs.emplace_back(p.lambda, p.mu);
    const SdcResult sdc = sdc_check(alpha, beta, pairs, s.check.tau, s.check.gamma, s.check.K_max);
    std::string detail = "min margin " + format_number(sdc.min_margin);
    if (!sdc.pass) {
      detail = "both divisors small at k = (";
      for (size_t a = 0; a < sdc.witness_k.size(); ++a) detail += (a ? ", " : "") + std::to_string(sdc.witness_k[a]);
      detail += ")";
    }
    add("simultaneous_diophantine", sdc.pass, detail, to_json(sdc));
  } catch (const Error& e) {
    add("simultaneous_diophantine", false, std::string("error: ") + e.what(), json::object());
  }

  const int N0 = static_cast<int>(std::ceil(s.scheme.N0));
  const DiophantineCert dc = in_D(alpha, N0, A, s.scheme.b);
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& g : dc.min_gaps) gap = std::min(gap, g.gap);
  add("diophantine_N0", dc.pass,
      "smallest gap " + format_number(gap) + " against threshold " + format_number(dc.threshold), to_json(dc));

  json rep = {{"command", "check"}, {"scenario", scenario_header(s)}, {"t", s.check.t}, {"conditions", conds},
              {"pass", all}};
  write_json(rep, path_in(out, "check.json"));
  table.write(path_in(out, "check.csv"));
  return all ? kExitOk : kExitCertification;
}

int cmd_solve(const Scenario& s, const std::string& out, std::ostream& log) {
  const TorusAutomorphism A = scenario_A(s);
  const auto& o = s.solve;
  const int d1 = s.d1(), d2 = s.d2;
  CsvTable table({"lambda_re", "lambda_im", "sample", "residual_sup", "residual_l1", "removed_l1",
                  "min_small_divisor", "orbits"});
  json rows = json::array();
  bool ok = true;
  std::mt19937_64 rng(s.seed);
  const std::vector<cplx> E = resonance_set(A);
  for (size_t li = 0; li < E.size(); ++li) {
    TwistedEquation eq;
    eq.lambda = E[li];
    eq.A = A;
    eq.phi = scenario_phi(s).at(o.t);
    eq.N = o.box;
    eq.b = s.scheme.b;
    for (int k = 0; k < o.samples; ++k) {
      FourierField v = random_field(d1, d2, o.box, o.amplitude, rng);
      // at lambda = 1 the (0, 0) mode has a zero divisor: its coefficient is the average
      if (std::abs(E[li] - cplx(1)) <= 1e-12) v.set(std::vector<int>(d1 + d2, 0), 0);
      json row = {{"lambda", {E[li].real(), E[li].imag()}}, {"sample", k}};
      try {
        const FourierField vt = obstruction_part(v, eq);
        const FourierField rhs = v - vt;
        SolveReport rep;
        const FourierField h = solve_twisted(rhs, eq, {}, &rep);
        const FourierField lhs = twisted_apply(h, eq);
        const int bx = std::max(lhs.box(), rhs.box());
        const FourierField res = lhs.with_box(bx) - rhs.with_box(bx);
        const double sup = grid_values_sup(res, o.grid);
        row["residual_sup"] = sup;
        row["residual_l1"] = res.l1();
        row["removed_l1"] = vt.l1();
        row["min_small_divisor"] = rep.min_small_divisor;
        row["orbits"] = rep.orbits;
        row["pass"] = sup <= o.tol;
        ok = ok && sup <= o.tol;
        table.add_row({num(E[li].real()), num(E[li].imag()), num(k), num(sup), num(res.l1()), num(vt.l1()),
                       num(rep.min_small_divisor), num(rep.orbits)});
      } catch (const Error& e) {
        ok = false;
        row["pass"] = false;
        row["failure"] = e.code();
        row["message"] = e.what();
        log << "FAIL lambda " << format_number(E[li].real()) << " sample " << k << ": " << e.what() << "\n";
      }
      rows.push_back(row);
    }
  }
  log << (ok ? "pass" : "FAIL") << " twisted equation residuals over " << rows.size() << " solves\n";
  json rep = {{"command", "solve"}, {"scenario", scenario_header(s)}, {"t", o.t}, {"box", o.box},
              {"grid", o.grid},     {"tol", o.tol},                   {"solves", rows}, {"pass", ok}};
  write_json(rep, path_in(out, "solve.json"));
  table.write(path_in(out, "solve.csv"));
  return ok ? kExitOk : kExitCertification;
}

int cmd_step(const Scenario& s, const std::string& out, std::ostream& log) {
  const ActionPair pair = build_pair(s);
  const SchemeConfig cfg = build_scheme_config(s);
  StepOptions so = cfg.step;
  const double N = exclusion_level(s.scheme.N0);
  const StepResult r = inductive_step(pair, N, so);
  CsvTable table({"node", "t", "ok", "failure", "eps_in", "eps_out", "h_norm", "dphi", "dpsi", "avg_f", "avg_g",
                  "defect_in", "defect_out", "min_gap"});
  json nodes = json::array();
  std::vector<double> gaps;
  for (size_t i = 0; i < r.nodes.size(); ++i) {
    const auto& n = r.nodes[i];
    nodes.push_back(to_json(n));
    if (n.ok) gaps.push_back(n.min_gap);
    table.add_row({num(i), num(n.t), n.ok ? "1" : "0", n.ok ? "-" : n.failure, num(n.eps_in), num(n.eps_out),
                   num(n.h_norm), num(n.dphi), num(n.dpsi), num(n.avg_f), num(n.avg_g), num(n.defect_in),
                   num(n.defect_out), num(n.min_gap)});
  }
  log << "step at N = " << format_number(N) << ": eps " << format_number(r.eps_in) << " -> "
      << format_number(r.eps_out) << ", " << r.failures << " failed nodes\n";
  json rep = {{"command", "step"}, {"scenario", scenario_header(s)}, {"N", N},
              {"eps_in", r.eps_in}, {"eps_out", r.eps_out},        {"max_h_norm", r.max_h_norm},
              {"failures", r.failures}, {"nodes", nodes},          {"pass", r.failures == 0}};
  write_json(rep, path_in(out, "step.json"));
  table.write(path_in(out, "step_nodes.csv"));
  log_histogram(gaps, s.exclude.histogram_bins).write(path_in(out, "gap_histogram.csv"));
  return r.failures == 0 ? kExitOk : kExitCertification;
}

int cmd_run(const Scenario& s, const std::string& out, std::ostream& log) {
  const ActionPair pair = build_pair(s);
  const SchemeConfig cfg = build_scheme_config(s);
  const SchemeReport r = run_scheme(pair, cfg);

  bool conj_ok = true;
  for (const auto& v : r.nodes)
    if (v.survived && cfg.verify_chain)
      conj_ok = conj_ok && v.conj_error_f >= 0 && v.conj_error_f <= s.scheme.conj_tol && v.conj_error_g >= 0 &&
                v.conj_error_g <= s.scheme.conj_tol;
  const bool ok = r.converged && conj_ok;

  std::vector<double> step_gaps;
  for (const auto& st : r.steps)
    for (const auto& n : st)
      if (n.ok) step_gaps.push_back(n.min_gap);
  const int level = static_cast<int>(r.iterations.empty() ? exclusion_level(s.scheme.N0) : r.iterations.back().Ntilde);
  const IntervalGaps ig =
      interval_gaps(r.kept, scenario_phi(s), level, resonance_set(scenario_A(s)), s.scheme.b, s.exclude.gap_step);
  CsvTable kept({"lo", "hi", "min_gap"});
  for (size_t i = 0; i < r.kept.intervals().size(); ++i)
    kept.add_row({num(r.kept.intervals()[i].lo), num(r.kept.intervals()[i].hi), num(ig.per_interval[i])});

  json rep = {{"command", "run"}, {"scenario", scenario_header(s)}, {"report", to_json(r)},
              {"conj_tol", s.scheme.conj_tol}, {"conjugation_ok", conj_ok}, {"gap_level", level}, {"pass", ok}};
  write_json(rep, path_in(out, "run.json"));
  iteration_table(r).write(path_in(out, "iterations.csv"));
  error_table(r).write(path_in(out, "error_vs_iteration.csv"));
  kept_measure_table(r).write(path_in(out, "kept_measure_vs_iteration.csv"));
  node_table(r).write(path_in(out, "nodes.csv"));
  kept.write(path_in(out, "kept_intervals.csv"));
  log_histogram(step_gaps, s.exclude.histogram_bins).write(path_in(out, "gap_histogram.csv"));
  json timing = {{"seconds", r.seconds}, {"iterations", json::array()}};
  for (const auto& it : r.iterations) timing["iterations"].push_back(it.seconds);
  write_json(timing, path_in(out, "timing.json"));

  log << "run: " << r.stop_reason << ", converged " << r.converged << ", surviving fraction "
      << format_number(r.surviving_fraction) << ", " << r.iterations.size() << " iterations\n";
  return ok ? kExitOk : kExitCertification;
}

int cmd_exclude(const Scenario& s, const std::string& out, std::ostream& log) {
  const TorusAutomorphism A = scenario_A(s);
  const FrequencyFamily phi = scenario_phi(s);
  const std::vector<cplx> E = resonance_set(A);
  const Interval I{s.t_lo, s.t_hi};
  ExclusionResult ex;
  if (s.d2 == 1) {
    ExclusionOptions eo;
    eo.b = s.scheme.b;
    eo.bisection_steps = s.scheme.bisection_steps;
    eo.verify_density = s.scheme.verify_density;
    ex = exclude_interval(I, phi, s.exclude.N, s.exclude.M, E, eo);
  } else {
    ex = exclude_interval_d2(I, phi, s.exclude.N, s.check.nu, s.d2, E);
  }
  const int level = static_cast<int>(exclusion_level(s.exclude.N));
  const IntervalGaps ig = interval_gaps(ex.kept, phi, level, E, s.scheme.b, s.exclude.gap_step);
  CsvTable kept({"lo", "hi", "min_gap"});
  for (size_t i = 0; i < ex.kept.intervals().size(); ++i)
    kept.add_row({num(ex.kept.intervals()[i].lo), num(ex.kept.intervals()[i].hi), num(ig.per_interval[i])});
  CsvTable removed({"lo", "hi"});
  for (const auto& iv : ex.removed) removed.add_row({num(iv.lo), num(iv.hi)});
  CsvTable summary({"N", "Ntilde", "M", "d_count", "kept_measure", "bound"});
  summary.add_row({num(ex.cert.N), num(ex.cert.Ntilde), num(ex.cert.M), num(ex.cert.d_count),
                   num(ex.cert.kept_measure), num(ex.cert.bound)});

  const bool ok = ex.cert.kept_measure >= ex.cert.bound && ex.cert.verify_failures == 0;
  json rem = json::array(), dis = json::array();
  for (const auto& iv : ex.removed) rem.push_back({iv.lo, iv.hi});
  for (const auto& iv : ex.discarded) dis.push_back({iv.lo, iv.hi});
  json rep = {{"command", "exclude"}, {"scenario", scenario_header(s)}, {"certificate", to_json(ex.cert)},
              {"kept", to_json(ex.kept)}, {"removed", rem},                {"discarded", dis},
              {"gap_level", level},       {"pass", ok}};
  write_json(rep, path_in(out, "exclude.json"));
  kept.write(path_in(out, "kept_intervals.csv"));
  removed.write(path_in(out, "removed_intervals.csv"));
  summary.write(path_in(out, "kept_measure.csv"));
  log_histogram(ig.samples, s.exclude.histogram_bins).write(path_in(out, "gap_histogram.csv"));
  log << "exclude: kept " << format_number(ex.cert.kept_measure) << " against bound " << format_number(ex.cert.bound)
      << ", " << ex.cert.verify_failures << " verification failures\n";
  return ok ? kExitOk : kExitCertification;
}

int cmd_verify_estimates(const Scenario& s, const std::string& out, std::ostream& log) {
  LabOptions o;
  o.samples = s.estimates.samples;
  o.boxes = s.estimates.boxes;
  o.seed = s.seed;
  o.drift_tol = s.estimates.drift_tol;
  o.ratio_threshold = s.estimates.ratio_threshold;
  const int k = s.estimates.s;
  std::vector<EstimateReport> reps;
  reps.push_back(verify_interpolation(o, std::max(k - 1, 0), k + 1, 0.5, 0.5));
  reps.push_back(verify_product(o, k + 1));
  reps.push_back(verify_composition_difference(o, k));
  reps.push_back(verify_composition_remainder(o, k));
  reps.push_back(verify_inversion(o, k, 0.01, s.estimates.inversion_max));

  CsvTable levels({"id", "box", "samples", "max_ratio", "max_ratio_half"});
  CsvTable summary({"id", "max_ratio", "drift", "sample_drift", "max_roundtrip", "pass"});
  json arr = json::array();
  bool ok = true;
  for (const auto& r : reps) {
    ok = ok && r.pass;
    arr.push_back(to_json(r));
    for (const auto& l : r.levels)
      levels.add_row({r.id, num(l.box), num(l.samples.size()), num(l.max_ratio), num(l.max_ratio_half)});
    summary.add_row({r.id, num(r.max_ratio), num(r.drift), num(r.sample_drift), num(r.max_roundtrip),
                     r.pass ? "1" : "0"});
    log << (r.pass ? "pass " : "FAIL ") << r.id << ": max ratio " << format_number(r.max_ratio) << ", drift "
        << format_number(r.drift) << "\n";
  }
  json rep = {{"command", "verify-estimates"}, {"seed", s.seed}, {"reports", arr}, {"pass", ok}};
  write_json(rep, path_in(out, "estimates.json"));
  levels.write(path_in(out, "estimates.csv"));
  summary.write(path_in(out, "estimates_summary.csv"));
  return ok ? kExitOk : kExitCertification;
}

int run_command(const std::string& name, const CommandArgs& args, std::ostream& log) {
  Scenario s;
  try {
    s = load_scenario(args.config);
    if (args.threads) {
      if (*args.threads < 1) throw ConfigError("--threads must be positive");
      s.threads = *args.threads;
    }
    if (args.seed) s.seed = *args.seed;
    fs::create_directories(args.out);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (name == "check") return cmd_check(s, args.out, log);
    if (name == "solve") return cmd_solve(s, args.out, log);
    if (name == "step") return cmd_step(s, args.out, log);
    if (name == "run") return cmd_run(s, args.out, log);
    if (name == "exclude") return cmd_exclude(s, args.out, log);
    if (name == "verify-estimates") return cmd_verify_estimates(s, args.out, log);
    log << "config error: unknown command " << name << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "certification failure [" << e.code() << "]: " << e.what() << "\n";
    return kExitCertification;
  }
}

}  // namespace kt
