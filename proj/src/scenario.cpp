#include "kamtorus/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kamtorus/fixtures.hpp"

namespace kt {

using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>)
      if (v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a non-negative integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  }
  try {
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(out)) throw ConfigError(where + "." + key + ": not finite");
}

std::vector<std::vector<i64>> read_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  std::vector<std::vector<i64>> m;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != j.size()) throw ConfigError(where + ": matrix is not square");
    std::vector<i64> r;
    for (const auto& x : row) {
      if (!x.is_number_integer()) throw ConfigError(where + ": entries must be integers");
      r.push_back(x.get<i64>());
    }
    m.push_back(std::move(r));
  }
  return m;
}

std::vector<std::vector<double>> read_poly(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected one coefficient list per component");
  std::vector<std::vector<double>> p;
  for (const auto& comp : j) {
    if (!comp.is_array() || comp.empty()) throw ConfigError(where + ": empty coefficient list");
    std::vector<double> c;
    for (const auto& x : comp) {
      if (!x.is_number()) throw ConfigError(where + ": coefficients must be numbers");
      c.push_back(x.get<double>());
    }
    p.push_back(std::move(c));
  }
  return p;
}

CoefficientSpec read_coefficient(const json& j, const std::string& where) {
  allow_keys(j, {"map", "component", "index", "re", "im"}, where);
  CoefficientSpec c;
  read(j, "map", c.map, where);
  read(j, "component", c.component, where);
  read(j, "re", c.re, where);
  read(j, "im", c.im, where);
  if (!j.contains("index") || !j.at("index").is_array()) throw ConfigError(where + ".index: expected an array");
  for (const auto& x : j.at("index")) {
    if (!x.is_number_integer()) throw ConfigError(where + ".index: entries must be integers");
    c.index.push_back(x.get<int>());
  }
  return c;
}

json matrix_json(const std::vector<std::vector<i64>>& m) {
  json a = json::array();
  for (const auto& r : m) a.push_back(r);
  return a;
}

std::vector<std::vector<i64>> block(const std::vector<std::vector<i64>>& m, int lo, int n) {
  std::vector<std::vector<i64>> b(n, std::vector<i64>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b[i][j] = m[lo + i][lo + j];
  return b;
}

void validate(const Scenario& s) {
  if (s.A.empty() || s.B.empty()) throw ConfigError("action: A and B are required");
  if (s.A.size() != s.B.size()) throw ConfigError("action: A and B have different sizes");
  const IntMatrix a = IntMatrix::from_rows(s.A), b = IntMatrix::from_rows(s.B);
  for (const auto* m : {&a, &b}) {
    const i64 det = determinant(*m);
    if (det != 1 && det != -1)
      throw ConfigError("action: determinant " + std::to_string(det) + " is not +-1");
  }
  if (!check_commuting(TorusAutomorphism(a), TorusAutomorphism(b))) throw ConfigError("action: A and B do not commute");
  if (s.d2 < 1) throw ConfigError("action: d2 must be at least 1");
  if (static_cast<int>(s.phi.size()) != s.d2 || static_cast<int>(s.psi.size()) != s.d2)
    throw ConfigError("action: phi and psi need d2 components");
  if (!(s.t_lo < s.t_hi)) throw ConfigError("parameters: empty interval");
  if (s.nodes < 2) throw ConfigError("parameters: at least two nodes");
  if (s.node_offset >= 1) throw ConfigError("parameters: node_offset must be below 1");
  if (s.threads < 1) throw ConfigError("threads must be positive");

  const auto& p = s.perturbation;
  const int d = s.d1() + s.d2;
  if (p.kind != "none" && p.kind != "coefficients" && p.kind != "conjugated_linear")
    throw ConfigError("perturbation.kind: expected none, coefficients or conjugated_linear");
  if (p.box < 1) throw ConfigError("perturbation.box must be positive");
  if (p.grid < 4 * p.box) throw ConfigError("perturbation.grid must be at least 4 * box");
  if (p.kind == "conjugated_linear") {
    if (p.generator != "cubic_fixture" && p.generator != "modes")
      throw ConfigError("perturbation.generator: expected cubic_fixture or modes");
    if (p.generator == "cubic_fixture" && (s.d1() != 3 || s.d2 != 1))
      throw ConfigError("perturbation.generator: cubic_fixture needs d1 = 3 and d2 = 1");
  }
  for (const auto& c : p.coefficients) {
    if (c.map != "f" && c.map != "g") throw ConfigError("perturbation.coefficients: map must be f or g");
    if (c.component < 0 || c.component >= d) throw ConfigError("perturbation.coefficients: component out of range");
    if (static_cast<int>(c.index.size()) != d) throw ConfigError("perturbation.coefficients: index needs d1 + d2 entries");
    bool zero = true;
    for (int x : c.index) {
      if (std::abs(x) > p.box) throw ConfigError("perturbation.coefficients: index outside the box");
      zero = zero && x == 0;
    }
    if (zero && c.im != 0) throw ConfigError("perturbation.coefficients: the zero mode must be real");
  }

  const auto& sc = s.scheme;
  if (!(sc.N0 > 1)) throw ConfigError("scheme.N0 must exceed 1");
  if (sc.max_iterations < 0) throw ConfigError("scheme.max_iterations must be non-negative");
  if (!(sc.M > 0) || !(sc.b > 0)) throw ConfigError("scheme: M and b must be positive");
  if (sc.grid < 0 || sc.box < 0) throw ConfigError("scheme: grid and box must be non-negative");
  if (s.check.K < 1 || s.check.K_max < 1 || s.check.pyartli_nodes < 2) throw ConfigError("check: ranges must be positive");
  if (s.solve.box < 1 || s.solve.grid < 2 * s.solve.box + 1 || s.solve.samples < 1)
    throw ConfigError("solve: box, grid or samples out of range");
  if (!(s.exclude.N > 1) || !(s.exclude.M > 0) || s.exclude.histogram_bins < 1 || !(s.exclude.gap_step > 0))
    throw ConfigError("exclude: parameters out of range");
  if (s.estimates.samples < 2 || s.estimates.boxes.empty()) throw ConfigError("estimates: need samples and boxes");
  for (int bx : s.estimates.boxes)
    if (bx < 1) throw ConfigError("estimates.boxes must be positive");
}

}  // namespace

Scenario default_scenario() {
  Scenario s;
  auto [A, B] = cubic_pair();
  s.A = A.matrix().rows();
  s.B = B.matrix().rows();
  s.d2 = 1;
  s.phi = {{0.25, 0.5}};
  s.psi = {{0.6180339887498949}};
  s.perturbation.kind = "conjugated_linear";
  return s;
}

NormalFormCheck check_normal_form(const std::vector<std::vector<i64>>& f, const std::vector<std::vector<i64>>& g,
                                  int d2) {
  NormalFormCheck r;
  for (const auto* m : {&f, &g}) {
    const int d = static_cast<int>(m->size());
    const char* name = m == &f ? "linear_f" : "linear_g";
    if (d <= d2) {
      r.pass = false;
      r.message = std::string(name) + ": size must exceed d2";
      return r;
    }
    for (const auto& row : *m)
      if (static_cast<int>(row.size()) != d) {
        r.pass = false;
        r.message = std::string(name) + ": not square";
        return r;
      }
    const int d1 = d - d2;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const bool hyp_i = i < d1, hyp_j = j < d1;
        i64 want;
        if (hyp_i && hyp_j) continue;
        want = (!hyp_i && !hyp_j && i == j) ? 1 : 0;
        if ((*m)[i][j] != want) {
          r.pass = false;
          r.message = std::string(name) + ": entry (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") breaks the (A x Id) block form";
          return r;
        }
      }
  }
  if (f.size() != g.size()) {
    r.pass = false;
    r.message = "linear_f and linear_g have different sizes";
  }
  return r;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  allow_keys(j, {"seed", "threads", "action", "parameters", "perturbation", "scheme", "check", "solve", "exclude",
                 "estimates"},
             "scenario");
  Scenario s;
  s.A.clear();
  s.B.clear();
  read(j, "seed", s.seed, "scenario");
  read(j, "threads", s.threads, "scenario");

  if (!j.contains("action")) throw ConfigError("scenario: missing action");
  const json& a = j.at("action");
  allow_keys(a, {"A", "B", "linear_f", "linear_g", "d2", "phi", "psi"}, "action");
  read(a, "d2", s.d2, "action");
  const bool blocks = a.contains("A") || a.contains("B");
  const bool full = a.contains("linear_f") || a.contains("linear_g");
  if (blocks == full) throw ConfigError("action: give either A and B or linear_f and linear_g");
  if (blocks) {
    if (!a.contains("A") || !a.contains("B")) throw ConfigError("action: A and B are both required");
    s.A = read_matrix(a.at("A"), "action.A");
    s.B = read_matrix(a.at("B"), "action.B");
  } else {
    if (!a.contains("linear_f") || !a.contains("linear_g"))
      throw ConfigError("action: linear_f and linear_g are both required");
    const auto f = read_matrix(a.at("linear_f"), "action.linear_f");
    const auto g = read_matrix(a.at("linear_g"), "action.linear_g");
    const NormalFormCheck nf = check_normal_form(f, g, s.d2);
    if (!nf.pass) throw ConfigError("action: " + nf.message);
    const int d1 = static_cast<int>(f.size()) - s.d2;
    s.A = block(f, 0, d1);
    s.B = block(g, 0, d1);
  }
  if (!a.contains("phi") || !a.contains("psi")) throw ConfigError("action: phi and psi are required");
  s.phi = read_poly(a.at("phi"), "action.phi");
  s.psi = read_poly(a.at("psi"), "action.psi");

  if (j.contains("parameters")) {
    const json& p = j.at("parameters");
    allow_keys(p, {"t_lo", "t_hi", "nodes", "node_offset"}, "parameters");
    read(p, "t_lo", s.t_lo, "parameters");
    read(p, "t_hi", s.t_hi, "parameters");
    read(p, "nodes", s.nodes, "parameters");
    read(p, "node_offset", s.node_offset, "parameters");
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    allow_keys(p, {"kind", "coefficients", "generator", "amplitude", "box", "grid"}, "perturbation");
    auto& o = s.perturbation;
    read(p, "kind", o.kind, "perturbation");
    read(p, "generator", o.generator, "perturbation");
    read(p, "amplitude", o.amplitude, "perturbation");
    read(p, "box", o.box, "perturbation");
    read(p, "grid", o.grid, "perturbation");
    if (p.contains("coefficients")) {
      if (!p.at("coefficients").is_array()) throw ConfigError("perturbation.coefficients: expected an array");
      for (const auto& c : p.at("coefficients")) o.coefficients.push_back(read_coefficient(c, "perturbation.coefficients"));
    }
  }
  if (j.contains("scheme")) {
    const json& p = j.at("scheme");
    const std::string w = "scheme";
    allow_keys(p, {"N0", "max_iterations", "target", "floor", "M", "b", "max_exclusion_level", "grid", "box",
                   "eval_tol", "exclude", "verify_chain", "cross_check", "bookkeeping", "bisection_steps",
                   "verify_density", "conj_tol"},
               w);
    auto& o = s.scheme;
    read(p, "N0", o.N0, w);
    read(p, "max_iterations", o.max_iterations, w);
    read(p, "target", o.target, w);
    read(p, "floor", o.floor, w);
    read(p, "M", o.M, w);
    read(p, "b", o.b, w);
    read(p, "max_exclusion_level", o.max_exclusion_level, w);
    read(p, "grid", o.grid, w);
    read(p, "box", o.box, w);
    read(p, "eval_tol", o.eval_tol, w);
    read(p, "exclude", o.exclude, w);
    read(p, "verify_chain", o.verify_chain, w);
    read(p, "cross_check", o.cross_check, w);
    read(p, "bookkeeping", o.bookkeeping, w);
    read(p, "bisection_steps", o.bisection_steps, w);
    read(p, "verify_density", o.verify_density, w);
    read(p, "conj_tol", o.conj_tol, w);
  }
  if (j.contains("check")) {
    const json& p = j.at("check");
    allow_keys(p, {"K", "nu", "pyartli_nodes", "t", "tau", "gamma", "K_max"}, "check");
    auto& o = s.check;
    read(p, "K", o.K, "check");
    read(p, "nu", o.nu, "check");
    read(p, "pyartli_nodes", o.pyartli_nodes, "check");
    read(p, "t", o.t, "check");
    read(p, "tau", o.tau, "check");
    read(p, "gamma", o.gamma, "check");
    read(p, "K_max", o.K_max, "check");
  }
  if (j.contains("solve")) {
    const json& p = j.at("solve");
    allow_keys(p, {"t", "box", "amplitude", "grid", "samples", "tol"}, "solve");
    auto& o = s.solve;
    read(p, "t", o.t, "solve");
    read(p, "box", o.box, "solve");
    read(p, "amplitude", o.amplitude, "solve");
    read(p, "grid", o.grid, "solve");
    read(p, "samples", o.samples, "solve");
    read(p, "tol", o.tol, "solve");
  }
  if (j.contains("exclude")) {
    const json& p = j.at("exclude");
    allow_keys(p, {"N", "M", "histogram_bins", "gap_step"}, "exclude");
    auto& o = s.exclude;
    read(p, "N", o.N, "exclude");
    read(p, "M", o.M, "exclude");
    read(p, "histogram_bins", o.histogram_bins, "exclude");
    read(p, "gap_step", o.gap_step, "exclude");
  }
  if (j.contains("estimates")) {
    const json& p = j.at("estimates");
    allow_keys(p, {"samples", "boxes", "s", "drift_tol", "ratio_threshold", "inversion_max"}, "estimates");
    auto& o = s.estimates;
    read(p, "samples", o.samples, "estimates");
    read(p, "boxes", o.boxes, "estimates");
    read(p, "s", o.s, "estimates");
    read(p, "drift_tol", o.drift_tol, "estimates");
    read(p, "ratio_threshold", o.ratio_threshold, "estimates");
    read(p, "inversion_max", o.inversion_max, "estimates");
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_text(const Scenario& s) {
  json j;
  j["seed"] = s.seed;
  j["threads"] = s.threads;
  j["action"] = {{"A", matrix_json(s.A)}, {"B", matrix_json(s.B)}, {"d2", s.d2}, {"phi", s.phi}, {"psi", s.psi}};
  j["parameters"] = {{"t_lo", s.t_lo}, {"t_hi", s.t_hi}, {"nodes", s.nodes}, {"node_offset", s.node_offset}};
  json coefs = json::array();
  for (const auto& c : s.perturbation.coefficients)
    coefs.push_back({{"map", c.map}, {"component", c.component}, {"index", c.index}, {"re", c.re}, {"im", c.im}});
  const auto& p = s.perturbation;
  j["perturbation"] = {{"kind", p.kind},     {"coefficients", coefs}, {"generator", p.generator},
                       {"amplitude", p.amplitude}, {"box", p.box},  {"grid", p.grid}};
  const auto& sc = s.scheme;
  j["scheme"] = {{"N0", sc.N0},
                 {"max_iterations", sc.max_iterations},
                 {"target", sc.target},
                 {"floor", sc.floor},
                 {"M", sc.M},
                 {"b", sc.b},
                 {"max_exclusion_level", sc.max_exclusion_level},
                 {"grid", sc.grid},
                 {"box", sc.box},
                 {"eval_tol", sc.eval_tol},
                 {"exclude", sc.exclude},
                 {"verify_chain", sc.verify_chain},
                 {"cross_check", sc.cross_check},
                 {"bookkeeping", sc.bookkeeping},
                 {"bisection_steps", sc.bisection_steps},
                 {"verify_density", sc.verify_density},
                 {"conj_tol", sc.conj_tol}};
  const auto& c = s.check;
  j["check"] = {{"K", c.K},     {"nu", c.nu},       {"pyartli_nodes", c.pyartli_nodes}, {"t", c.t},
                {"tau", c.tau}, {"gamma", c.gamma}, {"K_max", c.K_max}};
  const auto& v = s.solve;
  j["solve"] = {{"t", v.t},       {"box", v.box},         {"amplitude", v.amplitude},
                {"grid", v.grid}, {"samples", v.samples}, {"tol", v.tol}};
  const auto& e = s.exclude;
  j["exclude"] = {{"N", e.N}, {"M", e.M}, {"histogram_bins", e.histogram_bins}, {"gap_step", e.gap_step}};
  const auto& es = s.estimates;
  j["estimates"] = {{"samples", es.samples},     {"boxes", es.boxes},
                    {"s", es.s},                 {"drift_tol", es.drift_tol},
                    {"ratio_threshold", es.ratio_threshold}, {"inversion_max", es.inversion_max}};
  return j.dump(2) + "\n";
}

FrequencyFamily scenario_phi(const Scenario& s) { return FrequencyFamily::polynomial(s.t_lo, s.t_hi, s.phi); }
FrequencyFamily scenario_psi(const Scenario& s) { return FrequencyFamily::polynomial(s.t_lo, s.t_hi, s.psi); }
TorusAutomorphism scenario_A(const Scenario& s) { return TorusAutomorphism::from_rows(s.A); }
TorusAutomorphism scenario_B(const Scenario& s) { return TorusAutomorphism::from_rows(s.B); }

std::vector<double> scenario_nodes(const Scenario& s) {
  std::vector<double> t = ParamFamily::uniform(s.t_lo, s.t_hi, s.nodes).nodes;
  if (s.node_offset >= 0)
    for (int q = 0; q < s.nodes; ++q) t[q] = s.t_lo + (q + s.node_offset) * (s.t_hi - s.t_lo) / s.nodes;
  return t;
}

namespace {

VectorField coefficient_field(const Scenario& s, const std::string& map, bool any_map, double scale) {
  const int d1 = s.d1(), d2 = s.d2, box = s.perturbation.box;
  VectorField v = VectorField::zeros(d1 + d2, d1, d2, box);
  for (const auto& c : s.perturbation.coefficients) {
    if (!any_map && c.map != map) continue;
    const cplx z = scale * cplx(c.re, c.im);
    FourierField& f = v.comp[c.component];
    std::vector<int> neg(c.index.size());
    for (size_t a = 0; a < neg.size(); ++a) neg[a] = -c.index[a];
    if (neg == c.index) {
      f.set(c.index, f.get(c.index) + z);
    } else {
      f.set(c.index, f.get(c.index) + z);
      f.set(neg, f.get(neg) + std::conj(z));
    }
  }
  return v;
}

}  // namespace

ActionPair build_pair(const Scenario& s) {
  const TorusAutomorphism A = scenario_A(s), B = scenario_B(s);
  const FrequencyFamily phi = scenario_phi(s), psi = scenario_psi(s);
  const auto& p = s.perturbation;
  if (p.kind == "conjugated_linear") {
    const VectorField h0 =
        p.generator == "cubic_fixture" ? cubic_fixture_generator(p.amplitude) : coefficient_field(s, "", true, p.amplitude);
    ConjugatedPairOptions o;
    o.nodes = s.nodes;
    o.t_lo = s.t_lo;
    o.t_hi = s.t_hi;
    o.node_offset = s.node_offset;
    o.box = p.box;
    o.grid = p.grid;
    return conjugated_linear_pair(A, B, s.d2, phi, psi, h0, o).pair;
  }
  ActionPair pair;
  pair.d1 = s.d1();
  pair.d2 = s.d2;
  pair.A = A;
  pair.B = B;
  pair.phi = phi;
  pair.psi = psi;
  pair.df = ParamFamily::uniform(s.t_lo, s.t_hi, s.nodes);
  pair.df.nodes = scenario_nodes(s);
  pair.dg = pair.df;
  const VectorField f = coefficient_field(s, "f", false, 1.0), g = coefficient_field(s, "g", false, 1.0);
  pair.df.values.assign(s.nodes, f);
  pair.dg.values.assign(s.nodes, g);
  pair.validate();
  return pair;
}

SchemeConfig build_scheme_config(const Scenario& s) {
  SchemeConfig c;
  const auto& o = s.scheme;
  c.N0 = o.N0;
  c.max_iterations = o.max_iterations;
  c.target = o.target;
  c.floor = o.floor;
  c.M = o.M;
  c.b = o.b;
  c.max_exclusion_level = o.max_exclusion_level;
  c.exclude = o.exclude;
  c.verify_chain = o.verify_chain;
  c.step.grid = o.grid;
  c.step.box = o.box;
  c.step.b = o.b;
  c.step.eval_tol = o.eval_tol;
  c.step.cross_check = o.cross_check;
  c.step.bookkeeping = o.bookkeeping;
  c.step.threads = s.threads;
  c.exclusion.bisection_steps = o.bisection_steps;
  c.exclusion.verify_density = o.verify_density;
  c.exclusion.b = o.b;
  return c;
}

}  // namespace kt
