#include "kamtorus/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace kt {

using nlohmann::json;

namespace {

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

// JSON has no inf or nan; keep them readable instead of null.
json real_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  out << text;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string num(double x) { return format_number(x); }
std::string num(int x) { return std::to_string(x); }
std::string num(size_t x) { return std::to_string(x); }

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw DimensionError("csv: row width does not match the header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::text() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

void CsvTable::write(const std::string& path) const { write_text(text(), path); }

void write_json(const json& j, const std::string& path) { write_text(j.dump(2) + "\n", path); }

json to_json(const DiophantineCert& c) {
  json gaps = json::array();
  for (const auto& g : c.min_gaps) gaps.push_back({{"lambda", cplx_json(g.lambda)}, {"k", g.k}, {"gap", g.gap}});
  return {{"N", c.N}, {"b", c.b}, {"threshold", c.threshold}, {"automorphism", c.automorphism},
          {"min_gaps", gaps}, {"pass", c.pass}};
}

json to_json(const ExclusionCert& c) {
  return {{"N", c.N},
          {"Ntilde", c.Ntilde},
          {"M", c.M},
          {"d_count", c.d_count},
          {"radius", c.radius},
          {"min_fragment", c.min_fragment},
          {"input_measure", c.input_measure},
          {"kept_measure", c.kept_measure},
          {"removed_measure", c.removed_measure},
          {"discarded_measure", c.discarded_measure},
          {"bound", c.bound},
          {"roots", c.roots},
          {"verify_density", c.verify_density},
          {"verify_points", c.verify_points},
          {"verify_failures", c.verify_failures}};
}

json to_json(const ParamSet& s) {
  json a = json::array();
  for (const auto& iv : s.intervals()) a.push_back({iv.lo, iv.hi});
  return {{"measure", s.measure()}, {"intervals", a}};
}

json to_json(const HrReport& r) {
  json j = {{"pass", r.pass}, {"K", r.K}};
  if (r.witness) j["witness"] = {r.witness->first, r.witness->second};
  return j;
}

json to_json(const PyartliResult& r) {
  return {{"pass", r.pass}, {"min_det", r.min_det}, {"witness_t", r.witness_t}, {"norm", r.norm}};
}

json to_json(const SdcResult& r) {
  return {{"pass", r.pass}, {"min_margin", real_json(r.min_margin)}, {"witness_k", r.witness_k}, {"K_max", r.K_max}};
}

json to_json(const NodeStepReport& r) {
  json j = {{"t", r.t},
            {"ok", r.ok},
            {"eps_in", r.eps_in},
            {"eps_out", r.eps_out},
            {"eps1_in", r.eps1_in},
            {"eps1_out", r.eps1_out},
            {"h_norm", r.h_norm},
            {"h_box", r.h_box},
            {"h_dropped", r.h_dropped},
            {"dphi", r.dphi},
            {"dpsi", r.dpsi},
            {"avg_f", r.avg_f},
            {"avg_g", r.avg_g},
            {"defect_in", r.defect_in},
            {"defect_out", r.defect_out},
            {"bookkeeping", r.bookkeeping},
            {"removal_l1", r.removal_l1},
            {"solve_disagreement", r.solve_disagreement},
            {"inverse_iterations", r.inverse_iterations},
            {"inverse_roundtrip", r.inverse_roundtrip},
            {"min_gap", r.min_gap},
            {"eval_order", r.eval_order}};
  if (!r.ok) {
    j["failure"] = r.failure;
    j["message"] = r.message;
  }
  return j;
}

json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration}, {"N", r.N},
          {"Ntilde", r.Ntilde},       {"kept_measure", r.kept_measure},
          {"bound_product", r.bound_product}, {"eps_in", r.eps_in},
          {"eps_out", r.eps_out},     {"eps1_out", r.eps1_out},
          {"max_h_norm", r.max_h_norm}, {"alive", r.alive},
          {"exclusion", to_json(r.cert)}};
}

json to_json(const NodeVerdict& v) {
  return {{"t", v.t},
          {"survived", v.survived},
          {"reason", v.reason},
          {"steps", v.steps},
          {"eps", v.eps},
          {"phi_inf", v.phi_inf},
          {"psi_inf", v.psi_inf},
          {"conj_error_f", v.conj_error_f},
          {"conj_error_g", v.conj_error_g},
          {"chain_roundtrip", v.chain_roundtrip},
          {"final_error", v.final_error}};
}

json to_json(const SchemeReport& r) {
  json its = json::array(), steps = json::array(), nodes = json::array();
  for (const auto& it : r.iterations) its.push_back(to_json(it));
  for (const auto& s : r.steps) {
    json a = json::array();
    for (const auto& n : s) a.push_back(to_json(n));
    steps.push_back(a);
  }
  for (const auto& v : r.nodes) nodes.push_back(to_json(v));
  return {{"converged", r.converged}, {"stop_reason", r.stop_reason},
          {"surviving_fraction", r.surviving_fraction}, {"kept", to_json(r.kept)},
          {"iterations", its},        {"steps", steps},
          {"nodes", nodes}};
}

json to_json(const EstimateReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    json lhs = json::array(), rhs = json::array();
    for (const auto& s : l.samples) {
      lhs.push_back(s.lhs);
      rhs.push_back(s.rhs);
    }
    levels.push_back({{"box", l.box}, {"max_ratio", l.max_ratio}, {"max_ratio_half", l.max_ratio_half},
                      {"lhs", lhs}, {"rhs", rhs}});
  }
  return {{"id", r.id},
          {"seed", r.seed},
          {"sample_count", r.sample_count},
          {"max_ratio", r.max_ratio},
          {"drift", r.drift},
          {"sample_drift", r.sample_drift},
          {"drift_tol", r.drift_tol},
          {"ratio_threshold", r.ratio_threshold},
          {"pass", r.pass},
          {"max_roundtrip", r.max_roundtrip},
          {"max_iterations", r.max_iterations},
          {"max_h_norm", r.max_h_norm},
          {"skipped", r.skipped},
          {"levels", levels}};
}

CsvTable iteration_table(const SchemeReport& r) {
  CsvTable t({"iteration", "N", "kept_measure", "eps0", "eps_r0", "max_h_norm"});
  for (const auto& it : r.iterations)
    t.add_row({num(it.iteration), num(it.N), num(it.kept_measure), num(it.eps_out), num(it.eps1_out),
               num(it.max_h_norm)});
  return t;
}

CsvTable error_table(const SchemeReport& r) {
  CsvTable t({"node", "t", "step", "eps"});
  for (size_t i = 0; i < r.nodes.size(); ++i)
    for (size_t k = 0; k < r.nodes[i].eps.size(); ++k)
      t.add_row({num(i), num(r.nodes[i].t), num(k), num(r.nodes[i].eps[k])});
  return t;
}

CsvTable kept_measure_table(const SchemeReport& r) {
  CsvTable t({"iteration", "N", "Ntilde", "kept_measure", "bound_product"});
  for (const auto& it : r.iterations)
    t.add_row({num(it.iteration), num(it.N), num(it.Ntilde), num(it.kept_measure), num(it.bound_product)});
  return t;
}

CsvTable node_table(const SchemeReport& r) {
  CsvTable t({"node", "t", "survived", "reason", "steps", "conj_error_f", "conj_error_g", "chain_roundtrip",
              "final_error"});
  for (size_t i = 0; i < r.nodes.size(); ++i) {
    const auto& v = r.nodes[i];
    t.add_row({num(i), num(v.t), v.survived ? "1" : "0", v.reason.empty() ? "-" : v.reason, num(v.steps),
               num(v.conj_error_f), num(v.conj_error_g), num(v.chain_roundtrip), num(v.final_error)});
  }
  return t;
}

CsvTable log_histogram(const std::vector<double>& values, int bins) {
  CsvTable t({"bin_lo", "bin_hi", "count"});
  std::vector<double> lg;
  for (double v : values)
    if (v > 0 && std::isfinite(v)) lg.push_back(std::log10(v));
  if (lg.empty() || bins < 1) return t;
  const auto [mn, mx] = std::minmax_element(lg.begin(), lg.end());
  const double lo = *mn, hi = *mx > *mn ? *mx : *mn + 1;
  std::vector<size_t> count(bins, 0);
  for (double x : lg) {
    int b = static_cast<int>((x - lo) / (hi - lo) * bins);
    count[std::clamp(b, 0, bins - 1)]++;
  }
  for (int b = 0; b < bins; ++b)
    t.add_row({num(std::pow(10.0, lo + (hi - lo) * b / bins)), num(std::pow(10.0, lo + (hi - lo) * (b + 1) / bins)),
               num(count[b])});
  return t;
}

json field_to_json(const FourierField& v) {
  json rows = json::array();
  for_each_index(v, [&](size_t off, const int* idx) {
    if (v[off] == cplx(0)) return;
    json row = json::array();
    for (int a = 0; a < v.dim(); ++a) row.push_back(idx[a]);
    row.push_back(v[off].real());
    row.push_back(v[off].imag());
    rows.push_back(row);
  });
  return {{"d1", v.d1()}, {"d2", v.d2()}, {"box", v.box()}, {"coefficients", rows}};
}

FourierField field_from_json(const json& j) {
  try {
    FourierField v(j.at("d1").get<int>(), j.at("d2").get<int>(), j.at("box").get<int>());
    const size_t d = static_cast<size_t>(v.dim());
    for (const auto& row : j.at("coefficients")) {
      if (row.size() != d + 2) throw DimensionError("field: coefficient row needs " + std::to_string(d + 2) + " entries");
      std::vector<int> idx(d);
      for (size_t a = 0; a < d; ++a) idx[a] = row[a].get<int>();
      if (!v.in_box(idx.data())) throw DimensionError("field: coefficient index outside the box");
      v.set(idx, cplx(row[d].get<double>(), row[d + 1].get<double>()));
    }
    return v;
  } catch (const json::exception& e) {
    throw DimensionError(std::string("field: malformed layout: ") + e.what());
  }
}

json field_to_json(const VectorField& v) {
  json c = json::array();
  for (const auto& f : v.comp) c.push_back(field_to_json(f));
  return {{"components", c}};
}

VectorField vector_field_from_json(const json& j) {
  if (!j.contains("components") || !j["components"].is_array()) throw DimensionError("field: missing components");
  VectorField v;
  for (const auto& c : j["components"]) v.comp.push_back(field_from_json(c));
  return v;
}

CsvTable coefficient_table(const FourierField& v) {
  std::vector<std::string> header;
  for (int a = 0; a < v.d1(); ++a) header.push_back("n" + std::to_string(a + 1));
  for (int a = 0; a < v.d2(); ++a) header.push_back("m" + std::to_string(a + 1));
  header.push_back("re");
  header.push_back("im");
  CsvTable t(header);
  for_each_index(v, [&](size_t off, const int* idx) {
    if (v[off] == cplx(0)) return;
    std::vector<std::string> row;
    for (int a = 0; a < v.dim(); ++a) row.push_back(num(idx[a]));
    row.push_back(num(v[off].real()));
    row.push_back(num(v[off].imag()));
    t.add_row(row);
  });
  return t;
}

}  // namespace kt
