#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "kamtorus/estimates.hpp"
#include "kamtorus/exclusion.hpp"
#include "kamtorus/kam_engine.hpp"
#include "kamtorus/lattice.hpp"

namespace kt {

// Doubles print with 17 significant digits, so equal values give equal bytes.
std::string format_number(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  // cells are preformatted; the row must match the header width
  void add_row(std::vector<std::string> cells);
  size_t rows() const { return rows_.size(); }
  std::string text() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double x);
std::string num(int x);
std::string num(size_t x);

nlohmann::json to_json(const DiophantineCert& c);
nlohmann::json to_json(const ExclusionCert& c);
nlohmann::json to_json(const ParamSet& s);
nlohmann::json to_json(const HrReport& r);
nlohmann::json to_json(const PyartliResult& r);
nlohmann::json to_json(const SdcResult& r);
nlohmann::json to_json(const NodeStepReport& r);
nlohmann::json to_json(const IterationRecord& r);  // without timing
nlohmann::json to_json(const NodeVerdict& v);
nlohmann::json to_json(const SchemeReport& r);     // without timing
nlohmann::json to_json(const EstimateReport& r);

// Per-iteration table: iteration, N, kept_measure, eps0, eps_r0, max_h_norm. eps0 is the
// largest Wiener 0-norm of the new errors over the nodes, eps_r0 the same for the 1-norm.
CsvTable iteration_table(const SchemeReport& r);
// node, t, step, eps: the error of every surviving node after each accepted step
CsvTable error_table(const SchemeReport& r);
// iteration, N, Ntilde, kept_measure, bound_product
CsvTable kept_measure_table(const SchemeReport& r);
// node, t, survived, reason, steps, conj_error_f, conj_error_g, chain_roundtrip, final_error
CsvTable node_table(const SchemeReport& r);
// bin_lo, bin_hi, count over log10 of the values, bins equally spaced between the extremes
CsvTable log_histogram(const std::vector<double>& values, int bins);

void write_json(const nlohmann::json& j, const std::string& path);

// Field layout: {"d1", "d2", "box", "coefficients": [[n..., m..., re, im], ...]} with the
// nonzero coefficients in storage order. Vector fields: {"components": [field, ...]}.
nlohmann::json field_to_json(const FourierField& v);
FourierField field_from_json(const nlohmann::json& j);
nlohmann::json field_to_json(const VectorField& v);
VectorField vector_field_from_json(const nlohmann::json& j);
// n_1..n_d1, m_1..m_d2, re, im for every nonzero coefficient
CsvTable coefficient_table(const FourierField& v);

}  // namespace kt
