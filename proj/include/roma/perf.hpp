#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roma/topology.hpp"

namespace roma {

// All capacities use decimal megabytes (1 MB = 10^6 bytes); that is the
// unique convention under which one linear model reproduces the published
// token-capacity points exactly.

struct CapacityParams {
  int64_t kv_bytes_per_token = 62'500;
  int64_t lora_bytes_per_rank = 1'125'000;
  int64_t sram_budget_bytes = 304'000'000;
};

int64_t max_tokens(const CapacityParams& p, int rank);

// Solves the two-point linear system (budget = lora + tokens * kv) for the
// calibrated constants; throws unless the points admit an exact integer
// solution, so refitting from the same anchors is deterministic.
CapacityParams fit_capacity(int64_t budget1, int64_t tokens1, int64_t budget2, int64_t tokens2,
                            int rank, int64_t default_budget);

// Decode throughput 1 / (t0 + kv * tkv), stored through its two fit anchors
// and evaluated in a form that returns the anchor rates bit-exactly.
struct DecodeModel {
  double rate_empty = 0.0;   // tokens/s with an empty cache
  double anchor_kv = 0.0;    // cached tokens at the second anchor
  double rate_anchor = 0.0;  // tokens/s at anchor_kv

  double rate(double kv_len) const;
  double t0_s() const { return 1.0 / rate_empty; }
  double tkv_s() const { return (1.0 / rate_anchor - 1.0 / rate_empty) / anchor_kv; }
};

// Prefill time a*L + b*L^2 + rank * c * L, stored through the two anchors
// (len1, time1), (len2, time2) measured at rank_ref; evaluation interpolates
// the anchors so they reproduce bit-exactly at rank_ref.
struct PrefillModel {
  double len1 = 0.0, time1_s = 0.0;
  double len2 = 0.0, time2_s = 0.0;
  double rank_ref = 16.0;
  double lora_coeff_s = 0.0;  // seconds per rank unit per token

  double time_s(double seq_len, double rank) const;
  double quad_coeff_s() const;         // b
  double lin_coeff_at_ref_s() const;   // a + rank_ref * c
};

// (prefill(L, r2) - prefill(L, r1)) / prefill(L, r1)
double rank_sensitivity(const PrefillModel& m, double seq_len, double r1, double r2);

// Transformer geometry needed for the analytic cross-checks and the
// adapter cost coefficient.
struct ModelDims {
  std::string name;
  int layers = 0;
  int hidden = 0;
  int heads = 0;
  int kv_heads = 0;
  int head_dim = 0;
  int mlp = 0;
  int vocab = 0;
  int bit_width = 4;

  int64_t base_macs_per_token() const;       // projection MACs per layer stack
  int64_t lora_macs_per_rank_token() const;  // all seven projections attached
  int64_t lora_bytes_per_rank() const;       // fp8, A and B factors
  int64_t kv_bytes_per_token() const;        // fp16 K and V
};

ModelDims dims_3b4();  // Llama-3.2-3B-class geometry, 4-bit base
ModelDims dims_8b2();  // Llama-3-8B-class geometry, 2-bit base

enum class Provenance { kAnchor, kFit, kDerived };
const char* provenance_name(Provenance p);

struct PerfModel {
  std::string name;
  ModelDims dims;
  CapacityParams capacity;
  bool capacity_calibrated = false;  // anchors from published points vs analytic bytes
  DecodeModel decode;
  PrefillModel prefill;
  std::vector<std::string> anchor_notes;  // provenance of every fitted constant
};

PerfModel perf_model_3b4();
PerfModel perf_model_8b2();
PerfModel perf_model(const std::string& name);  // "3b4" | "8b2"

// Warns when the calibrated per-rank adapter bytes disagree with the
// model's analytic count by more than 2x in either direction.
std::optional<std::string> capacity_crosscheck(const CapacityParams& p, const ModelDims& dims);

// ---------------------------------------------------------------------------

struct PpaClass {
  std::string name;
  double area_frac = 0.0;
  double power_frac = 0.0;
};

struct PpaParams {
  double area_mm2 = 503.7;
  double power_w = 33.1;
  double rom_bytes = 1.86e9;
  double sram_bytes = 304e6;
  std::vector<PpaClass> classes;

  static PpaParams defaults();
};

struct PpaRow {
  std::string unit_class;
  double area_mm2 = 0.0;
  double power_w = 0.0;
  double area_frac = 0.0;
  double power_frac = 0.0;
};

struct PpaReport {
  double total_area_mm2 = 0.0;
  double total_power_w = 0.0;
  std::vector<PpaRow> rows;
};

// Splits the chip totals across unit classes; validates that fractions sum
// to one and that the matrix-unit halves hold the top two area shares.
PpaReport ppa_report(const PpaParams& params, const ChipTopology& topo);

}  // namespace roma
