#include "roma/perf.hpp"

#include <cmath>

#include "roma/error.hpp"

namespace roma {

int64_t max_tokens(const CapacityParams& p, int rank) {
  if (p.kv_bytes_per_token <= 0 || p.lora_bytes_per_rank <= 0 || p.sram_budget_bytes <= 0) {
    throw RomaError(ErrorCode::kValidation, "max_tokens: params must be positive");
  }
  int64_t free_bytes = p.sram_budget_bytes - static_cast<int64_t>(rank) * p.lora_bytes_per_rank;
  if (free_bytes <= 0) return 0;
  return free_bytes / p.kv_bytes_per_token;
}

CapacityParams fit_capacity(int64_t budget1, int64_t tokens1, int64_t budget2, int64_t tokens2,
                            int rank, int64_t default_budget) {
  if (tokens2 == tokens1) throw RomaError(ErrorCode::kValidation, "fit_capacity: degenerate anchors");
  int64_t dbudget = budget2 - budget1;
  int64_t dtokens = tokens2 - tokens1;
  if (dbudget % dtokens != 0) {
    throw RomaError(ErrorCode::kValidation, "fit_capacity: anchors admit no exact kv bytes/token");
  }
  CapacityParams p;
  p.kv_bytes_per_token = dbudget / dtokens;
  int64_t lora_total = budget1 - tokens1 * p.kv_bytes_per_token;
  if (lora_total < 0 || lora_total % rank != 0) {
    throw RomaError(ErrorCode::kValidation, "fit_capacity: anchors admit no exact adapter bytes");
  }
  p.lora_bytes_per_rank = lora_total / rank;
  p.sram_budget_bytes = default_budget;
  return p;
}

double DecodeModel::rate(double kv_len) const {
  // 1/(t0 + kv*tkv) rewritten over the anchors: exact at kv = 0 and at
  // kv = anchor_kv instead of round-tripping through reciprocals.
  double num = rate_empty * rate_anchor * anchor_kv;
  double den = rate_anchor * anchor_kv + kv_len * (rate_empty - rate_anchor);
  return num / den;
}

double PrefillModel::time_s(double seq_len, double rank) const {
  // Lagrange form of a*L + b*L^2 through the anchors: the weights are
  // exactly 1 and 0 at the anchor lengths.
  double den = len1 * len2 * len2 - len1 * len1 * len2;
  double w1 = (seq_len * len2 * len2 - seq_len * seq_len * len2) / den;
  double w2 = (seq_len * seq_len * len1 - seq_len * len1 * len1) / den;
  return time1_s * w1 + time2_s * w2 + (rank - rank_ref) * lora_coeff_s * seq_len;
}

double PrefillModel::quad_coeff_s() const {
  return (time2_s / len2 - time1_s / len1) / (len2 - len1);
}

double PrefillModel::lin_coeff_at_ref_s() const {
  return time1_s / len1 - quad_coeff_s() * len1;
}

double rank_sensitivity(const PrefillModel& m, double seq_len, double r1, double r2) {
  if (r1 > r2) throw RomaError(ErrorCode::kValidation, "rank_sensitivity: r1 must be <= r2");
  double base = m.time_s(seq_len, r1);
  return (m.time_s(seq_len, r2) - base) / base;
}

int64_t ModelDims::base_macs_per_token() const {
  int64_t kv_dim = static_cast<int64_t>(kv_heads) * head_dim;
  int64_t per_layer = 2 * static_cast<int64_t>(hidden) * hidden    // q, o
                      + 2 * static_cast<int64_t>(hidden) * kv_dim  // k, v
                      + 3 * static_cast<int64_t>(hidden) * mlp;    // gate, up, down
  return per_layer * layers;
}

int64_t ModelDims::lora_macs_per_rank_token() const {
  int64_t kv_dim = static_cast<int64_t>(kv_heads) * head_dim;
  int64_t per_layer = 2 * (hidden + static_cast<int64_t>(hidden))    // q, o
                      + 2 * (hidden + kv_dim)                        // k, v
                      + 2 * (hidden + static_cast<int64_t>(mlp))     // gate, up
                      + (mlp + static_cast<int64_t>(hidden));        // down
  return per_layer * layers;
}

int64_t ModelDims::lora_bytes_per_rank() const {
  return lora_macs_per_rank_token();  // one fp8 byte per adapter element
}

int64_t ModelDims::kv_bytes_per_token() const {
  return static_cast<int64_t>(layers) * 2 * kv_heads * head_dim * 2;
}

ModelDims dims_3b4() {
  return {"3b4", 28, 3072, 24, 8, 128, 8192, 128256, 4};
}

ModelDims dims_8b2() {
  return {"8b2", 32, 4096, 32, 8, 128, 14336, 128256, 2};
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kAnchor: return "anchor";
    case Provenance::kFit: return "fit";
    case Provenance::kDerived: return "derived";
  }
  return "?";
}

namespace {

// Adapter coefficient from the rank-relative compute ratio: the per-token
// linear cost A measured at rank_ref splits as a + ref*c with c = a * rho,
// rho being the adapter-to-base MAC ratio per rank unit.
double lora_coeff_from_dims(const PrefillModel& m, const ModelDims& dims) {
  double rho = static_cast<double>(dims.lora_macs_per_rank_token()) /
               static_cast<double>(dims.base_macs_per_token());
  double lin_ref = m.lin_coeff_at_ref_s();
  double a = lin_ref / (1.0 + m.rank_ref * rho);
  return a * rho;
}

}  // namespace

PerfModel perf_model_3b4() {
  PerfModel pm;
  pm.name = "3b4";
  pm.dims = dims_3b4();
  // Published token-capacity points at rank 16: (64 MB, 736), (256 MB, 3808).
  pm.capacity = fit_capacity(64'000'000, 736, 256'000'000, 3808, 16, 304'000'000);
  pm.capacity_calibrated = true;
  // Published decode rates: 31.8k tokens/s empty, 24.6k at 1k cached.
  pm.decode = {31'800.0, 1024.0, 24'600.0};
  // Published prefill times at rank 16: 5.6 ms at 256 tokens, 140.2 ms at 4096.
  pm.prefill = {256.0, 5.6e-3, 4096.0, 140.2e-3, 16.0, 0.0};
  pm.prefill.lora_coeff_s = lora_coeff_from_dims(pm.prefill, pm.dims);
  pm.anchor_notes = {
      "capacity: fit of (64 MB, rank 16) -> 736 and (256 MB, rank 16) -> 3808 tokens",
      "decode: anchors 31800 tokens/s at empty cache, 24600 tokens/s at 1024 cached",
      "prefill: anchors 5.6 ms at 256 tokens and 140.2 ms at 4096, rank 16",
      "adapter coefficient: derived from the rank-relative MAC ratio of the geometry",
  };
  return pm;
}

PerfModel perf_model_8b2() {
  PerfModel pm;
  pm.name = "8b2";
  pm.dims = dims_8b2();
  // No published capacity points for this model; use the analytic fp16
  // cache and fp8 adapter byte counts.
  pm.capacity = {pm.dims.kv_bytes_per_token(), pm.dims.lora_bytes_per_rank(), 304'000'000};
  pm.capacity_calibrated = false;
  // Published peak 24.1k tokens/s; the cache-read slope scales with the
  // layer count from the calibrated sibling model.
  PerfModel base = perf_model_3b4();
  pm.decode.rate_empty = 24'100.0;
  pm.decode.anchor_kv = 1024.0;
  double tkv = base.decode.tkv_s() * pm.dims.layers / base.dims.layers;
  pm.decode.rate_anchor = 1.0 / (1.0 / pm.decode.rate_empty + pm.decode.anchor_kv * tkv);
  // Prefill scales with bit-serial weight work: MACs weighted by bit width.
  double scale = (static_cast<double>(pm.dims.base_macs_per_token()) * pm.dims.bit_width) /
                 (static_cast<double>(base.dims.base_macs_per_token()) * base.dims.bit_width);
  pm.prefill = {256.0, base.prefill.time1_s * scale, 4096.0, base.prefill.time2_s * scale, 16.0, 0.0};
  pm.prefill.lora_coeff_s = lora_coeff_from_dims(pm.prefill, pm.dims);
  pm.anchor_notes = {
      "capacity: analytic fp16 cache + fp8 adapter byte counts (no published points)",
      "decode: anchor 24100 tokens/s at empty cache; slope scaled from the 3b4 fit by layer count",
      "prefill: 3b4 anchors scaled by bit-weighted MAC ratio (no published times)",
      "adapter coefficient: derived from the rank-relative MAC ratio of the geometry",
  };
  return pm;
}

PerfModel perf_model(const std::string& name) {
  if (name == "3b4") return perf_model_3b4();
  if (name == "8b2") return perf_model_8b2();
  throw RomaError(ErrorCode::kValidation, "unknown model: " + name + " (expected 3b4 or 8b2)");
}

std::optional<std::string> capacity_crosscheck(const CapacityParams& p, const ModelDims& dims) {
  double analytic = static_cast<double>(dims.lora_bytes_per_rank());
  double calibrated = static_cast<double>(p.lora_bytes_per_rank);
  double ratio = analytic / calibrated;
  if (ratio > 2.0 || ratio < 0.5) {
    return "model mismatch: calibrated adapter bytes/rank " + std::to_string(p.lora_bytes_per_rank) +
           " vs analytic " + std::to_string(dims.lora_bytes_per_rank()) + " for " + dims.name;
  }
  return std::nullopt;
}

PpaParams PpaParams::defaults() {
  PpaParams p;
  // Breakdown fractions are layout constants; the published breakdown is
  // graphical, so only the ordering (matrix-unit halves on top) is load
  // bearing.
  p.classes = {
      {"l_unit", 0.46, 0.42},
      {"h_unit", 0.27, 0.31},
      {"vector_unit", 0.15, 0.16},
      {"router_other", 0.12, 0.11},
  };
  return p;
}

PpaReport ppa_report(const PpaParams& params, const ChipTopology& topo) {
  double area_sum = 0.0, power_sum = 0.0;
  for (const auto& c : params.classes) {
    area_sum += c.area_frac;
    power_sum += c.power_frac;
  }
  if (std::abs(area_sum - 1.0) > 1e-9 || std::abs(power_sum - 1.0) > 1e-9) {
    throw RomaError(ErrorCode::kValidation, "ppa_report: breakdown fractions must sum to 1");
  }
  if (topo.matrix_units() < 1) throw RomaError(ErrorCode::kValidation, "ppa_report: bad topology");

  PpaReport r;
  r.total_area_mm2 = params.area_mm2;
  r.total_power_w = params.power_w;
  for (const auto& c : params.classes) {
    r.rows.push_back({c.name, c.area_frac * params.area_mm2, c.power_frac * params.power_w,
                      c.area_frac, c.power_frac});
  }
  return r;
}

}  // namespace roma
