#include "roma/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "roma/error.hpp"

namespace roma {
namespace {

int proj_index(const std::string& proj) {
  for (size_t i = 0; i < kAllProjections.size(); ++i) {
    if (kAllProjections[i] == proj) return static_cast<int>(i);
  }
  throw RomaError(ErrorCode::kValidation, "unknown projection: " + proj);
}

std::vector<Fp16> to_fp16(std::span<const double> x) {
  std::vector<Fp16> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = fp16_encode(x[i]);
  return out;
}

std::vector<double> to_f64(std::span<const Fp16> x) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = fp16_decode(x[i]);
  return out;
}

std::vector<Fp16> rmsnorm_cast(std::span<const Fp16> x, const std::vector<double>& w, double eps) {
  double ss = 0.0;
  std::vector<double> xd = to_f64(x);
  for (double v : xd) ss += v * v;
  double inv = 1.0 / std::sqrt(ss / static_cast<double>(xd.size()) + eps);
  std::vector<double> out(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] * inv * w[i];
  return to_fp16(out);
}

void rope_inplace(std::vector<double>& x, int pos, int head_dim, double base) {
  int half = head_dim / 2;
  for (size_t h0 = 0; h0 + head_dim <= x.size(); h0 += head_dim) {
    for (int i = 0; i < half; ++i) {
      double theta = pos * std::pow(base, -2.0 * i / head_dim);
      double c = std::cos(theta), s = std::sin(theta);
      double a = x[h0 + 2 * i], b = x[h0 + 2 * i + 1];
      x[h0 + 2 * i] = a * c - b * s;
      x[h0 + 2 * i + 1] = a * s + b * c;
    }
  }
}

// Base projection through the L-Unit path plus the fp8 adapter when attached.
std::vector<double> project(const Runtime& rt, const LayerWeights& lw, int pi,
                            std::span<const Fp16> x) {
  const QuantMatrix* mats[7] = {&lw.q, &lw.k, &lw.v, &lw.o, &lw.gate, &lw.up, &lw.down};
  std::vector<double> y = lunit_matvec(*mats[pi], x);
  if (lw.lora[pi]) {
    std::vector<double> adj = hunit_lora_matvec(*lw.lora[pi], x);
    for (size_t i = 0; i < y.size(); ++i) y[i] += adj[i];
  }
  (void)rt;
  return y;
}

}  // namespace

std::vector<double> attention_over_cache(const Runtime& rt, std::span<const Fp16> q,
                                         const KvCache& cache, int layer, int pos) {
  const ModelConfig& c = rt.cfg;
  int group = c.heads / c.kv_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(c.head_dim));
  std::vector<double> out(c.hidden, 0.0);
  std::vector<double> scores(pos + 1);
  for (int h = 0; h < c.heads; ++h) {
    int kvh = h / group;
    for (int j = 0; j <= pos; ++j) {
      auto kj = cache.k_at(layer, j);
      double s = 0.0;
      for (int d = 0; d < c.head_dim; ++d) {
        s += fp16_decode(q[h * c.head_dim + d]) * fp16_decode(kj[kvh * c.head_dim + d]);
      }
      scores[j] = s * scale;
    }
    double mx = scores[0];
    for (int j = 1; j <= pos; ++j) mx = std::max(mx, scores[j]);
    double z = 0.0;
    for (int j = 0; j <= pos; ++j) {
      scores[j] = std::exp(scores[j] - mx);
      z += scores[j];
    }
    for (int j = 0; j <= pos; ++j) {
      auto vj = cache.v_at(layer, j);
      double p = scores[j] / z;
      for (int d = 0; d < c.head_dim; ++d) {
        out[h * c.head_dim + d] += p * fp16_decode(vj[kvh * c.head_dim + d]);
      }
    }
  }
  return out;
}

std::vector<Fp16> forward_layer(const Runtime& rt, int layer, std::span<const Fp16> x,
                                KvCache& cache, int pos) {
  const ModelConfig& c = rt.cfg;
  const LayerWeights& lw = rt.layers[layer];

  std::vector<Fp16> h1 = rmsnorm_cast(x, lw.attn_norm, c.rms_eps);
  std::vector<double> qd = project(rt, lw, 0, h1);
  std::vector<double> kd = project(rt, lw, 1, h1);
  std::vector<double> vd = project(rt, lw, 2, h1);
  rope_inplace(qd, pos, c.head_dim, c.rope_base);
  rope_inplace(kd, pos, c.head_dim, c.rope_base);

  std::vector<Fp16> qf = to_fp16(qd);
  std::vector<Fp16> kf = to_fp16(kd);
  std::vector<Fp16> vf = to_fp16(vd);
  cache.k[layer].insert(cache.k[layer].end(), kf.begin(), kf.end());
  cache.v[layer].insert(cache.v[layer].end(), vf.begin(), vf.end());

  std::vector<double> attn = attention_over_cache(rt, qf, cache, layer, pos);
  std::vector<Fp16> attnf = to_fp16(attn);
  std::vector<double> od = project(rt, lw, 3, attnf);
  std::vector<double> x1(c.hidden);
  for (int i = 0; i < c.hidden; ++i) x1[i] = fp16_decode(x[i]) + od[i];
  std::vector<Fp16> x1f = to_fp16(x1);

  std::vector<Fp16> h2 = rmsnorm_cast(x1f, lw.mlp_norm, c.rms_eps);
  std::vector<double> g = project(rt, lw, 4, h2);
  std::vector<double> u = project(rt, lw, 5, h2);
  std::vector<double> act(c.mlp);
  for (int i = 0; i < c.mlp; ++i) act[i] = g[i] / (1.0 + std::exp(-g[i])) * u[i];  // SiLU gate
  std::vector<Fp16> actf = to_fp16(act);
  std::vector<double> dd = project(rt, lw, 6, actf);
  std::vector<double> x2(c.hidden);
  for (int i = 0; i < c.hidden; ++i) x2[i] = x1[i] + dd[i];
  return to_fp16(x2);
}

namespace {

std::vector<Fp16> embed_token(const Runtime& rt, int token) {
  if (token < 0 || token >= rt.cfg.vocab) {
    throw RomaError(ErrorCode::kValidation, "token id out of vocabulary range");
  }
  return to_fp16(dequant_row(rt.embed, token));
}

}  // namespace

int ModelConfig::proj_in(const std::string& proj) const {
  return proj == "down" ? mlp : hidden;
}

int ModelConfig::proj_out(const std::string& proj) const {
  if (proj == "q" || proj == "o" || proj == "down") return hidden;
  if (proj == "k" || proj == "v") return kv_dim();
  return mlp;  // gate, up
}

void ModelConfig::validate() const {
  if (layers < 1 || hidden < 1 || heads < 1 || kv_heads < 1 || head_dim < 1 || mlp < 1 ||
      vocab < 2) {
    throw RomaError(ErrorCode::kValidation, "config: dimensions must be positive");
  }
  if (hidden != heads * head_dim) {
    throw RomaError(ErrorCode::kValidation, "config: hidden must equal heads * head_dim");
  }
  if (heads % kv_heads != 0) {
    throw RomaError(ErrorCode::kValidation, "config: kv_heads must divide heads");
  }
  if (bit_width != 2 && bit_width != 4) {
    throw RomaError(ErrorCode::kValidation, "config: bit_width must be 2 or 4");
  }
  if (lora_rank < 0) throw RomaError(ErrorCode::kValidation, "config: negative adapter rank");
  if (sram_budget_bytes < 1) {
    throw RomaError(ErrorCode::kValidation, "config: sram_budget_bytes must be positive");
  }
  for (const auto& t : lora_targets) proj_index(t);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw RomaError(ErrorCode::kValidation, std::string("config parse error: ") + e.what());
  }
  ModelConfig c;
  try {
    c.layers = j.at("layers").get<int>();
    c.hidden = j.at("hidden_dim").get<int>();
    c.heads = j.at("n_heads").get<int>();
    c.kv_heads = j.at("n_kv_heads").get<int>();
    c.head_dim = j.at("head_dim").get<int>();
    c.mlp = j.at("mlp_dim").get<int>();
    c.vocab = j.at("vocab_size").get<int>();
    c.bit_width = j.at("bit_width").get<int>();
    c.lora_rank = j.at("lora_rank").get<int>();
    c.sram_budget_bytes = j.at("sram_budget_bytes").get<int64_t>();
    c.rope_base = j.value("rope_base", 10000.0);
    c.rms_eps = j.value("rms_eps", 1e-5);
    if (j.contains("lora_targets")) {
      c.lora_targets = j.at("lora_targets").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw RomaError(ErrorCode::kValidation, std::string("config field error: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RomaError(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ModelConfig::to_json() const {
  nlohmann::json j{
      {"layers", layers},         {"hidden_dim", hidden},
      {"n_heads", heads},         {"n_kv_heads", kv_heads},
      {"head_dim", head_dim},     {"mlp_dim", mlp},
      {"vocab_size", vocab},      {"rope_base", rope_base},
      {"rms_eps", rms_eps},       {"bit_width", bit_width},
      {"lora_rank", lora_rank},   {"lora_targets", lora_targets},
      {"sram_budget_bytes", sram_budget_bytes},
  };
  return j.dump(2);
}

std::vector<ExpectedTensor> expected_rom_tensors(const ModelConfig& cfg) {
  std::vector<ExpectedTensor> out;
  out.push_back({"embed", cfg.vocab, cfg.hidden});
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "L" + std::to_string(l) + ".";
    out.push_back({p + "attn_norm", 1, cfg.hidden});
    for (const auto& proj : kAllProjections) {
      out.push_back({p + proj, cfg.proj_out(proj), cfg.proj_in(proj)});
    }
    out.push_back({p + "mlp_norm", 1, cfg.hidden});
  }
  out.push_back({"final_norm", 1, cfg.hidden});
  return out;
}

std::span<const Fp16> KvCache::k_at(int layer, int pos) const {
  return std::span<const Fp16>(k[layer]).subspan(static_cast<size_t>(pos) * kv_dim, kv_dim);
}

std::span<const Fp16> KvCache::v_at(int layer, int pos) const {
  return std::span<const Fp16>(v[layer]).subspan(static_cast<size_t>(pos) * kv_dim, kv_dim);
}

Runtime load_runtime(const RomImage& rom, const RomImage* lora, const ModelConfig& cfg,
                     const ChipTopology& topo) {
  cfg.validate();
  if (rom.bit_width != cfg.bit_width) {
    throw RomaError(ErrorCode::kValidation, "image bit width does not match config");
  }

  Runtime rt;
  rt.cfg = cfg;
  rt.topo = topo;

  auto take = [&](const std::string& name, int rows, int cols) {
    const TensorEntry* e = rom.find(name);
    if (!e) throw RomaError(ErrorCode::kValidation, "image missing tensor " + name);
    if (static_cast<int>(e->rows) != rows || static_cast<int>(e->cols) != cols) {
      throw RomaError(ErrorCode::kValidation, "image tensor " + name + " has wrong shape");
    }
    return rom.tensor(name);
  };

  rt.embed = take("embed", cfg.vocab, cfg.hidden);
  rt.final_norm = dequant_row(take("final_norm", 1, cfg.hidden), 0);
  rt.layers.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "L" + std::to_string(l) + ".";
    LayerWeights& lw = rt.layers[l];
    lw.q = take(p + "q", cfg.proj_out("q"), cfg.proj_in("q"));
    lw.k = take(p + "k", cfg.proj_out("k"), cfg.proj_in("k"));
    lw.v = take(p + "v", cfg.proj_out("v"), cfg.proj_in("v"));
    lw.o = take(p + "o", cfg.proj_out("o"), cfg.proj_in("o"));
    lw.gate = take(p + "gate", cfg.proj_out("gate"), cfg.proj_in("gate"));
    lw.up = take(p + "up", cfg.proj_out("up"), cfg.proj_in("up"));
    lw.down = take(p + "down", cfg.proj_out("down"), cfg.proj_in("down"));
    lw.attn_norm = dequant_row(take(p + "attn_norm", 1, cfg.hidden), 0);
    lw.mlp_norm = dequant_row(take(p + "mlp_norm", 1, cfg.hidden), 0);
  }

  // Adapter attachment: L{layer}.{proj}.{A|B} pairs, validated against the
  // config's target set and rank.
  if (lora) {
    if (lora->kind != PayloadKind::kFp8Raw) {
      throw RomaError(ErrorCode::kValidation, "adapter image must hold fp8 payload");
    }
    for (const auto& e : lora->directory) {
      size_t d1 = e.name.find('.');
      size_t d2 = e.name.rfind('.');
      if (e.name.size() < 5 || e.name[0] != 'L' || d1 == std::string::npos || d2 <= d1) {
        throw RomaError(ErrorCode::kValidation, "bad adapter tensor name: " + e.name);
      }
      int layer = -1;
      try {
        layer = std::stoi(e.name.substr(1, d1 - 1));
      } catch (...) {
        throw RomaError(ErrorCode::kValidation, "bad adapter layer index in " + e.name);
      }
      std::string proj = e.name.substr(d1 + 1, d2 - d1 - 1);
      std::string part = e.name.substr(d2 + 1);
      if (layer < 0 || layer >= cfg.layers) {
        throw RomaError(ErrorCode::kValidation, "adapter attaches to missing layer: " + e.name);
      }
      if (std::find(cfg.lora_targets.begin(), cfg.lora_targets.end(), proj) ==
          cfg.lora_targets.end()) {
        throw RomaError(ErrorCode::kValidation, "adapter attaches outside target set: " + e.name);
      }
      int pi = proj_index(proj);
      auto& slot = rt.layers[layer].lora[pi];
      if (!slot) {
        slot.emplace();
        slot->rank = cfg.lora_rank;
      }
      Fp8Matrix m = lora->fp8_tensor(e.name);
      if (part == "A") {
        if (m.rows != cfg.lora_rank || m.cols != cfg.proj_in(proj)) {
          throw RomaError(ErrorCode::kValidation, "adapter A factor has wrong shape: " + e.name);
        }
        slot->a = std::move(m);
      } else if (part == "B") {
        if (m.rows != cfg.proj_out(proj) || m.cols != cfg.lora_rank) {
          throw RomaError(ErrorCode::kValidation, "adapter B factor has wrong shape: " + e.name);
        }
        slot->b = std::move(m);
      } else {
        throw RomaError(ErrorCode::kValidation, "adapter part must be A or B: " + e.name);
      }
      rt.lora_bytes += static_cast<int64_t>(e.rows) * e.cols;
    }
    for (int l = 0; l < cfg.layers; ++l) {
      for (int pi = 0; pi < 7; ++pi) {
        const auto& slot = rt.layers[l].lora[pi];
        if (slot && (slot->a.data.empty() || slot->b.data.empty())) {
          throw RomaError(ErrorCode::kValidation,
                          "adapter pair incomplete at layer " + std::to_string(l));
        }
      }
    }
  }

  // SRAM budget: adapters and the fp16 cache share it.
  rt.kv_bytes_per_token = static_cast<int64_t>(cfg.layers) * 2 * cfg.kv_dim() * 2;
  int64_t per_rank = 0;
  for (const auto& proj : cfg.lora_targets) {
    per_rank += static_cast<int64_t>(cfg.layers) * (cfg.proj_in(proj) + cfg.proj_out(proj));
  }
  CapacityParams cap;
  cap.kv_bytes_per_token = rt.kv_bytes_per_token;
  cap.lora_bytes_per_rank = std::max<int64_t>(per_rank, 1);
  cap.sram_budget_bytes = cfg.sram_budget_bytes;
  rt.max_tokens = max_tokens(cap, lora ? cfg.lora_rank : 0);
  if (rt.max_tokens < 1) {
    throw RomaError(ErrorCode::kCapacity,
                    "adapter weights leave no SRAM for the token cache: adapters and the KV cache "
                    "share the SRAM budget, so a high rank shrinks or zeroes the token capacity");
  }

  for (const auto& e : expected_rom_tensors(cfg)) {
    rt.placement.push_back({e.name, e.rows, static_cast<double>(e.rows) / topo.grid_cols});
  }
  return rt;
}

KvCache make_cache(const Runtime& rt) {
  KvCache c;
  c.layers = rt.cfg.layers;
  c.kv_dim = rt.cfg.kv_dim();
  c.max_tokens = rt.max_tokens;
  c.k.resize(c.layers);
  c.v.resize(c.layers);
  return c;
}

std::vector<double> forward_token(const Runtime& rt, int token, KvCache& cache,
                                  std::vector<LayerTrace>* trace) {
  if (cache.length >= cache.max_tokens) {
    throw RomaError(ErrorCode::kCapacity,
                    "token buffer full: the fp16 KV cache shares SRAM with the adapter weights; "
                    "grow the SRAM budget or lower the adapter rank to fit more tokens");
  }
  int pos = cache.length;
  std::vector<Fp16> x = embed_token(rt, token);
  if (trace) trace->resize(rt.cfg.layers);
  for (int l = 0; l < rt.cfg.layers; ++l) {
    if (trace) (*trace)[l].input = to_f64(x);
    x = forward_layer(rt, l, x, cache, pos);
    if (trace) (*trace)[l].output = to_f64(x);
  }
  cache.length += 1;
  std::vector<Fp16> h = rmsnorm_cast(x, rt.final_norm, rt.cfg.rms_eps);
  return lunit_matvec(rt.embed, h);
}

std::vector<double> prefill(const Runtime& rt, std::span<const int> tokens, KvCache& cache) {
  if (tokens.empty()) throw RomaError(ErrorCode::kUsage, "prefill: empty prompt");
  if (cache.length + static_cast<int64_t>(tokens.size()) > cache.max_tokens) {
    throw RomaError(ErrorCode::kCapacity, "prompt exceeds the token capacity of the SRAM budget");
  }
  std::vector<double> logits;
  for (int t : tokens) logits = forward_token(rt, t, cache);
  return logits;
}

std::vector<double> decode_step(const Runtime& rt, int token, KvCache& cache) {
  return forward_token(rt, token, cache);
}

int argmax_token(std::span<const double> logits) {
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> generate(const Runtime& rt, std::span<const int> prompt, int max_new) {
  KvCache cache = make_cache(rt);
  std::vector<double> logits = prefill(rt, prompt, cache);
  std::vector<int> out;
  for (int step = 0; step < max_new; ++step) {
    int next = argmax_token(logits);
    out.push_back(next);
    if (step + 1 == max_new) break;
    logits = decode_step(rt, next, cache);
  }
  return out;
}

}  // namespace roma
