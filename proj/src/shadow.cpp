#include "roma/shadow.hpp"

#include <algorithm>
#include <cmath>

#include "roma/error.hpp"

namespace roma {
namespace {

std::vector<double> dense_of(const QuantMatrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m.rows) * m.cols);
  for (int r = 0; r < m.rows; ++r) {
    auto row = dequant_row(m, r);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::vector<double> dense_of_fp8(const Fp8Matrix& m) {
  std::vector<double> out(m.data.size());
  for (size_t i = 0; i < m.data.size(); ++i) out[i] = fp8_decode(m.data[i], m.format);
  return out;
}

std::vector<double> dense_matvec(const std::vector<double>& w, int rows, int cols,
                                 std::span<const double> x) {
  std::vector<double> y(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += w[static_cast<size_t>(r) * cols + c] * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> rmsnorm(std::span<const double> x, const std::vector<double>& w, double eps) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + eps);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * w[i];
  return out;
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

std::vector<double> project(const ShadowModel& m, const ShadowModel::Layer& lw, int pi,
                            const ModelConfig& c, std::span<const double> x) {
  static const std::string names[7] = {"q", "k", "v", "o", "gate", "up", "down"};
  const std::vector<double>* mats[7] = {&lw.q, &lw.k, &lw.v, &lw.o, &lw.gate, &lw.up, &lw.down};
  int in = c.proj_in(names[pi]);
  int out = c.proj_out(names[pi]);
  std::vector<double> y = dense_matvec(*mats[pi], out, in, x);
  if (!lw.lora_a[pi].empty()) {
    std::vector<double> mid = dense_matvec(lw.lora_a[pi], c.lora_rank, in, x);
    std::vector<double> adj = dense_matvec(lw.lora_b[pi], out, c.lora_rank, mid);
    for (int i = 0; i < out; ++i) y[i] += adj[i];
  }
  (void)m;
  return y;
}

// K/V rows for position j come either from the shadow's own cache or from
// the engine's fp16 cache (decoded), so the same layer code serves both the
// open-loop forward and the replay.
struct KvView {
  const ShadowCache* own = nullptr;
  const KvCache* engine = nullptr;
  int layer = 0;
  int kv_dim = 0;

  double k(int j, int d) const {
    if (own) return own->k[layer][static_cast<size_t>(j) * kv_dim + d];
    return fp16_decode(engine->k_at(layer, j)[d]);
  }
  double v(int j, int d) const {
    if (own) return own->v[layer][static_cast<size_t>(j) * kv_dim + d];
    return fp16_decode(engine->v_at(layer, j)[d]);
  }
};

std::vector<double> attention(const ModelConfig& c, std::span<const double> q, const KvView& kv,
                              std::span<const double> cur_k, std::span<const double> cur_v,
                              int pos) {
  int group = c.heads / c.kv_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(c.head_dim));
  std::vector<double> out(c.hidden, 0.0);
  std::vector<double> scores(pos + 1);
  for (int h = 0; h < c.heads; ++h) {
    int kvh = h / group;
    for (int j = 0; j <= pos; ++j) {
      double s = 0.0;
      for (int d = 0; d < c.head_dim; ++d) {
        double kjd = (j == pos) ? cur_k[kvh * c.head_dim + d] : kv.k(j, kvh * c.head_dim + d);
        s += q[h * c.head_dim + d] * kjd;
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
      double p = scores[j] / z;
      for (int d = 0; d < c.head_dim; ++d) {
        double vjd = (j == pos) ? cur_v[kvh * c.head_dim + d] : kv.v(j, kvh * c.head_dim + d);
        out[h * c.head_dim + d] += p * vjd;
      }
    }
  }
  return out;
}

struct LayerResult {
  std::vector<double> x;
  std::vector<double> k, v;  // this position's K/V, pre-cache
};

LayerResult layer_forward(const ShadowModel& m, int layer, std::span<const double> x,
                          const KvView& kv, int pos) {
  const ModelConfig& c = m.cfg;
  const auto& lw = m.layers[layer];

  std::vector<double> h1 = rmsnorm(x, lw.attn_norm, c.rms_eps);
  std::vector<double> qd = project(m, lw, 0, c, h1);
  std::vector<double> kd = project(m, lw, 1, c, h1);
  std::vector<double> vd = project(m, lw, 2, c, h1);
  rope_inplace(qd, pos, c.head_dim, c.rope_base);
  rope_inplace(kd, pos, c.head_dim, c.rope_base);

  std::vector<double> attn = attention(c, qd, kv, kd, vd, pos);
  std::vector<double> od = project(m, lw, 3, c, attn);
  std::vector<double> x1(c.hidden);
  for (int i = 0; i < c.hidden; ++i) x1[i] = x[i] + od[i];

  std::vector<double> h2 = rmsnorm(x1, lw.mlp_norm, c.rms_eps);
  std::vector<double> g = project(m, lw, 4, c, h2);
  std::vector<double> u = project(m, lw, 5, c, h2);
  std::vector<double> act(c.mlp);
  for (int i = 0; i < c.mlp; ++i) act[i] = g[i] / (1.0 + std::exp(-g[i])) * u[i];
  std::vector<double> dd = project(m, lw, 6, c, act);
  LayerResult res;
  res.x.resize(c.hidden);
  for (int i = 0; i < c.hidden; ++i) res.x[i] = x1[i] + dd[i];
  res.k = std::move(kd);
  res.v = std::move(vd);
  return res;
}

}  // namespace

ShadowModel build_shadow(const Runtime& rt) {
  ShadowModel m;
  m.cfg = rt.cfg;
  m.embed = dense_of(rt.embed);
  m.final_norm = rt.final_norm;
  m.layers.resize(rt.cfg.layers);
  for (int l = 0; l < rt.cfg.layers; ++l) {
    const auto& src = rt.layers[l];
    auto& dst = m.layers[l];
    dst.q = dense_of(src.q);
    dst.k = dense_of(src.k);
    dst.v = dense_of(src.v);
    dst.o = dense_of(src.o);
    dst.gate = dense_of(src.gate);
    dst.up = dense_of(src.up);
    dst.down = dense_of(src.down);
    dst.attn_norm = src.attn_norm;
    dst.mlp_norm = src.mlp_norm;
    for (int pi = 0; pi < 7; ++pi) {
      if (src.lora[pi]) {
        dst.lora_a[pi] = dense_of_fp8(src.lora[pi]->a);
        dst.lora_b[pi] = dense_of_fp8(src.lora[pi]->b);
      }
    }
  }
  return m;
}

ShadowCache make_shadow_cache(const ShadowModel& m) {
  ShadowCache c;
  c.k.resize(m.cfg.layers);
  c.v.resize(m.cfg.layers);
  return c;
}

std::vector<double> shadow_forward_token(const ShadowModel& m, int token, ShadowCache& cache) {
  const ModelConfig& c = m.cfg;
  if (token < 0 || token >= c.vocab) {
    throw RomaError(ErrorCode::kValidation, "token id out of vocabulary range");
  }
  int pos = cache.length;
  std::vector<double> x(m.embed.begin() + static_cast<size_t>(token) * c.hidden,
                        m.embed.begin() + static_cast<size_t>(token + 1) * c.hidden);
  for (int l = 0; l < c.layers; ++l) {
    KvView kv{&cache, nullptr, l, c.kv_dim()};
    LayerResult res = layer_forward(m, l, x, kv, pos);
    cache.k[l].insert(cache.k[l].end(), res.k.begin(), res.k.end());
    cache.v[l].insert(cache.v[l].end(), res.v.begin(), res.v.end());
    x = std::move(res.x);
  }
  cache.length += 1;
  std::vector<double> h = rmsnorm(x, m.final_norm, c.rms_eps);
  return dense_matvec(m.embed, c.vocab, c.hidden, h);
}

std::vector<int> shadow_generate(const ShadowModel& m, std::span<const int> prompt, int max_new) {
  ShadowCache cache = make_shadow_cache(m);
  std::vector<double> logits;
  for (int t : prompt) logits = shadow_forward_token(m, t, cache);
  std::vector<int> out;
  for (int step = 0; step < max_new; ++step) {
    int next = argmax_token(logits);
    out.push_back(next);
    if (step + 1 == max_new) break;
    logits = shadow_forward_token(m, next, cache);
  }
  return out;
}

std::vector<double> shadow_layer_replay(const ShadowModel& m, int layer,
                                        std::span<const double> input, int pos,
                                        const KvCache& engine_cache) {
  KvView kv{nullptr, &engine_cache, layer, m.cfg.kv_dim()};
  return layer_forward(m, layer, input, kv, pos).x;
}

ShadowComparison compare_with_shadow(const Runtime& rt, const ShadowModel& m,
                                     std::span<const int> prompt, int max_new) {
  if (prompt.empty() || max_new < 1) {
    throw RomaError(ErrorCode::kUsage, "shadow comparison needs a prompt and at least one step");
  }
  ShadowComparison cmp;

  // Engine trajectory with per-layer traces, replaying every layer densely.
  KvCache cache = make_cache(rt);
  std::vector<int> engine_tokens;
  std::vector<double> logits;
  int steps_total = static_cast<int>(prompt.size()) + max_new - 1;
  int next = prompt.empty() ? 0 : prompt[0];
  for (int s = 0; s < steps_total; ++s) {
    int tok = s < static_cast<int>(prompt.size()) ? prompt[s] : next;
    int pos = cache.length;
    std::vector<LayerTrace> trace;
    logits = forward_token(rt, tok, cache, &trace);
    for (int l = 0; l < rt.cfg.layers; ++l) {
      std::vector<double> want = shadow_layer_replay(m, l, trace[l].input, pos, cache);
      double num = 0.0, den = 0.0;
      for (size_t i = 0; i < want.size(); ++i) {
        double d = trace[l].output[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
      }
      double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
      cmp.max_layer_rel_err = std::max(cmp.max_layer_rel_err, rel);
    }
    if (s + 1 >= static_cast<int>(prompt.size())) {
      next = argmax_token(logits);
      engine_tokens.push_back(next);
    }
  }

  // Open-loop greedy agreement.
  std::vector<int> shadow_tokens = shadow_generate(m, prompt, max_new);
  cmp.steps = static_cast<int>(engine_tokens.size());
  for (size_t i = 0; i < engine_tokens.size() && i < shadow_tokens.size(); ++i) {
    cmp.agreed += engine_tokens[i] == shadow_tokens[i];
  }
  return cmp;
}

}  // namespace roma
