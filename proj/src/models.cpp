// Copyright 2026 The PerturbKit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "perturbkit/models.hpp"

#include <algorithm>
#include <cmath>

#include "perturbkit/noise.hpp"

namespace perturbkit {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskValue = -1e9;

// Binds a Params entry into a graph at most once per tape.
class Binder {
 public:
  Binder(Graph& g, const Params& params) : g_(g), params_(params) {}

  Graph::Value operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Graph::Value v = g_.param(name, params_.at(name));
    bound_.emplace(name, v);
    return v;
  }

 private:
  Graph& g_;
  const Params& params_;
  std::map<std::string, Graph::Value> bound_;
};

Graph::Value linear(Graph& g, Binder& p, const std::string& prefix,
                    Graph::Value x) {
  return g.add(g.matmul(x, p(prefix + ".weight")), p(prefix + ".bias"));
}

// Multi-head attention: queries from x_q [sq, d], keys/values from
// x_kv [skv, d]. `mask` (optional) is an additive [sq, skv] constant.
Graph::Value attend(Graph& g, Binder& p, const std::string& prefix,
                    Graph::Value x_q, Graph::Value x_kv, Graph::Value mask,
                    const ModelConfig& cfg) {
  const std::size_t sq = g.value(x_q).dim(0);
  const std::size_t skv = g.value(x_kv).dim(0);
  const std::size_t h = static_cast<std::size_t>(cfg.heads);
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  const std::size_t dh = d / h;

  auto split_heads = [&](Graph::Value v, std::size_t s) {
    return g.transpose_01(g.reshape(v, {s, h, dh}));  // [h, s, dh]
  };
  Graph::Value q = split_heads(linear(g, p, prefix + ".q", x_q), sq);
  Graph::Value k = split_heads(linear(g, p, prefix + ".k", x_kv), skv);
  Graph::Value v = split_heads(linear(g, p, prefix + ".v", x_kv), skv);

  Graph::Value scores =
      g.scale(g.matmul(q, g.transpose_12(k)), 1.0 / std::sqrt(double(dh)));
  if (mask.valid()) scores = g.add(scores, mask);  // broadcast over heads
  Graph::Value ctx = g.matmul(g.softmax(scores), v);      // [h, sq, dh]
  Graph::Value merged = g.reshape(g.transpose_01(ctx), {sq, d});
  return linear(g, p, prefix + ".o", merged);
}

Graph::Value post_ln(Graph& g, Binder& p, const std::string& prefix,
                     Graph::Value residual, Graph::Value branch) {
  Graph::Value y = g.layer_norm(g.add(residual, branch));
  return g.add(g.mul(y, p(prefix + ".gain")), p(prefix + ".bias"));
}

Graph::Value ffn(Graph& g, Binder& p, const std::string& prefix,
                 Graph::Value x) {
  return linear(g, p, prefix + ".w2",
                g.gelu(linear(g, p, prefix + ".w1", x)));
}

Graph::Value encoder_block(Graph& g, Binder& p, const std::string& prefix,
                           Graph::Value x, const ModelConfig& cfg) {
  Graph::Value a = attend(g, p, prefix + ".attn", x, x, Graph::Value{}, cfg);
  x = post_ln(g, p, prefix + ".attn.ln", x, a);
  Graph::Value f = ffn(g, p, prefix + ".ffn", x);
  return post_ln(g, p, prefix + ".ffn.ln", x, f);
}

Graph::Value causal_mask(Graph& g, std::size_t s) {
  Tensor m = Tensor::zeros({s, s});
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) m.data[i * s + j] = kMaskValue;
  return g.input(std::move(m));
}

Graph::Value embed_with_pos(Graph& g, Binder& p, const std::string& emb,
                            const std::string& pos,
                            const std::vector<int>& tokens) {
  std::vector<int> positions(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    positions[i] = static_cast<int>(i);
  return g.add(g.gather_rows(p(emb), tokens),
               g.gather_rows(p(pos), positions));
}

void check_tokens(const std::vector<int>& tokens, const ModelConfig& cfg,
                  const char* what) {
  if (tokens.empty())
    throw ShapeError(std::string(what) + ": empty token sequence");
  if (tokens.size() > static_cast<std::size_t>(cfg.max_len))
    throw ShapeError(std::string(what) + ": sequence longer than max_len");
  for (int t : tokens)
    if (t < 0 || t >= cfg.vocab)
      throw ShapeError(std::string(what) + ": token id out of vocab");
}

void add_linear_params(Params& params, const std::string& prefix,
                       std::size_t in, std::size_t out, CounterRng& rng) {
  params.add(prefix + ".weight", truncated_normal({in, out}, kInitStd, rng));
  params.add(prefix + ".bias", Tensor::zeros({out}));
}

void add_ln_params(Params& params, const std::string& prefix, std::size_t d) {
  params.add(prefix + ".gain", Tensor::filled({d}, 1.0));
  params.add(prefix + ".bias", Tensor::zeros({d}));
}

void add_block_params(Params& params, const std::string& prefix, std::size_t d,
                      CounterRng& rng) {
  for (const char* n : {".attn.q", ".attn.k", ".attn.v", ".attn.o"})
    add_linear_params(params, prefix + n, d, d, rng);
  add_ln_params(params, prefix + ".attn.ln", d);
  add_linear_params(params, prefix + ".ffn.w1", d, 4 * d, rng);
  add_linear_params(params, prefix + ".ffn.w2", 4 * d, d, rng);
  add_ln_params(params, prefix + ".ffn.ln", d);
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1 || model_dim < 1 || heads < 1 || vocab < 1 || max_len < 1 ||
      decoder_layers < 1 || n_tags < 2 || n_rel_labels < 2)
    throw ConfigError("model config fields must be positive");
  if (model_dim % heads != 0)
    throw ConfigError("model_dim must be divisible by heads");
}

const std::vector<std::string>& tag_names() {
  static const std::vector<std::string> names = {"O", "kpi", "cy", "py"};
  return names;
}

const std::vector<std::string>& relation_names() {
  static const std::vector<std::string> names = {"none", "kpi-cy", "kpi-py"};
  return names;
}

std::vector<TagSpan> extract_spans(const std::vector<int>& tags) {
  std::vector<TagSpan> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == 0) {
      ++i;
      continue;
    }
    TagSpan s;
    s.start = static_cast<int>(i);
    s.tag = tags[i];
    while (i < tags.size() && tags[i] == s.tag) ++i;
    s.end = static_cast<int>(i);
    spans.push_back(s);
  }
  return spans;
}

TensorKind model_param_kind(const std::string& name) {
  auto ends_with = [&](const std::string& suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) ==
               0;
  };
  if (ends_with(".ln.gain")) return TensorKind::kLayerNormGain;
  if (ends_with(".ln.bias")) return TensorKind::kLayerNormBias;
  if (name.find(".emb.") != std::string::npos ||
      name.find(".pos.") != std::string::npos)
    return TensorKind::kEmbedding;
  if (ends_with(".weight")) return TensorKind::kWeight;
  if (ends_with(".bias")) return TensorKind::kBias;
  throw ConfigError("cannot tag model parameter: " + name);
}

ZoneTag model_param_zone(const std::string& name) {
  ZoneTag zone;
  std::string rest;
  if (name.rfind("enc.", 0) == 0) {
    zone.component = ZoneComponent::kEncoder;
    rest = name.substr(4);
  } else if (name.rfind("dec.", 0) == 0) {
    zone.component = ZoneComponent::kDecoder;
    rest = name.substr(4);
  } else if (name.rfind("head.", 0) == 0) {
    zone.component = ZoneComponent::kHead;
    return zone;
  } else {
    throw ConfigError("cannot zone model parameter: " + name);
  }
  const std::string seg = rest.substr(0, rest.find('.'));
  if (!seg.empty() && seg.find_first_not_of("0123456789") == std::string::npos)
    zone.layer_index = static_cast<std::int32_t>(std::stol(seg));
  return zone;
}

ParamStore params_to_store(const Params& params) {
  ParamStore store;
  for (const auto& [name, tensor] : params.entries()) {
    TensorRecord rec;
    rec.name = name;
    rec.shape.assign(tensor.shape.begin(), tensor.shape.end());
    rec.data.reserve(tensor.numel());
    for (double v : tensor.data) rec.data.push_back(static_cast<float>(v));
    rec.kind = model_param_kind(name);
    rec.zone = model_param_zone(name);
    store.put(std::move(rec));
  }
  return store;
}

Params params_from_store(const ParamStore& store) {
  Params params;
  for (const TensorRecord& rec : store.records()) {
    Tensor t;
    t.shape.assign(rec.shape.begin(), rec.shape.end());
    t.data.reserve(rec.data.size());
    for (float v : rec.data) t.data.push_back(static_cast<double>(v));
    params.add(rec.name, std::move(t));
  }
  return params;
}

TaggerModel::TaggerModel(ModelConfig cfg, Params params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
}

TaggerModel TaggerModel::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  CounterRng rng = derive_substream(seed, "tagger.init");
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  Params params;
  params.add("enc.emb.weight",
             truncated_normal({std::size_t(cfg.vocab), d}, kInitStd, rng));
  params.add("enc.pos.weight",
             truncated_normal({std::size_t(cfg.max_len), d}, kInitStd, rng));
  for (int i = 0; i < cfg.layers; ++i)
    add_block_params(params, "enc." + std::to_string(i), d, rng);
  add_linear_params(params, "head.tag", d, std::size_t(cfg.n_tags), rng);
  params.add("head.rel.weight",
             truncated_normal({std::size_t(cfg.n_rel_labels), d, d}, kInitStd,
                              rng));
  params.add("head.rel.bias", Tensor::zeros({std::size_t(cfg.n_rel_labels)}));
  return TaggerModel(cfg, std::move(params));
}

TaggerModel TaggerModel::from_store(const ModelConfig& cfg,
                                    const ParamStore& store) {
  return TaggerModel(cfg, params_from_store(store));
}

ParamStore TaggerModel::to_store() const { return params_to_store(params_); }

TaggerModel::Forward TaggerModel::forward(Graph& g,
                                          const std::vector<int>& tokens) const {
  check_tokens(tokens, cfg_, "tagger");
  Binder p(g, params_);
  Graph::Value x = embed_with_pos(g, p, "enc.emb.weight", "enc.pos.weight",
                                  tokens);
  for (int i = 0; i < cfg_.layers; ++i)
    x = encoder_block(g, p, "enc." + std::to_string(i), x, cfg_);
  Graph::Value logits = linear(g, p, "head.tag", x);
  return Forward{logits, x};
}

Graph::Value TaggerModel::relation_logits(Graph& g, Graph::Value hidden,
                                          const std::vector<int>& span_a,
                                          const std::vector<int>& span_b) const {
  Binder p(g, params_);
  const std::size_t d = static_cast<std::size_t>(cfg_.model_dim);
  Graph::Value u =
      g.reshape(g.mean_rows(g.gather_rows(hidden, span_a)), {1, d});
  Graph::Value v =
      g.reshape(g.mean_rows(g.gather_rows(hidden, span_b)), {d, 1});
  Graph::Value bilinear = p("head.rel.weight");  // [R, d, d]
  std::vector<Graph::Value> scores;
  for (int r = 0; r < cfg_.n_rel_labels; ++r) {
    Graph::Value br = g.reshape(
        g.slice0(bilinear, std::size_t(r), std::size_t(r) + 1), {d, d});
    scores.push_back(g.matmul(g.matmul(u, br), v));  // [1, 1]
  }
  Graph::Value stacked =
      g.reshape(g.concat0(scores), {1, std::size_t(cfg_.n_rel_labels)});
  return g.add(stacked, p("head.rel.bias"));
}

Seq2SeqModel::Seq2SeqModel(ModelConfig cfg, Params params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
}

Seq2SeqModel Seq2SeqModel::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  CounterRng rng = derive_substream(seed, "seq2seq.init");
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  Params params;
  params.add("enc.emb.weight",
             truncated_normal({std::size_t(cfg.vocab), d}, kInitStd, rng));
  params.add("enc.pos.weight",
             truncated_normal({std::size_t(cfg.max_len), d}, kInitStd, rng));
  for (int i = 0; i < cfg.layers; ++i)
    add_block_params(params, "enc." + std::to_string(i), d, rng);
  params.add("dec.emb.weight",
             truncated_normal({std::size_t(cfg.vocab), d}, kInitStd, rng));
  params.add("dec.pos.weight",
             truncated_normal({std::size_t(cfg.max_len), d}, kInitStd, rng));
  for (int i = 0; i < cfg.decoder_layers; ++i) {
    const std::string prefix = "dec." + std::to_string(i);
    for (const char* n : {".self.q", ".self.k", ".self.v", ".self.o"})
      add_linear_params(params, prefix + n, d, d, rng);
    add_ln_params(params, prefix + ".self.ln", d);
    for (const char* n : {".cross.q", ".cross.k", ".cross.v", ".cross.o"})
      add_linear_params(params, prefix + n, d, d, rng);
    add_ln_params(params, prefix + ".cross.ln", d);
    add_linear_params(params, prefix + ".ffn.w1", d, 4 * d, rng);
    add_linear_params(params, prefix + ".ffn.w2", 4 * d, d, rng);
    add_ln_params(params, prefix + ".ffn.ln", d);
  }
  add_linear_params(params, "head.out", d, std::size_t(cfg.vocab), rng);
  return Seq2SeqModel(cfg, std::move(params));
}

Seq2SeqModel Seq2SeqModel::from_store(const ModelConfig& cfg,
                                      const ParamStore& store) {
  return Seq2SeqModel(cfg, params_from_store(store));
}

ParamStore Seq2SeqModel::to_store() const { return params_to_store(params_); }

Graph::Value Seq2SeqModel::forward(Graph& g, const std::vector<int>& src,
                                   const std::vector<int>& tgt_prefix) const {
  check_tokens(src, cfg_, "seq2seq src");
  check_tokens(tgt_prefix, cfg_, "seq2seq tgt");
  Binder p(g, params_);
  Graph::Value mem = embed_with_pos(g, p, "enc.emb.weight", "enc.pos.weight",
                                    src);
  for (int i = 0; i < cfg_.layers; ++i)
    mem = encoder_block(g, p, "enc." + std::to_string(i), mem, cfg_);

  Graph::Value y = embed_with_pos(g, p, "dec.emb.weight", "dec.pos.weight",
                                  tgt_prefix);
  Graph::Value mask = causal_mask(g, tgt_prefix.size());
  for (int i = 0; i < cfg_.decoder_layers; ++i) {
    const std::string prefix = "dec." + std::to_string(i);
    Graph::Value a = attend(g, p, prefix + ".self", y, y, mask, cfg_);
    y = post_ln(g, p, prefix + ".self.ln", y, a);
    Graph::Value c =
        attend(g, p, prefix + ".cross", y, mem, Graph::Value{}, cfg_);
    y = post_ln(g, p, prefix + ".cross.ln", y, c);
    Graph::Value f = ffn(g, p, prefix + ".ffn", y);
    y = post_ln(g, p, prefix + ".ffn.ln", y, f);
  }
  return linear(g, p, "head.out", y);
}

std::vector<int> Seq2SeqModel::greedy_decode(const std::vector<int>& src,
                                             int max_steps) const {
  std::vector<int> out;
  std::vector<int> prefix = {kBos};
  for (int step = 0; step < max_steps; ++step) {
    if (prefix.size() >= static_cast<std::size_t>(cfg_.max_len)) break;
    Graph g;
    Graph::Value logits = forward(g, src, prefix);
    const Tensor& t = g.value(logits);
    const std::size_t vocab = t.dim(1);
    const double* row = t.data.data() + (t.dim(0) - 1) * vocab;
    // BOS is a pure control token and is never emitted.
    int best = kEos;
    for (std::size_t c = kEos + 1; c < vocab; ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    if (best == kEos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

}  // namespace perturbkit
