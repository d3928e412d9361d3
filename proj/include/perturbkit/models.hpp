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

#ifndef PERTURBKIT_MODELS_HPP_
#define PERTURBKIT_MODELS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "perturbkit/autodiff.hpp"
#include "perturbkit/param_store.hpp"
#include "perturbkit/relation_metrics.hpp"
#include "perturbkit/train.hpp"

namespace perturbkit {

struct ModelConfig {
  int layers = 2;
  int model_dim = 32;
  int heads = 2;
  int vocab = 64;
  int max_len = 16;
  int decoder_layers = 2;  // seq2seq only
  int n_tags = 4;          // tagger: O + entity labels
  int n_rel_labels = 3;    // tagger: none + relation labels

  void validate() const;
};

// Tag and relation label vocabularies for the tagging task.
// Tag ids: 0 = O, 1 = kpi, 2 = cy, 3 = py.
// Relation ids: 0 = none, 1 = kpi-cy, 2 = kpi-py.
const std::vector<std::string>& tag_names();
const std::vector<std::string>& relation_names();

struct TagSpan {
  int start = 0;  // inclusive token position
  int end = 0;    // exclusive
  int tag = 0;    // non-O tag id

  std::vector<int> positions() const {
    std::vector<int> p;
    for (int i = start; i < end; ++i) p.push_back(i);
    return p;
  }
};

// Contiguous runs of an identical non-O tag.
std::vector<TagSpan> extract_spans(const std::vector<int>& tags);

// Kind/zone metadata for a model parameter name, used when exporting to a
// ParamStore. Covers the naming scheme of both toy models.
TensorKind model_param_kind(const std::string& name);
ZoneTag model_param_zone(const std::string& name);

// Encoder-only transformer with a per-token tag head and a bilinear relation
// head over mean-pooled spans.
class TaggerModel {
 public:
  TaggerModel(ModelConfig cfg, Params params);

  static TaggerModel init(const ModelConfig& cfg, std::uint64_t seed);
  static TaggerModel from_store(const ModelConfig& cfg,
                                const ParamStore& store);
  ParamStore to_store() const;

  struct Forward {
    Graph::Value tag_logits;  // [seq, n_tags]
    Graph::Value hidden;      // [seq, model_dim]
  };
  Forward forward(Graph& g, const std::vector<int>& tokens) const;

  // [1, n_rel_labels] bilinear pair score from mean-pooled span positions.
  Graph::Value relation_logits(Graph& g, Graph::Value hidden,
                               const std::vector<int>& span_a,
                               const std::vector<int>& span_b) const;

  const ModelConfig& config() const { return cfg_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

 private:
  ModelConfig cfg_;
  Params params_;
};

// Encoder-decoder transformer with full self-attention, causal decoder
// masking, and a vocabulary projection head.
class Seq2SeqModel {
 public:
  // Reserved token ids for the synthetic tasks.
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;

  Seq2SeqModel(ModelConfig cfg, Params params);

  static Seq2SeqModel init(const ModelConfig& cfg, std::uint64_t seed);
  static Seq2SeqModel from_store(const ModelConfig& cfg,
                                 const ParamStore& store);
  ParamStore to_store() const;

  // Next-token logits [len(tgt_prefix), vocab] under teacher forcing.
  Graph::Value forward(Graph& g, const std::vector<int>& src,
                       const std::vector<int>& tgt_prefix) const;

  // Greedy decoding from BOS; stops at EOS or max_steps. The emitted
  // sequence excludes BOS/EOS.
  std::vector<int> greedy_decode(const std::vector<int>& src,
                                 int max_steps) const;

  const ModelConfig& config() const { return cfg_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

 private:
  ModelConfig cfg_;
  Params params_;
};

// f64 <-> f32 conversion at the checkpoint boundary.
ParamStore params_to_store(const Params& params);
Params params_from_store(const ParamStore& store);

}  // namespace perturbkit

#endif  // PERTURBKIT_MODELS_HPP_
