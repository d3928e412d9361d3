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

#include "perturbkit/pipeline.hpp"

#include <algorithm>

#include "perturbkit/noise.hpp"
#include "perturbkit/rouge.hpp"

namespace perturbkit {

namespace {

// Per-sentence token-id offset that keeps corpus-level spans disjoint.
constexpr int kSentenceStride = 1000;

int gold_pair_label(const TagSpan& a, const TagSpan& b) {
  if (a.tag == 1 && b.tag == 2) return 1;  // kpi-cy
  if (a.tag == 1 && b.tag == 3) return 2;  // kpi-py
  return 0;
}

Graph::Value relation_pair_loss(Graph& g, const TaggerModel& model,
                                Graph::Value hidden,
                                const std::vector<TagSpan>& spans,
                                const std::vector<int>& pair_labels) {
  std::vector<Graph::Value> logits;
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t j = 0; j < spans.size(); ++j) {
      if (i == j) continue;
      logits.push_back(model.relation_logits(g, hidden, spans[i].positions(),
                                             spans[j].positions()));
    }
  return g.cross_entropy(g.concat0(logits), pair_labels);
}

std::vector<int> gold_pair_labels(const std::vector<TagSpan>& spans) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t j = 0; j < spans.size(); ++j) {
      if (i == j) continue;
      labels.push_back(gold_pair_label(spans[i], spans[j]));
    }
  return labels;
}

template <typename Model, typename Example, typename LossFn>
void train_generic(Model& model, const std::vector<Example>& data,
                   const TrainConfig& cfg, std::uint64_t seed, LossFn loss_fn) {
  if (data.empty()) throw EmptyDatasetError();
  CounterRng rng = derive_substream(seed, "train.batches");
  AdamState adam;
  for (int step = 0; step < cfg.steps; ++step) {
    std::map<std::string, Tensor> total;
    for (int b = 0; b < cfg.batch; ++b) {
      const std::size_t idx = static_cast<std::size_t>(
          rng.next_unit() * static_cast<double>(data.size()));
      Graph g;
      Graph::Value loss = loss_fn(g, model, data[idx]);
      g.backward(loss);
      for (auto& [name, grad] : g.param_grads()) {
        auto it = total.find(name);
        if (it == total.end()) {
          total.emplace(name, std::move(grad));
        } else {
          for (std::size_t i = 0; i < grad.numel(); ++i)
            it->second.data[i] += grad.data[i];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch);
    for (auto& [name, grad] : total)
      for (double& v : grad.data) v *= inv;
    adam.step(model.params(), total, cfg.adam);
  }
}

std::vector<TokenSeq> ids_to_sentence(const std::vector<int>& ids) {
  TokenSeq toks;
  toks.reserve(ids.size());
  for (int t : ids) toks.push_back("t" + std::to_string(t));
  return {std::move(toks)};
}

std::vector<int> strip_eos(const std::vector<int>& tgt) {
  std::vector<int> out = tgt;
  if (!out.empty() && out.back() == Seq2SeqModel::kEos) out.pop_back();
  return out;
}

}  // namespace

Graph::Value tagger_example_loss(Graph& g, const TaggerModel& model,
                                 const TaggingExample& ex) {
  auto fwd = model.forward(g, ex.tokens);
  Graph::Value loss = g.cross_entropy(fwd.tag_logits, ex.tags);
  const std::vector<TagSpan> spans = extract_spans(ex.tags);
  if (spans.size() >= 2) {
    Graph::Value rel_loss =
        relation_pair_loss(g, model, fwd.hidden, spans, gold_pair_labels(spans));
    loss = g.add(loss, rel_loss);
  }
  return loss;
}

void train_tagger(TaggerModel& model, const std::vector<TaggingExample>& data,
                  const TrainConfig& cfg, std::uint64_t seed) {
  train_generic(model, data, cfg, seed,
                [](Graph& g, const TaggerModel& m, const TaggingExample& ex) {
                  return tagger_example_loss(g, m, ex);
                });
}

double tagger_eval_loss(const TaggerModel& model,
                        const std::vector<TaggingExample>& data) {
  if (data.empty()) throw EmptyDatasetError();
  double total = 0.0;
  for (const TaggingExample& ex : data) {
    Graph g;
    total += g.value(tagger_example_loss(g, model, ex)).data[0];
  }
  return total / static_cast<double>(data.size());
}

std::vector<RelationInstance> tagger_predict(const TaggerModel& model,
                                             const std::vector<int>& tokens) {
  Graph g;
  auto fwd = model.forward(g, tokens);
  const Tensor& logits = g.value(fwd.tag_logits);
  const std::size_t n_tags = logits.dim(1);
  std::vector<int> tags(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double* row = logits.data.data() + i * n_tags;
    tags[i] = static_cast<int>(
        std::max_element(row, row + n_tags) - row);
  }
  const std::vector<TagSpan> spans = extract_spans(tags);
  std::vector<RelationInstance> out;
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t j = 0; j < spans.size(); ++j) {
      if (i == j) continue;
      Graph::Value rl = model.relation_logits(g, fwd.hidden,
                                              spans[i].positions(),
                                              spans[j].positions());
      const Tensor& rv = g.value(rl);
      const int best = static_cast<int>(
          std::max_element(rv.data.begin(), rv.data.end()) - rv.data.begin());
      if (best == 0) continue;
      RelationInstance rel;
      rel.label = relation_names()[best];
      rel.head.label = tag_names()[spans[i].tag];
      rel.tail.label = tag_names()[spans[j].tag];
      for (int p : spans[i].positions()) rel.head.token_ids.insert(p);
      for (int p : spans[j].positions()) rel.tail.token_ids.insert(p);
      out.push_back(std::move(rel));
    }
  return out;
}

double tagger_adjusted_f1(const TaggerModel& model,
                          const std::vector<TaggingExample>& data) {
  std::vector<RelationInstance> preds, golds;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const int offset = static_cast<int>(n) * kSentenceStride;
    for (auto& r : offset_relations(tagger_predict(model, data[n].tokens),
                                    offset))
      preds.push_back(std::move(r));
    for (auto& r : offset_relations(data[n].relations, offset))
      golds.push_back(std::move(r));
  }
  return adjusted_f1(preds, golds);
}

Graph::Value seq2seq_example_loss(Graph& g, const Seq2SeqModel& model,
                                  const Seq2SeqExample& ex) {
  std::vector<int> prefix = {Seq2SeqModel::kBos};
  prefix.insert(prefix.end(), ex.tgt.begin(), ex.tgt.end() - 1);
  Graph::Value logits = model.forward(g, ex.src, prefix);
  return g.cross_entropy(logits, ex.tgt);
}

void train_seq2seq(Seq2SeqModel& model,
                   const std::vector<Seq2SeqExample>& data,
                   const TrainConfig& cfg, std::uint64_t seed) {
  train_generic(model, data, cfg, seed,
                [](Graph& g, const Seq2SeqModel& m, const Seq2SeqExample& ex) {
                  return seq2seq_example_loss(g, m, ex);
                });
}

double seq2seq_eval_loss(const Seq2SeqModel& model,
                         const std::vector<Seq2SeqExample>& data) {
  if (data.empty()) throw EmptyDatasetError();
  double total = 0.0;
  for (const Seq2SeqExample& ex : data) {
    Graph g;
    total += g.value(seq2seq_example_loss(g, model, ex)).data[0];
  }
  return total / static_cast<double>(data.size());
}

double seq2seq_rouge_average(const Seq2SeqModel& model,
                             const std::vector<Seq2SeqExample>& data) {
  if (data.empty()) throw EmptyDatasetError();
  double total = 0.0;
  for (const Seq2SeqExample& ex : data) {
    const std::vector<int> decoded =
        model.greedy_decode(ex.src, model.config().max_len);
    total += rouge_all(ids_to_sentence(decoded),
                       ids_to_sentence(strip_eos(ex.tgt)))
                 .average();
  }
  return total / static_cast<double>(data.size());
}

double seq2seq_rouge1(const Seq2SeqModel& model,
                      const std::vector<Seq2SeqExample>& data) {
  if (data.empty()) throw EmptyDatasetError();
  double total = 0.0;
  for (const Seq2SeqExample& ex : data) {
    const std::vector<int> decoded =
        model.greedy_decode(ex.src, model.config().max_len);
    total += rouge_all(ids_to_sentence(decoded),
                       ids_to_sentence(strip_eos(ex.tgt)))
                 .rouge1_f1;
  }
  return total / static_cast<double>(data.size());
}

}  // namespace perturbkit
