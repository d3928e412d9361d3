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

#ifndef PERTURBKIT_PIPELINE_HPP_
#define PERTURBKIT_PIPELINE_HPP_

#include "perturbkit/data.hpp"
#include "perturbkit/models.hpp"
#include "perturbkit/train.hpp"

namespace perturbkit {

struct TrainConfig {
  int steps = 200;
  int batch = 8;
  AdamConfig adam;
};

// Tag cross-entropy plus relation cross-entropy over all ordered pairs of
// gold spans.
Graph::Value tagger_example_loss(Graph& g, const TaggerModel& model,
                                 const TaggingExample& ex);

// Deterministic minibatch SGD/Adam; batch sampling is seeded.
void train_tagger(TaggerModel& model, const std::vector<TaggingExample>& data,
                  const TrainConfig& cfg, std::uint64_t seed);

double tagger_eval_loss(const TaggerModel& model,
                        const std::vector<TaggingExample>& data);

// Decoded relations for one sentence: argmax tags -> spans -> argmax pair
// labels, dropping "none".
std::vector<RelationInstance> tagger_predict(const TaggerModel& model,
                                             const std::vector<int>& tokens);

// Corpus-level (micro) adjusted F1; sentences are kept disjoint by offsetting
// token ids per sentence.
double tagger_adjusted_f1(const TaggerModel& model,
                          const std::vector<TaggingExample>& data);

Graph::Value seq2seq_example_loss(Graph& g, const Seq2SeqModel& model,
                                  const Seq2SeqExample& ex);

void train_seq2seq(Seq2SeqModel& model,
                   const std::vector<Seq2SeqExample>& data,
                   const TrainConfig& cfg, std::uint64_t seed);

double seq2seq_eval_loss(const Seq2SeqModel& model,
                         const std::vector<Seq2SeqExample>& data);

// Mean per-example ROUGE-Average of greedy decodes against references.
double seq2seq_rouge_average(const Seq2SeqModel& model,
                             const std::vector<Seq2SeqExample>& data);
// Mean per-example ROUGE-1 F1 (used by the copy-task sanity check).
double seq2seq_rouge1(const Seq2SeqModel& model,
                      const std::vector<Seq2SeqExample>& data);

}  // namespace perturbkit

#endif  // PERTURBKIT_PIPELINE_HPP_
