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

#ifndef PERTURBKIT_DATA_HPP_
#define PERTURBKIT_DATA_HPP_

#include <cstdint>
#include <vector>

#include "perturbkit/models.hpp"
#include "perturbkit/relation_metrics.hpp"

namespace perturbkit {

// One synthetic sentence: tokens, per-token tag ids, and gold relations in
// metric-ready form (token ids are positions within the sentence).
struct TaggingExample {
  std::vector<int> tokens;
  std::vector<int> tags;
  std::vector<RelationInstance> relations;
};

// Shift applied to the fine-tuning task relative to pre-training: rotates
// the entity-label assignment across token ranges and offsets the filler
// token distribution. shift = 0 reproduces the source task.
struct TaggingShift {
  int label_rotation = 0;
  int filler_offset = 0;
};

// Deterministic synthetic sentences with one kpi span, one cy value, and an
// optional py value; every sentence carries at least the kpi-cy relation.
// Token layout assumes vocab >= 64 and max_len >= 12.
std::vector<TaggingExample> gen_tagging_data(std::uint64_t seed,
                                             std::size_t size,
                                             const TaggingShift& shift = {});

// Metric-ready relation list for one example, with all token ids offset so
// sentences stay disjoint in a corpus-level score.
std::vector<RelationInstance> offset_relations(
    const std::vector<RelationInstance>& relations, int offset);

struct Seq2SeqExample {
  std::vector<int> src;  // sentences separated by kSep, salient one marked
  std::vector<int> tgt;  // content of the marked sentence, EOS-terminated
};

struct Seq2SeqShift {
  int content_offset = 0;
};

constexpr int kSep = 2;
constexpr int kMark = 3;
constexpr int kContentBase = 4;

// Salient-sentence extraction stand-in: the target copies the one marked
// source sentence. Throws EmptyDatasetError for size == 0.
std::vector<Seq2SeqExample> gen_seq2seq_data(std::uint64_t seed,
                                             std::size_t size,
                                             const Seq2SeqShift& shift = {});

}  // namespace perturbkit

#endif  // PERTURBKIT_DATA_HPP_
