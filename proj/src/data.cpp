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

#include "perturbkit/data.hpp"

#include "perturbkit/errors.hpp"
#include "perturbkit/noise.hpp"

namespace perturbkit {

namespace {

// [lo, hi] inclusive
int rand_int(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.next_unit() * (hi - lo + 1));
}

constexpr int kFillerBase = 10;
constexpr int kFillerRange = 20;
// Entity token ranges, rotated by TaggingShift::label_rotation.
constexpr int kEntityBase[3] = {30, 40, 50};
constexpr int kEntityRange = 10;

int entity_token(CounterRng& rng, int role, const TaggingShift& shift) {
  const int base = kEntityBase[(role + shift.label_rotation) % 3];
  return base + rand_int(rng, 0, kEntityRange - 1);
}

int filler_token(CounterRng& rng, const TaggingShift& shift) {
  const int off = rand_int(rng, 0, kFillerRange - 1);
  return kFillerBase + (off + shift.filler_offset) % kFillerRange;
}

}  // namespace

std::vector<RelationInstance> offset_relations(
    const std::vector<RelationInstance>& relations, int offset) {
  std::vector<RelationInstance> out;
  for (const RelationInstance& r : relations) {
    RelationInstance shifted = r;
    shifted.head.token_ids.clear();
    for (int t : r.head.token_ids) shifted.head.token_ids.insert(t + offset);
    shifted.tail.token_ids.clear();
    for (int t : r.tail.token_ids) shifted.tail.token_ids.insert(t + offset);
    out.push_back(std::move(shifted));
  }
  return out;
}

std::vector<TaggingExample> gen_tagging_data(std::uint64_t seed,
                                             std::size_t size,
                                             const TaggingShift& shift) {
  if (size == 0) throw EmptyDatasetError();
  CounterRng rng = derive_substream(seed, "tagging.data");
  std::vector<TaggingExample> out;
  out.reserve(size);
  for (std::size_t n = 0; n < size; ++n) {
    TaggingExample ex;
    auto push = [&](int token, int tag) {
      ex.tokens.push_back(token);
      ex.tags.push_back(tag);
    };
    for (int i = rand_int(rng, 0, 2); i > 0; --i)
      push(filler_token(rng, shift), 0);
    EntitySpan kpi{{}, "kpi"};
    for (int i = rand_int(rng, 1, 3); i > 0; --i) {
      kpi.token_ids.insert(static_cast<int>(ex.tokens.size()));
      push(entity_token(rng, 0, shift), 1);
    }
    for (int i = rand_int(rng, 1, 2); i > 0; --i)
      push(filler_token(rng, shift), 0);
    EntitySpan cy{{static_cast<int>(ex.tokens.size())}, "cy"};
    push(entity_token(rng, 1, shift), 2);
    ex.relations.push_back(RelationInstance{kpi, cy, "kpi-cy"});
    const bool has_py = rng.next_unit() < 0.5;
    if (has_py) {
      for (int i = rand_int(rng, 1, 2); i > 0; --i)
        push(filler_token(rng, shift), 0);
      EntitySpan py{{static_cast<int>(ex.tokens.size())}, "py"};
      push(entity_token(rng, 2, shift), 3);
      ex.relations.push_back(RelationInstance{kpi, py, "kpi-py"});
    }
    for (int i = rand_int(rng, 0, 2); i > 0; --i)
      push(filler_token(rng, shift), 0);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Seq2SeqExample> gen_seq2seq_data(std::uint64_t seed,
                                             std::size_t size,
                                             const Seq2SeqShift& shift) {
  if (size == 0) throw EmptyDatasetError();
  CounterRng rng = derive_substream(seed, "seq2seq.data");
  std::vector<Seq2SeqExample> out;
  out.reserve(size);
  for (std::size_t n = 0; n < size; ++n) {
    Seq2SeqExample ex;
    const int n_sentences = 2;
    const int marked = rand_int(rng, 0, n_sentences - 1);
    for (int s = 0; s < n_sentences; ++s) {
      if (s == marked) ex.src.push_back(kMark);
      const int len = rand_int(rng, 2, 3);
      for (int i = 0; i < len; ++i) {
        const int tok =
            kContentBase + (rand_int(rng, 0, 11) + shift.content_offset) % 12;
        ex.src.push_back(tok);
        if (s == marked) ex.tgt.push_back(tok);
      }
      ex.src.push_back(kSep);
    }
    ex.tgt.push_back(Seq2SeqModel::kEos);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace perturbkit
