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

#ifndef PERTURBKIT_PARAM_STORE_HPP_
#define PERTURBKIT_PARAM_STORE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "perturbkit/errors.hpp"

namespace perturbkit {

enum class TensorKind : std::uint8_t {
  kWeight = 0,
  kBias = 1,
  kLayerNormGain = 2,
  kLayerNormBias = 3,
  kEmbedding = 4,
  kOther = 5,
};

enum class ZoneComponent : std::uint8_t {
  kNone = 0,
  kEncoder = 1,
  kDecoder = 2,
  kHead = 3,
};

struct ZoneTag {
  ZoneComponent component = ZoneComponent::kNone;
  // Only meaningful for encoder/decoder zones.
  std::optional<std::int32_t> layer_index;

  bool operator==(const ZoneTag&) const = default;
};

// A named, shape-tagged flat array of f32 values plus the metadata the
// selector language dispatches on. Data is row-major.
struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
  TensorKind kind = TensorKind::kOther;
  ZoneTag zone;

  std::size_t numel() const { return data.size(); }
  bool operator==(const TensorRecord&) const = default;
};

// Validates invariants (name syntax, shape/data consistency, finiteness).
// Throws ShapeMismatchError or NonFiniteValueError.
void validate_record(const TensorRecord& rec);

// Ordered collection of TensorRecords. Iteration order is insertion order;
// names are unique.
class ParamStore {
 public:
  // Throws DuplicateNameError or the validate_record errors.
  void put(TensorRecord rec);

  const TensorRecord* find(const std::string& name) const;
  TensorRecord* find(const std::string& name);

  const std::vector<TensorRecord>& records() const { return records_; }
  std::vector<TensorRecord>& records() { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool operator==(const ParamStore& other) const {
    return records_ == other.records_;
  }

 private:
  std::vector<TensorRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

ParamStore read_checkpoint(const std::string& path);
void write_checkpoint(const ParamStore& store, const std::string& path);

// In-memory variants backing the file API; handy for byte-level tests.
ParamStore read_checkpoint_bytes(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> write_checkpoint_bytes(const ParamStore& store);

// Advisory helper for ingesting foreign checkpoints: guesses kind from name
// suffix (".weight", ".bias", ...) and zone from "enc."/"dec." prefixes with
// a numeric path segment as layer index.
TensorKind infer_kind_from_name(const std::string& name);
ZoneTag infer_zone_from_name(const std::string& name);

const char* kind_name(TensorKind kind);
const char* zone_name(ZoneComponent z);

}  // namespace perturbkit

#endif  // PERTURBKIT_PARAM_STORE_HPP_
