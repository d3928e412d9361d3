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

#include "perturbkit/param_store.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace perturbkit {

namespace {

// Checkpoint layout, little-endian throughout, no padding:
//   magic "PKPT" | u32 version=1 | u64 record count
//   per record: u32 name length | name bytes | u8 kind | u8 zone component
//               | i32 layer index (-1 = absent) | u32 ndim | ndim x u64 dims
//               | numel x f32 data
constexpr std::uint8_t kMagic[4] = {0x50, 0x4B, 0x50, 0x54};
constexpr std::uint32_t kVersion = 1;

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  bool segment_empty = true;
  for (char c : name) {
    if (c == '.') {
      if (segment_empty) return false;
      segment_empty = true;
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      segment_empty = false;
    } else {
      return false;
    }
  }
  return !segment_empty;
}

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    // Host is assumed little-endian; asserted at startup in the reader.
    out_.insert(out_.end(), buf, buf + sizeof(T));
  }

  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > in_.size()) throw TruncatedFileError(what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void get_bytes(void* p, std::size_t n, const char* what) {
    if (pos_ + n > in_.size()) throw TruncatedFileError(what);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void validate_record(const TensorRecord& rec) {
  if (!valid_name(rec.name))
    throw ShapeMismatchError("invalid record name: '" + rec.name + "'");
  std::uint64_t n = 1;
  for (std::uint64_t d : rec.shape) {
    if (d == 0) throw ShapeMismatchError("zero dimension in '" + rec.name + "'");
    n *= d;
  }
  if (n != rec.data.size())
    throw ShapeMismatchError("shape/data mismatch in '" + rec.name + "': " +
                             std::to_string(n) + " vs " +
                             std::to_string(rec.data.size()));
  for (float v : rec.data)
    if (!std::isfinite(v))
      throw NonFiniteValueError("non-finite value in '" + rec.name + "'");
  if (rec.zone.layer_index &&
      rec.zone.component != ZoneComponent::kEncoder &&
      rec.zone.component != ZoneComponent::kDecoder)
    throw ShapeMismatchError("layer index on non-layered zone in '" +
                             rec.name + "'");
}

void ParamStore::put(TensorRecord rec) {
  validate_record(rec);
  if (index_.count(rec.name)) throw DuplicateNameError(rec.name);
  index_.emplace(rec.name, records_.size());
  records_.push_back(std::move(rec));
}

const TensorRecord* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &records_[it->second];
}

TensorRecord* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<std::uint8_t> write_checkpoint_bytes(const ParamStore& store) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(store.size());
  for (const TensorRecord& rec : store.records()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.name.size()));
    w.put_bytes(rec.name.data(), rec.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.zone.component));
    w.put<std::int32_t>(rec.zone.layer_index ? *rec.zone.layer_index : -1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.shape.size()));
    for (std::uint64_t d : rec.shape) w.put<std::uint64_t>(d);
    w.put_bytes(rec.data.data(), rec.data.size() * sizeof(float));
  }
  return out;
}

ParamStore read_checkpoint_bytes(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  std::uint8_t magic[4];
  r.get_bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagicError();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw UnsupportedVersionError(version);
  const auto count = r.get<std::uint64_t>("record count");
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorRecord rec;
    const auto name_len = r.get<std::uint32_t>("name length");
    rec.name.resize(name_len);
    r.get_bytes(rec.name.data(), name_len, "name");
    rec.kind = static_cast<TensorKind>(r.get<std::uint8_t>("kind"));
    rec.zone.component =
        static_cast<ZoneComponent>(r.get<std::uint8_t>("zone"));
    const auto layer = r.get<std::int32_t>("layer index");
    if (layer >= 0) rec.zone.layer_index = layer;
    const auto ndim = r.get<std::uint32_t>("ndim");
    rec.shape.resize(ndim);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      rec.shape[d] = r.get<std::uint64_t>("dim");
      numel *= rec.shape[d];
    }
    rec.data.resize(numel);
    r.get_bytes(rec.data.data(), numel * sizeof(float), "tensor data");
    store.put(std::move(rec));
  }
  return store;
}

ParamStore read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_checkpoint_bytes(bytes);
}

void write_checkpoint(const ParamStore& store, const std::string& path) {
  const auto bytes = write_checkpoint_bytes(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

TensorKind infer_kind_from_name(const std::string& name) {
  auto ends_with = [&](const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
  };
  if (ends_with(".ln.gain") || ends_with(".ln_gain"))
    return TensorKind::kLayerNormGain;
  if (ends_with(".ln.bias") || ends_with(".ln_bias"))
    return TensorKind::kLayerNormBias;
  if (ends_with("emb.weight")) return TensorKind::kEmbedding;
  if (ends_with(".weight")) return TensorKind::kWeight;
  if (ends_with(".bias")) return TensorKind::kBias;
  return TensorKind::kOther;
}

ZoneTag infer_zone_from_name(const std::string& name) {
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
    return zone;
  }
  const auto dot = rest.find('.');
  const std::string seg = rest.substr(0, dot);
  if (!seg.empty() &&
      seg.find_first_not_of("0123456789") == std::string::npos)
    zone.layer_index = static_cast<std::int32_t>(std::stol(seg));
  return zone;
}

const char* kind_name(TensorKind kind) {
  switch (kind) {
    case TensorKind::kWeight: return "weight";
    case TensorKind::kBias: return "bias";
    case TensorKind::kLayerNormGain: return "ln_gain";
    case TensorKind::kLayerNormBias: return "ln_bias";
    case TensorKind::kEmbedding: return "embedding";
    case TensorKind::kOther: return "other";
  }
  return "?";
}

const char* zone_name(ZoneComponent z) {
  switch (z) {
    case ZoneComponent::kNone: return "none";
    case ZoneComponent::kEncoder: return "encoder";
    case ZoneComponent::kDecoder: return "decoder";
    case ZoneComponent::kHead: return "head";
  }
  return "?";
}

}  // namespace perturbkit
