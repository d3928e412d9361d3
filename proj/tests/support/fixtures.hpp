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

#ifndef PERTURBKIT_TESTS_SUPPORT_FIXTURES_HPP_
#define PERTURBKIT_TESTS_SUPPORT_FIXTURES_HPP_

#include <string>
#include <vector>

#include "perturbkit/param_store.hpp"

namespace pk_test {

inline perturbkit::TensorRecord make_record(
    std::string name, std::vector<std::uint64_t> shape,
    std::vector<float> data,
    perturbkit::TensorKind kind = perturbkit::TensorKind::kWeight,
    perturbkit::ZoneTag zone = {}) {
  perturbkit::TensorRecord rec;
  rec.name = std::move(name);
  rec.shape = std::move(shape);
  rec.data = std::move(data);
  rec.kind = kind;
  rec.zone = zone;
  return rec;
}

// Mixed-metadata store: 7 bias and 9 weight records plus layer-norm,
// embedding, and zone variety.
inline perturbkit::ParamStore fixture_store() {
  using namespace perturbkit;
  ParamStore store;
  auto enc = [](int layer) {
    return ZoneTag{ZoneComponent::kEncoder, layer};
  };
  auto dec = [](int layer) {
    return ZoneTag{ZoneComponent::kDecoder, layer};
  };
  const ZoneTag head{ZoneComponent::kHead, {}};
  const ZoneTag enc_nolayer{ZoneComponent::kEncoder, {}};
  int v = 0;
  auto data = [&v](std::size_t n) {
    std::vector<float> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = 0.25f * float(++v % 7) - 0.5f;
    return d;
  };
  store.put(make_record("emb.weight", {4, 3}, data(12), TensorKind::kEmbedding,
                        enc_nolayer));
  for (int layer = 0; layer < 4; ++layer) {
    const std::string p = "enc." + std::to_string(layer);
    store.put(make_record(p + ".w.weight", {3, 3}, data(9),
                          TensorKind::kWeight, enc(layer)));
    store.put(make_record(p + ".w.bias", {3}, data(3), TensorKind::kBias,
                          enc(layer)));
    store.put(make_record(p + ".ln.gain", {3}, data(3),
                          TensorKind::kLayerNormGain, enc(layer)));
    store.put(make_record(p + ".ln.bias", {3}, data(3),
                          TensorKind::kLayerNormBias, enc(layer)));
  }
  for (int layer = 0; layer < 2; ++layer) {
    const std::string p = "dec." + std::to_string(layer);
    store.put(make_record(p + ".w.weight", {3, 3}, data(9),
                          TensorKind::kWeight, dec(layer)));
    store.put(make_record(p + ".w.bias", {3}, data(3), TensorKind::kBias,
                          dec(layer)));
  }
  store.put(make_record("head.tag.weight", {3, 2}, data(6),
                        TensorKind::kWeight, head));
  store.put(make_record("head.tag.bias", {2}, data(2), TensorKind::kBias,
                        head));
  store.put(make_record("head.rel.weight", {2, 3, 3}, data(18),
                        TensorKind::kWeight, head));
  store.put(make_record("head.other", {2}, data(2), TensorKind::kOther, head));
  store.put(make_record("enc.final.weight", {3, 3}, data(9),
                        TensorKind::kWeight, enc_nolayer));
  return store;
}

}  // namespace pk_test

#endif  // PERTURBKIT_TESTS_SUPPORT_FIXTURES_HPP_
