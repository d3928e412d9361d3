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

#ifndef PERTURBKIT_AUTODIFF_HPP_
#define PERTURBKIT_AUTODIFF_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "perturbkit/errors.hpp"

namespace perturbkit {

// Dense f64 tensor, row-major. All graph math runs in f64; f32 only at the
// checkpoint boundary.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor filled(std::vector<std::size_t> shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Reverse-mode tape. Values are handles into the tape; backward() walks the
// tape in reverse creation order. The tape is rebuilt per forward pass.
class Graph {
 public:
  struct Value {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value input(Tensor t);
  Value param(const std::string& name, Tensor t);

  // 2D x 2D, or 3D x 3D with matching leading batch dim.
  Value matmul(Value a, Value b);
  // Same shape, or b's shape a suffix of a's shape (bias / mask broadcast).
  Value add(Value a, Value b);
  // Elementwise; same broadcast rule as add.
  Value mul(Value a, Value b);
  Value scale(Value a, double s);
  // Softmax over the last axis.
  Value softmax(Value a);
  // Normalizes the last axis to zero mean / unit variance; gain and bias are
  // applied separately via mul/add.
  Value layer_norm(Value a, double eps = 1e-5);
  Value gelu(Value a);
  // Row gather: out[i] = table[ids[i]]; also serves as embedding lookup.
  Value gather_rows(Value table, std::vector<int> ids);
  // Mean over axis 0: [n, d] -> [d].
  Value mean_rows(Value a);
  Value sum_all(Value a);  // -> [1]
  Value reshape(Value a, std::vector<std::size_t> shape);
  // Swap the first two axes of a 3D tensor.
  Value transpose_01(Value a);
  // Swap the last two axes of a 3D tensor.
  Value transpose_12(Value a);
  // Concatenate along axis 0; shapes must agree elsewhere.
  Value concat0(const std::vector<Value>& parts);
  // Rows [lo, hi) of the first axis.
  Value slice0(Value a, std::size_t lo, std::size_t hi);
  // Mean cross-entropy of logits [n, classes] against integer targets;
  // target -1 is ignored. Scalar output.
  Value cross_entropy(Value logits, std::vector<int> targets);

  // Accumulates gradients for everything reachable from `loss` (scalar).
  void backward(Value loss);

  const Tensor& value(Value v) const { return nodes_[v.id].value; }
  const Tensor& grad(Value v) const { return nodes_[v.id].grad; }

  // Gradients per parameter name after backward(); parameters not reachable
  // from the loss come back as zeros.
  std::map<std::string, Tensor> param_grads() const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backprop;  // empty for leaves
    std::string param_name;          // non-empty for parameters
  };

  Value emplace(Tensor value, std::function<void()> backprop = {},
                std::string param_name = {});
  Tensor& grad_ref(std::size_t id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace perturbkit

#endif  // PERTURBKIT_AUTODIFF_HPP_
