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

#include "perturbkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace perturbkit {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// b broadcastable into a when b.shape is a suffix of a.shape.
bool suffix_broadcastable(const std::vector<std::size_t>& a,
                          const std::vector<std::size_t>& b) {
  if (b.size() > a.size()) return false;
  return std::equal(b.rbegin(), b.rend(), a.rbegin());
}

}  // namespace

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::filled(std::vector<std::size_t> shape, double v) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Graph::Value Graph::emplace(Tensor value, std::function<void()> backprop,
                            std::string param_name) {
  Node node;
  node.grad = Tensor::zeros(value.shape);
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  node.param_name = std::move(param_name);
  nodes_.push_back(std::move(node));
  return Value{nodes_.size() - 1};
}

Graph::Value Graph::input(Tensor t) { return emplace(std::move(t)); }

Graph::Value Graph::param(const std::string& name, Tensor t) {
  return emplace(std::move(t), {}, name);
}

Graph::Value Graph::matmul(Value a, Value b) {
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  std::size_t batch = 1, m, k, n;
  if (ta.rank() == 2 && tb.rank() == 2) {
    m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    if (tb.dim(0) != k)
      throw ShapeError("matmul inner dims " + shape_str(ta.shape) + " x " +
                       shape_str(tb.shape));
  } else if (ta.rank() == 3 && tb.rank() == 3 && ta.dim(0) == tb.dim(0)) {
    batch = ta.dim(0), m = ta.dim(1), k = ta.dim(2), n = tb.dim(2);
    if (tb.dim(1) != k)
      throw ShapeError("batched matmul inner dims " + shape_str(ta.shape) +
                       " x " + shape_str(tb.shape));
  } else {
    throw ShapeError("matmul rank mismatch " + shape_str(ta.shape) + " x " +
                     shape_str(tb.shape));
  }
  std::vector<std::size_t> out_shape =
      ta.rank() == 2 ? std::vector<std::size_t>{m, n}
                     : std::vector<std::size_t>{batch, m, n};
  Tensor out = Tensor::zeros(out_shape);
  for (std::size_t s = 0; s < batch; ++s) {
    const double* pa = ta.data.data() + s * m * k;
    const double* pb = tb.data.data() + s * k * n;
    double* po = out.data.data() + s * m * n;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = pa[i * k + kk];
        for (std::size_t j = 0; j < n; ++j) po[i * n + j] += av * pb[kk * n + j];
      }
  }
  auto back = [this, a, b, batch, m, k, n, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    const Tensor& ta = nodes_[a.id].value;
    const Tensor& tb = nodes_[b.id].value;
    Tensor& ga = nodes_[a.id].grad;
    Tensor& gb = nodes_[b.id].grad;
    for (std::size_t s = 0; s < batch; ++s) {
      const double* pg = g.data.data() + s * m * n;
      const double* pa = ta.data.data() + s * m * k;
      const double* pb = tb.data.data() + s * k * n;
      double* pga = ga.data.data() + s * m * k;
      double* pgb = gb.data.data() + s * k * n;
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = pg[i * n + j];
          for (std::size_t kk = 0; kk < k; ++kk)
            pga[i * k + kk] += gv * pb[kk * n + j];
        }
      // dB = A^T * dC
      for (std::size_t kk = 0; kk < k; ++kk)
        for (std::size_t i = 0; i < m; ++i) {
          const double av = pa[i * k + kk];
          for (std::size_t j = 0; j < n; ++j)
            pgb[kk * n + j] += av * pg[i * n + j];
        }
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::add(Value a, Value b) {
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!suffix_broadcastable(ta.shape, tb.shape))
    throw ShapeError("add shapes " + shape_str(ta.shape) + " + " +
                     shape_str(tb.shape));
  const std::size_t nb = tb.numel();
  Tensor out = ta;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += tb.data[i % nb];
  auto back = [this, a, b, nb, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    Tensor& gb = nodes_[b.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i % nb] += g.data[i];
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::mul(Value a, Value b) {
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!suffix_broadcastable(ta.shape, tb.shape))
    throw ShapeError("mul shapes " + shape_str(ta.shape) + " * " +
                     shape_str(tb.shape));
  const std::size_t nb = tb.numel();
  Tensor out = ta;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= tb.data[i % nb];
  auto back = [this, a, b, nb, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    const Tensor& ta = nodes_[a.id].value;
    const Tensor& tb = nodes_[b.id].value;
    Tensor& ga = nodes_[a.id].grad;
    Tensor& gb = nodes_[b.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += g.data[i] * tb.data[i % nb];
      gb.data[i % nb] += g.data[i] * ta.data[i];
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::scale(Value a, double s) {
  Tensor out = nodes_[a.id].value;
  for (double& v : out.data) v *= s;
  auto back = [this, a, s, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += s * g.data[i];
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::softmax(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  if (ta.rank() == 0) throw ShapeError("softmax on scalar");
  const std::size_t cols = ta.shape.back();
  const std::size_t rows = ta.numel() / cols;
  Tensor out = ta;
  for (std::size_t r = 0; r < rows; ++r) {
    double* p = out.data.data() + r * cols;
    const double mx = *std::max_element(p, p + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(p[c] - mx);
      sum += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= sum;
  }
  auto back = [this, a, rows, cols, out_id = nodes_.size()]() {
    const Tensor& y = nodes_[out_id].value;
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* py = y.data.data() + r * cols;
      const double* pg = g.data.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += py[c] * pg[c];
      double* pga = ga.data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c)
        pga[c] += py[c] * (pg[c] - dot);
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::layer_norm(Value a, double eps) {
  const Tensor& ta = nodes_[a.id].value;
  const std::size_t cols = ta.shape.back();
  const std::size_t rows = ta.numel() / cols;
  Tensor out = ta;
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double* p = out.data.data() + r * cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += p[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = p[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) p[c] = (p[c] - mean) * inv_std[r];
  }
  auto back = [this, a, rows, cols, inv_std = std::move(inv_std),
               out_id = nodes_.size()]() {
    const Tensor& y = nodes_[out_id].value;
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* py = y.data.data() + r * cols;
      const double* pg = g.data.data() + r * cols;
      double g_mean = 0.0, gy_mean = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        g_mean += pg[c];
        gy_mean += pg[c] * py[c];
      }
      g_mean /= static_cast<double>(cols);
      gy_mean /= static_cast<double>(cols);
      double* pga = ga.data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c)
        pga[c] += inv_std[r] * (pg[c] - g_mean - py[c] * gy_mean);
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::gelu(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  Tensor out = ta;
  for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  auto back = [this, a, out_id = nodes_.size()]() {
    const Tensor& x = nodes_[a.id].value;
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double xv = x.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(xv * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv * xv);
      ga.data[i] += g.data[i] * (cdf + xv * pdf);
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::gather_rows(Value table, std::vector<int> ids) {
  const Tensor& tt = nodes_[table.id].value;
  if (tt.rank() != 2) throw ShapeError("gather_rows expects a 2D table");
  const std::size_t cols = tt.dim(1);
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= tt.dim(0))
      throw ShapeError("gather_rows index out of range");
  Tensor out = Tensor::zeros({ids.size(), cols});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(tt.data.data() + static_cast<std::size_t>(ids[i]) * cols, cols,
                out.data.data() + i * cols);
  auto back = [this, table, ids = std::move(ids), cols,
               out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& gt = nodes_[table.id].grad;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = gt.data.data() + static_cast<std::size_t>(ids[i]) * cols;
      const double* src = g.data.data() + i * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::mean_rows(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  if (ta.rank() != 2) throw ShapeError("mean_rows expects 2D");
  const std::size_t rows = ta.dim(0), cols = ta.dim(1);
  Tensor out = Tensor::zeros({cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out.data[c] += ta.data[r * cols + c];
  for (double& v : out.data) v /= static_cast<double>(rows);
  auto back = [this, a, rows, cols, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        ga.data[r * cols + c] += g.data[c] * inv;
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::sum_all(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  double s = 0.0;
  for (double v : ta.data) s += v;
  auto back = [this, a, out_id = nodes_.size()]() {
    const double g = nodes_[out_id].grad.data[0];
    Tensor& ga = nodes_[a.id].grad;
    for (double& v : ga.data) v += g;
  };
  return emplace(Tensor::scalar(s), back);
}

Graph::Value Graph::reshape(Value a, std::vector<std::size_t> shape) {
  const Tensor& ta = nodes_[a.id].value;
  if (shape_numel(shape) != ta.numel())
    throw ShapeError("reshape numel mismatch " + shape_str(ta.shape) +
                     " -> " + shape_str(shape));
  Tensor out(std::move(shape), ta.data);
  auto back = [this, a, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::transpose_01(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  if (ta.rank() != 3) throw ShapeError("transpose_01 expects 3D");
  const std::size_t d0 = ta.dim(0), d1 = ta.dim(1), d2 = ta.dim(2);
  Tensor out = Tensor::zeros({d1, d0, d2});
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      std::copy_n(ta.data.data() + (i * d1 + j) * d2, d2,
                  out.data.data() + (j * d0 + i) * d2);
  auto back = [this, a, d0, d1, d2, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t i = 0; i < d0; ++i)
      for (std::size_t j = 0; j < d1; ++j) {
        const double* src = g.data.data() + (j * d0 + i) * d2;
        double* dst = ga.data.data() + (i * d1 + j) * d2;
        for (std::size_t k = 0; k < d2; ++k) dst[k] += src[k];
      }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::transpose_12(Value a) {
  const Tensor& ta = nodes_[a.id].value;
  if (ta.rank() != 3) throw ShapeError("transpose_12 expects 3D");
  const std::size_t d0 = ta.dim(0), d1 = ta.dim(1), d2 = ta.dim(2);
  Tensor out = Tensor::zeros({d0, d2, d1});
  for (std::size_t b = 0; b < d0; ++b)
    for (std::size_t i = 0; i < d1; ++i)
      for (std::size_t j = 0; j < d2; ++j)
        out.data[(b * d2 + j) * d1 + i] = ta.data[(b * d1 + i) * d2 + j];
  auto back = [this, a, d0, d1, d2, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t b = 0; b < d0; ++b)
      for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j)
          ga.data[(b * d1 + i) * d2 + j] += g.data[(b * d2 + j) * d1 + i];
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::concat0(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat0 of nothing");
  const Tensor& first = nodes_[parts[0].id].value;
  std::vector<std::size_t> tail(first.shape.begin() + 1, first.shape.end());
  std::size_t rows = 0;
  for (Value p : parts) {
    const Tensor& t = nodes_[p.id].value;
    std::vector<std::size_t> tl(t.shape.begin() + 1, t.shape.end());
    if (tl != tail) throw ShapeError("concat0 trailing shape mismatch");
    rows += t.dim(0);
  }
  std::vector<std::size_t> shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  Tensor out = Tensor::zeros(shape);
  std::size_t offset = 0;
  for (Value p : parts) {
    const Tensor& t = nodes_[p.id].value;
    std::copy(t.data.begin(), t.data.end(), out.data.begin() + offset);
    offset += t.numel();
  }
  auto back = [this, parts, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    std::size_t offset = 0;
    for (Value p : parts) {
      Tensor& gp = nodes_[p.id].grad;
      for (std::size_t i = 0; i < gp.numel(); ++i)
        gp.data[i] += g.data[offset + i];
      offset += gp.numel();
    }
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::slice0(Value a, std::size_t lo, std::size_t hi) {
  const Tensor& ta = nodes_[a.id].value;
  if (ta.rank() == 0 || lo >= hi || hi > ta.dim(0))
    throw ShapeError("slice0 range");
  const std::size_t stride = ta.numel() / ta.dim(0);
  std::vector<std::size_t> shape = ta.shape;
  shape[0] = hi - lo;
  Tensor out(shape, std::vector<double>(ta.data.begin() + lo * stride,
                                        ta.data.begin() + hi * stride));
  auto back = [this, a, lo, stride, out_id = nodes_.size()]() {
    const Tensor& g = nodes_[out_id].grad;
    Tensor& ga = nodes_[a.id].grad;
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[lo * stride + i] += g.data[i];
  };
  return emplace(std::move(out), back);
}

Graph::Value Graph::cross_entropy(Value logits, std::vector<int> targets) {
  const Tensor& tl = nodes_[logits.id].value;
  if (tl.rank() != 2 || tl.dim(0) != targets.size())
    throw ShapeError("cross_entropy expects [n, classes] logits with n "
                     "targets");
  const std::size_t n = tl.dim(0), classes = tl.dim(1);
  // Cache softmax rows for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(n * classes);
  double loss = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = tl.data.data() + i * classes;
    const double mx = *std::max_element(p, p + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      (*probs)[i * classes + c] = std::exp(p[c] - mx);
      sum += (*probs)[i * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) (*probs)[i * classes + c] /= sum;
    const int t = targets[i];
    if (t < 0) continue;
    if (static_cast<std::size_t>(t) >= classes)
      throw ShapeError("cross_entropy target out of range");
    loss += -std::log(std::max((*probs)[i * classes + t], 1e-300));
    ++active;
  }
  if (active > 0) loss /= static_cast<double>(active);
  auto back = [this, logits, targets = std::move(targets), probs, n, classes,
               active, out_id = nodes_.size()]() {
    if (active == 0) return;
    const double g = nodes_[out_id].grad.data[0] / static_cast<double>(active);
    Tensor& gl = nodes_[logits.id].grad;
    for (std::size_t i = 0; i < n; ++i) {
      const int t = targets[i];
      if (t < 0) continue;
      for (std::size_t c = 0; c < classes; ++c) {
        double d = (*probs)[i * classes + c];
        if (c == static_cast<std::size_t>(t)) d -= 1.0;
        gl.data[i * classes + c] += g * d;
      }
    }
  };
  return emplace(Tensor::scalar(loss), back);
}

void Graph::backward(Value loss) {
  if (nodes_[loss.id].value.numel() != 1)
    throw ShapeError("backward needs a scalar loss");
  if (backward_done_)
    throw CycleError("backward called twice on one tape");
  backward_done_ = true;
  nodes_[loss.id].grad.data[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop();
  }
}

std::map<std::string, Tensor> Graph::param_grads() const {
  std::map<std::string, Tensor> out;
  for (const Node& n : nodes_) {
    if (n.param_name.empty()) continue;
    // A parameter may be bound as several leaves; contributions add up.
    auto [it, inserted] = out.emplace(n.param_name, n.grad);
    if (!inserted)
      for (std::size_t i = 0; i < n.grad.data.size(); ++i)
        it->second.data[i] += n.grad.data[i];
  }
  return out;
}

}  // namespace perturbkit
