#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spanex/error.hpp"
#include "spanex/parameters.hpp"

namespace spanex {

// Reverse-mode autodiff over vector-valued nodes. A Tape is built per batch
// (or per sentence at inference), evaluated eagerly on construction, and
// backward() accumulates parameter gradients into the owning ParamStore.
// Scalars are dimension-1 nodes.

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
  enum class Op {
    kInput,
    kParam,
    kAffine,
    kMaxPool,
    kConcat,
    kTanh,
    kSigmoid,
    kSoftmax,
    kClamp,
    kLog,
    kOneMinus,
    kPick,
    kCoordDot,
    kWeightedSum,
    kAdd,
    kScale,
  };

  struct Node {
    explicit Node(Op o) : op(o) {}
    Op op;
    std::vector<int> args;
    std::vector<double> value;
    std::vector<double> grad;
    // op-specific payload
    std::size_t param_offset = 0;          // kParam
    std::size_t w_offset = 0, w_rows = 0;  // kAffine
    std::size_t w_cols = 0, b_offset = 0;  // kAffine
    std::vector<int> winners;              // kMaxPool
    double lo = 0, hi = 0;                 // kClamp
    int pick_index = 0;                    // kPick
    std::vector<double> coeffs;            // kCoordDot
    double factor = 1.0;                   // kScale
  };

 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  std::size_t size() const { return nodes_.size(); }

  const std::vector<double>& value(Var v) const { return node(v).value; }
  const std::vector<double>& grad(Var v) const { return node(v).grad; }
  double scalar(Var v) const {
    const auto& val = node(v).value;
    if (val.size() != 1) throw ShapeError("node is not a scalar");
    return val[0];
  }
  int dim(Var v) const { return static_cast<int>(node(v).value.size()); }

  Var input(std::vector<double> value) {
    Node n{Op::kInput};
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var zeros(int dim) { return input(std::vector<double>(dim, 0.0)); }

  // Whole parameter block, flattened.
  Var param(const std::string& name) {
    const auto& info = require_store().info(name);
    return param_block(info.offset, info.size());
  }

  // One row of a parameter table; gradients accumulate into that row only.
  Var param_row(const std::string& name, std::size_t row) {
    const auto& info = require_store().info(name);
    if (row >= info.rows)
      throw IndexError("row " + std::to_string(row) + " out of range for '" +
                       name + "' (" + std::to_string(info.rows) + " rows)");
    return param_block(info.offset + row * info.cols, info.cols);
  }

  // y = W x + b with W (out x in) and b (out) taken from the store.
  Var affine(const std::string& w_name, const std::string& b_name, Var x) {
    const auto& store = require_store();
    const auto& w = store.info(w_name);
    const auto& b = store.info(b_name);
    const auto& xv = node(x).value;
    if (w.cols != xv.size())
      throw ShapeError("affine '" + w_name + "': input dim " +
                       std::to_string(xv.size()) + " != " +
                       std::to_string(w.cols));
    if (b.size() != w.rows)
      throw ShapeError("affine '" + w_name + "': bias dim mismatch");
    Node n{Op::kAffine};
    n.args = {x.id};
    n.w_offset = w.offset;
    n.w_rows = w.rows;
    n.w_cols = w.cols;
    n.b_offset = b.offset;
    n.value.resize(w.rows);
    const double* wp = store.raw_values().data() + w.offset;
    const double* bp = store.raw_values().data() + b.offset;
    for (std::size_t r = 0; r < w.rows; ++r) {
      double acc = bp[r];
      const double* wr = wp + r * w.cols;
      for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * xv[c];
      n.value[r] = acc;
    }
    return push(std::move(n));
  }

  // Coordinate-wise max over same-dimension inputs.
  Var maxpool(std::span<const Var> inputs) {
    if (inputs.empty()) throw ShapeError("maxpool over zero inputs");
    const std::size_t d = node(inputs[0]).value.size();
    Node n{Op::kMaxPool};
    n.value.assign(d, 0.0);
    n.winners.assign(d, 0);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto& v = node(inputs[k]).value;
      if (v.size() != d) throw ShapeError("maxpool over mixed dimensions");
      n.args.push_back(inputs[k].id);
      for (std::size_t c = 0; c < d; ++c) {
        if (k == 0 || v[c] > n.value[c]) {
          n.value[c] = v[c];
          n.winners[c] = static_cast<int>(k);
        }
      }
    }
    return push(std::move(n));
  }

  Var concat(std::span<const Var> inputs) {
    if (inputs.empty()) throw ShapeError("concat of zero inputs");
    Node n{Op::kConcat};
    for (Var v : inputs) {
      n.args.push_back(v.id);
      const auto& val = node(v).value;
      n.value.insert(n.value.end(), val.begin(), val.end());
    }
    return push(std::move(n));
  }

  Var tanh_(Var x) {
    Node n{Op::kTanh};
    n.args = {x.id};
    n.value = node(x).value;
    for (double& v : n.value) v = std::tanh(v);
    return push(std::move(n));
  }

  Var sigmoid(Var x) {
    Node n{Op::kSigmoid};
    n.args = {x.id};
    n.value = node(x).value;
    for (double& v : n.value) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(n));
  }

  // Max-subtracted for overflow safety; mathematically the plain softmax.
  Var softmax(Var x) {
    Node n{Op::kSoftmax};
    n.args = {x.id};
    n.value = node(x).value;
    const double m = *std::max_element(n.value.begin(), n.value.end());
    double sum = 0;
    for (double& v : n.value) {
      v = std::exp(v - m);
      sum += v;
    }
    for (double& v : n.value) v /= sum;
    return push(std::move(n));
  }

  Var clamp(Var x, double lo, double hi) {
    Node n{Op::kClamp};
    n.args = {x.id};
    n.lo = lo;
    n.hi = hi;
    n.value = node(x).value;
    for (double& v : n.value) v = std::clamp(v, lo, hi);
    return push(std::move(n));
  }

  Var log_(Var x) {
    Node n{Op::kLog};
    n.args = {x.id};
    n.value = node(x).value;
    for (double& v : n.value) v = std::log(v);
    return push(std::move(n));
  }

  Var one_minus(Var x) {
    Node n{Op::kOneMinus};
    n.args = {x.id};
    n.value = node(x).value;
    for (double& v : n.value) v = 1.0 - v;
    return push(std::move(n));
  }

  Var pick(Var x, int index) {
    const auto& v = node(x).value;
    if (index < 0 || static_cast<std::size_t>(index) >= v.size())
      throw IndexError("pick index " + std::to_string(index) +
                       " out of range");
    Node n{Op::kPick};
    n.args = {x.id};
    n.pick_index = index;
    n.value = {v[index]};
    return push(std::move(n));
  }

  // Scalar dot with constant coefficients.
  Var coord_dot(Var x, std::vector<double> coeffs) {
    const auto& v = node(x).value;
    if (v.size() != coeffs.size())
      throw ShapeError("coord_dot dimension mismatch");
    Node n{Op::kCoordDot};
    n.args = {x.id};
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += coeffs[i] * v[i];
    n.coeffs = std::move(coeffs);
    n.value = {acc};
    return push(std::move(n));
  }

  // y = sum_m weights[m] * inputs[m]; weights is a dim-k node.
  Var weighted_sum(Var weights, std::span<const Var> inputs) {
    const auto& w = node(weights).value;
    if (w.size() != inputs.size())
      throw ShapeError("weighted_sum: " + std::to_string(w.size()) +
                       " weights for " + std::to_string(inputs.size()) +
                       " inputs");
    if (inputs.empty()) throw ShapeError("weighted_sum of zero inputs");
    const std::size_t d = node(inputs[0]).value.size();
    Node n{Op::kWeightedSum};
    n.args.push_back(weights.id);
    n.value.assign(d, 0.0);
    for (std::size_t m = 0; m < inputs.size(); ++m) {
      const auto& v = node(inputs[m]).value;
      if (v.size() != d) throw ShapeError("weighted_sum over mixed dimensions");
      n.args.push_back(inputs[m].id);
      for (std::size_t c = 0; c < d; ++c) n.value[c] += w[m] * v[c];
    }
    return push(std::move(n));
  }

  // Elementwise sum of same-dimension nodes.
  Var add(std::span<const Var> inputs) {
    if (inputs.empty()) throw ShapeError("add of zero inputs");
    Node n{Op::kAdd};
    n.value = node(inputs[0]).value;
    n.args.push_back(inputs[0].id);
    for (std::size_t k = 1; k < inputs.size(); ++k) {
      const auto& v = node(inputs[k]).value;
      if (v.size() != n.value.size()) throw ShapeError("add dimension mismatch");
      n.args.push_back(inputs[k].id);
      for (std::size_t c = 0; c < v.size(); ++c) n.value[c] += v[c];
    }
    return push(std::move(n));
  }

  Var add(Var a, Var b) {
    const Var pair[] = {a, b};
    return add(pair);
  }

  Var scale(Var x, double factor) {
    Node n{Op::kScale};
    n.args = {x.id};
    n.factor = factor;
    n.value = node(x).value;
    for (double& v : n.value) v *= factor;
    return push(std::move(n));
  }

  // Seeds d(seed)/d(seed) = 1 and accumulates gradients down to inputs and
  // into the ParamStore. The seed must be scalar.
  void backward(Var seed) {
    Node& s = node(seed);
    if (s.value.size() != 1) throw ShapeError("backward from a non-scalar");
    for (Node& n : nodes_) n.grad.assign(n.value.size(), 0.0);
    s.grad[0] = 1.0;
    double* pgrad = store_ ? store_->raw_grads().data() : nullptr;
    const double* pval = store_ ? store_->raw_values().data() : nullptr;
    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
      Node& n = nodes_[idx];
      bool any = false;
      for (double g : n.grad)
        if (g != 0.0) {
          any = true;
          break;
        }
      if (!any) continue;
      switch (n.op) {
        case Op::kInput:
          break;
        case Op::kParam:
          for (std::size_t i = 0; i < n.value.size(); ++i)
            pgrad[n.param_offset + i] += n.grad[i];
          break;
        case Op::kAffine: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t r = 0; r < n.w_rows; ++r) {
            const double gr = n.grad[r];
            if (gr == 0.0) continue;
            const double* wr = pval + n.w_offset + r * n.w_cols;
            double* gwr = pgrad + n.w_offset + r * n.w_cols;
            pgrad[n.b_offset + r] += gr;
            for (std::size_t c = 0; c < n.w_cols; ++c) {
              gwr[c] += gr * x.value[c];
              x.grad[c] += gr * wr[c];
            }
          }
          break;
        }
        case Op::kMaxPool:
          for (std::size_t c = 0; c < n.value.size(); ++c)
            nodes_[n.args[n.winners[c]]].grad[c] += n.grad[c];
          break;
        case Op::kConcat: {
          std::size_t pos = 0;
          for (int arg : n.args) {
            Node& child = nodes_[arg];
            for (std::size_t c = 0; c < child.value.size(); ++c)
              child.grad[c] += n.grad[pos + c];
            pos += child.value.size();
          }
          break;
        }
        case Op::kTanh: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] += n.grad[c] * (1.0 - n.value[c] * n.value[c]);
          break;
        }
        case Op::kSigmoid: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] += n.grad[c] * n.value[c] * (1.0 - n.value[c]);
          break;
        }
        case Op::kSoftmax: {
          Node& x = nodes_[n.args[0]];
          double dot = 0;
          for (std::size_t c = 0; c < n.value.size(); ++c)
            dot += n.value[c] * n.grad[c];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] += n.value[c] * (n.grad[c] - dot);
          break;
        }
        case Op::kClamp: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            if (x.value[c] > n.lo && x.value[c] < n.hi)
              x.grad[c] += n.grad[c];
          break;
        }
        case Op::kLog: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] += n.grad[c] / x.value[c];
          break;
        }
        case Op::kOneMinus: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] -= n.grad[c];
          break;
        }
        case Op::kPick:
          nodes_[n.args[0]].grad[n.pick_index] += n.grad[0];
          break;
        case Op::kCoordDot: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.coeffs.size(); ++c)
            x.grad[c] += n.coeffs[c] * n.grad[0];
          break;
        }
        case Op::kWeightedSum: {
          Node& w = nodes_[n.args[0]];
          for (std::size_t m = 0; m + 1 < n.args.size(); ++m) {
            Node& in = nodes_[n.args[m + 1]];
            double acc = 0;
            for (std::size_t c = 0; c < n.value.size(); ++c) {
              in.grad[c] += w.value[m] * n.grad[c];
              acc += n.grad[c] * in.value[c];
            }
            w.grad[m] += acc;
          }
          break;
        }
        case Op::kAdd:
          for (int arg : n.args) {
            Node& child = nodes_[arg];
            for (std::size_t c = 0; c < n.value.size(); ++c)
              child.grad[c] += n.grad[c];
          }
          break;
        case Op::kScale: {
          Node& x = nodes_[n.args[0]];
          for (std::size_t c = 0; c < n.value.size(); ++c)
            x.grad[c] += n.factor * n.grad[c];
          break;
        }
      }
    }
  }

 private:
  Var param_block(std::size_t offset, std::size_t len) {
    Node n{Op::kParam};
    n.param_offset = offset;
    const double* base = require_store().raw_values().data();
    n.value.assign(base + offset, base + offset + len);
    return push(std::move(n));
  }

  ParamStore& require_store() {
    if (!store_) throw Error("tape has no parameter store attached");
    return *store_;
  }

  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  const Node& node(Var v) const {
    return nodes_.at(static_cast<std::size_t>(v.id));
  }

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  ParamStore* store_;
  std::vector<Node> nodes_;
};

}  // namespace spanex
