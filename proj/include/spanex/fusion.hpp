#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "spanex/autograd.hpp"
#include "spanex/error.hpp"
#include "spanex/parameters.hpp"

namespace spanex {

// Result of fusing a group of candidate vectors: the convex combination and
// the gate weights that produced it (kept for inspection and tests).
struct FusedVector {
  Var output;
  Var gates;  // softmax weights, one per input
};

// Gated fusion of delta equal-length vectors. Each candidate E_m is scored
// with the site's linear probe v_m = w . E_m + b; the softmax of the scores
// gates a weighted sum. The output therefore lies in the convex hull of the
// inputs.
inline FusedVector gated_fuse(Tape& tape, const std::string& w_name,
                              const std::string& b_name,
                              std::span<const Var> inputs) {
  if (inputs.size() < 2)
    throw ShapeError("gated fusion needs at least two inputs, got " +
                     std::to_string(inputs.size()));
  const int d = tape.dim(inputs.front());
  for (const Var& v : inputs)
    if (tape.dim(v) != d)
      throw ShapeError("gated fusion over mixed dimensions");
  std::vector<Var> scores;
  scores.reserve(inputs.size());
  for (const Var& v : inputs)
    scores.push_back(tape.affine(w_name, b_name, v));
  FusedVector fused;
  fused.gates = tape.softmax(tape.concat(scores));
  fused.output = tape.weighted_sum(fused.gates, inputs);
  return fused;
}

// One fusion site of the model. With gating enabled the site owns (or
// shares) a scoring probe over equal-length inputs and emits their convex
// combination; with gating disabled it concatenates, so downstream heads see
// the summed input width.
class FusionSite {
 public:
  FusionSite(std::string name, std::vector<int> input_dims, bool gated,
             bool shared)
      : name_(std::move(name)),
        dims_(std::move(input_dims)),
        gated_(gated),
        w_name_(shared ? "fusion.shared_w" : "fusion." + name_ + "_w"),
        b_name_(shared ? "fusion.shared_b" : "fusion." + name_ + "_b") {
    if (dims_.size() < 2)
      throw ShapeError("fusion site '" + name_ + "' arity < 2");
    if (gated_)
      for (int d : dims_)
        if (d != dims_.front())
          throw ShapeError("fusion site '" + name_ +
                           "' gates over mixed dimensions");
  }

  // Registers the probe; a shared probe is only added once.
  void register_parameters(ParamStore& store) const {
    if (!gated_) return;
    if (store.has(w_name_)) return;
    store.add(w_name_, 1, dims_.front());
    store.add(b_name_, 1, 1, InitKind::kZero);
  }

  Var fuse(Tape& tape, std::span<const Var> inputs) const {
    if (inputs.size() != dims_.size())
      throw ShapeError("fusion site '" + name_ + "' expects " +
                       std::to_string(dims_.size()) + " inputs, got " +
                       std::to_string(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (tape.dim(inputs[i]) != dims_[i])
        throw ShapeError("fusion site '" + name_ + "' input " +
                         std::to_string(i) + " has wrong dimension");
    if (!gated_) return tape.concat(inputs);
    return gated_fuse(tape, w_name_, b_name_, inputs).output;
  }

  const std::string& name() const { return name_; }
  int arity() const { return static_cast<int>(dims_.size()); }
  bool gated() const { return gated_; }
  // Dimension the downstream head sees.
  int output_dim() const {
    return gated_ ? dims_.front() : std::accumulate(dims_.begin(), dims_.end(), 0);
  }

 private:
  std::string name_;
  std::vector<int> dims_;
  bool gated_;
  std::string w_name_;
  std::string b_name_;
};

}  // namespace spanex
