#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spanex/error.hpp"
#include "spanex/random.hpp"

namespace spanex {

// How a parameter block is filled at init time. Weight matrices, score
// vectors and embedding tables draw from a zero-mean uniform distribution
// scaled by 1/sqrt(fan_in); biases start at zero.
enum class InitKind { kUniformFanIn, kZero };

struct ParamInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for plain vectors
  InitKind init = InitKind::kUniformFanIn;

  std::size_t size() const { return rows * cols; }
};

// All trainable weights live in one flat array with named blocks, registered
// in a fixed order so checkpoints are stable. Gradients are a parallel array
// accumulated into by the tape's backward pass.
class ParamStore {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols,
                  InitKind init = InitKind::kUniformFanIn) {
    if (index_.count(name))
      throw Error("parameter '" + name + "' registered twice");
    ParamInfo info{std::move(name), values_.size(), rows, cols, init};
    index_.emplace(info.name, infos_.size());
    values_.resize(values_.size() + info.size(), 0.0);
    grads_.resize(values_.size(), 0.0);
    infos_.push_back(std::move(info));
    return infos_.back().offset;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const ParamInfo& info(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
    return infos_[it->second];
  }

  const std::vector<ParamInfo>& infos() const { return infos_; }

  std::span<double> values(const std::string& name) {
    const auto& i = info(name);
    return {values_.data() + i.offset, i.size()};
  }
  std::span<const double> values(const std::string& name) const {
    const auto& i = info(name);
    return {values_.data() + i.offset, i.size()};
  }
  std::span<double> row(const std::string& name, std::size_t r) {
    const auto& i = info(name);
    if (r >= i.rows)
      throw IndexError("row " + std::to_string(r) + " out of range for '" +
                       name + "' (" + std::to_string(i.rows) + " rows)");
    return {values_.data() + i.offset + r * i.cols, i.cols};
  }

  std::vector<double>& raw_values() { return values_; }
  const std::vector<double>& raw_values() const { return values_; }
  std::vector<double>& raw_grads() { return grads_; }
  const std::vector<double>& raw_grads() const { return grads_; }

  std::size_t count() const { return values_.size(); }

  void zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

  void initialize(std::uint64_t seed) {
    auto rng = make_rng(seed);
    for (const auto& info : infos_) {
      double* block = values_.data() + info.offset;
      if (info.init == InitKind::kZero) {
        std::fill(block, block + info.size(), 0.0);
        continue;
      }
      const double scale =
          1.0 / std::sqrt(static_cast<double>(info.cols > 0 ? info.cols : 1));
      for (std::size_t i = 0; i < info.size(); ++i)
        block[i] = uniform_real(rng, -scale, scale);
    }
  }

  // Raw little-endian double blob with a short header; round-trips the
  // parameter state bit-exactly.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write parameter file '" + path + "'");
    const char magic[8] = {'s', 'p', 'a', 'n', 'e', 'x', 'P', '1'};
    out.write(magic, sizeof(magic));
    std::uint64_t n = values_.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw CheckpointError("short write to '" + path + "'");
  }

  void load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read parameter file '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, "spanexP1", 8) != 0)
      throw CheckpointError("'" + path + "' is not a parameter file");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n != values_.size())
      throw CheckpointError(
          "parameter count mismatch in '" + path + "': file has " +
          std::to_string(n) + ", architecture expects " +
          std::to_string(values_.size()));
    in.read(reinterpret_cast<char*>(values_.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw CheckpointError("truncated parameter file '" + path + "'");
  }

 private:
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<ParamInfo> infos_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace spanex
