#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spanex/error.hpp"

namespace spanex {

// Flat-keyed text config: one `key = value` per line, `#` comments, dotted
// key prefixes mirror module names (corpus., encoder., spans., sampling.,
// fusion., train., eval., output.). Precedence: CLI overrides > file >
// defaults.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Config cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!cfg.apply_line(line))
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected 'key = value', got '" + line + "'");
    }
    return cfg;
  }

  // `key=value`; used both for file lines and --set overrides.
  void set(const std::string& assignment) {
    if (!apply_line(assignment))
      throw ConfigError("bad override '" + assignment +
                        "': expected key=value");
  }

  void set(const std::string& key, const std::string& value) {
    entries_[key] = value;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback = "") const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
      std::size_t pos = 0;
      long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + it->second +
                        "' is not an integer");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + it->second +
                        "' is not a number");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
  }

  // Deterministic snapshot (sorted keys), stored inside checkpoints.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
    return out.str();
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  bool apply_line(const std::string& raw) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    auto strip = [](std::string s) {
      const char* ws = " \t\r\n";
      auto b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string{};
      auto e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) return true;
    auto eq = line.find('=');
    if (eq == std::string::npos) return false;
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty()) return false;
    entries_[key] = value;
    return true;
  }

  std::map<std::string, std::string> entries_;
};

// Ablation switches. `two_phase = false` disables the binary classification
// stage (single-pass multi-class heads) and with it the binary distance
// features; `base` is all four switches off.
struct AblationFlags {
  bool two_phase = true;
  bool bi_features = true;
  bool multi_features = true;
  bool gated_fusion = true;

  bool operator==(const AblationFlags&) const = default;

  static AblationFlags full() { return {true, true, true, true}; }
  static AblationFlags base() { return {false, false, false, false}; }
};

struct TrainSettings {
  int epochs = 120;
  double learning_rate = 5e-5;
  double weight_decay = 1e-2;
  double warmup_fraction = 0.1;
  int batch_size = 8;
  std::uint64_t seed = 42;

  void validate() const {
    if (epochs <= 0) throw ConfigError("train.epochs must be positive");
    if (learning_rate < 0) throw ConfigError("train.learning_rate must be >= 0");
    if (weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
    if (warmup_fraction < 0 || warmup_fraction >= 1)
      throw ConfigError("train.warmup_fraction must lie in [0, 1)");
    if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  }
};

// Fully resolved run configuration with defaults applied.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string vocab_path;  // pinned label vocab; required to evaluate saved models

  std::string encoder_kind = "toy";  // toy | pretrained
  int encoder_dim = 32;              // toy adapter only; pretrained reports its own
  int encoder_max_len = 512;
  std::string encoder_embeddings;    // embedding cache for the pretrained adapter
  bool encoder_finetune = true;

  int max_span_width = 10;  // the span width threshold: widths up to this + 1
  long neg_entities = 100;
  long neg_relations = 100;
  std::uint64_t sampling_seed = 0;  // defaults to train seed

  AblationFlags flags;
  bool fusion_share_params = false;

  TrainSettings train;

  std::string eval_policy = "conll04";  // conll04 | ace05 | scierc
  bool eval_macro = false;
  std::vector<std::string> symmetric_relations;

  std::string output_dir = "out";

  static RunConfig resolve(const Config& cfg) {
    RunConfig rc;
    rc.train_path = cfg.get_string("corpus.train");
    rc.dev_path = cfg.get_string("corpus.dev");
    rc.test_path = cfg.get_string("corpus.test");
    rc.vocab_path = cfg.get_string("corpus.vocab");

    rc.encoder_kind = cfg.get_string("encoder.kind", "toy");
    if (rc.encoder_kind != "toy" && rc.encoder_kind != "pretrained")
      throw ConfigError("encoder.kind must be 'toy' or 'pretrained', got '" +
                        rc.encoder_kind + "'");
    rc.encoder_dim = static_cast<int>(cfg.get_int("encoder.dim", 32));
    if (rc.encoder_dim <= 0) throw ConfigError("encoder.dim must be positive");
    rc.encoder_max_len =
        static_cast<int>(cfg.get_int("encoder.max_len", 512));
    rc.encoder_embeddings = cfg.get_string("encoder.embeddings");
    rc.encoder_finetune = cfg.get_bool("encoder.finetune", true);

    rc.max_span_width = static_cast<int>(cfg.get_int("spans.max_width", 10));
    if (rc.max_span_width < 0)
      throw ConfigError("spans.max_width must be >= 0");
    rc.neg_entities = cfg.get_int("sampling.neg_entities", 100);
    rc.neg_relations = cfg.get_int("sampling.neg_relations", 100);
    if (rc.neg_entities < 0 || rc.neg_relations < 0)
      throw ConfigError("sampling limits must be >= 0");

    rc.flags.two_phase = cfg.get_bool("two_phase", true);
    rc.flags.bi_features = cfg.get_bool("bi_features", true);
    rc.flags.multi_features = cfg.get_bool("multi_features", true);
    rc.flags.gated_fusion = cfg.get_bool("fusion.enabled", true);
    // Binary distance features only exist inside the two-phase pipeline.
    if (!rc.flags.two_phase) rc.flags.bi_features = false;
    rc.fusion_share_params = cfg.get_bool("fusion.share_params", false);

    rc.train.epochs = static_cast<int>(cfg.get_int("train.epochs", 120));
    rc.train.learning_rate = cfg.get_double("train.learning_rate", 5e-5);
    rc.train.weight_decay = cfg.get_double("train.weight_decay", 1e-2);
    rc.train.warmup_fraction = cfg.get_double("train.warmup_fraction", 0.1);
    rc.train.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 8));
    rc.train.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 42));
    rc.train.validate();
    rc.sampling_seed = cfg.has("sampling.seed")
                           ? static_cast<std::uint64_t>(
                                 cfg.get_int("sampling.seed", 0))
                           : rc.train.seed;

    rc.eval_policy = cfg.get_string("eval.policy", "conll04");
    if (rc.eval_policy != "conll04" && rc.eval_policy != "ace05" &&
        rc.eval_policy != "scierc")
      throw ConfigError("eval.policy must be conll04, ace05 or scierc");
    rc.eval_macro = cfg.get_bool("eval.macro", false);
    {
      std::istringstream list(cfg.get_string("eval.symmetric_relations"));
      std::string item;
      while (std::getline(list, item, ','))
        if (!item.empty()) rc.symmetric_relations.push_back(item);
    }

    rc.output_dir = cfg.get_string("output.dir", "out");
    return rc;
  }

  void require_file(const std::string& path, const std::string& key) const {
    if (path.empty()) throw ConfigError("config key '" + key + "' is required");
    if (!std::filesystem::exists(path))
      throw ConfigError("config key '" + key + "': file '" + path +
                        "' does not exist");
  }
};

}  // namespace spanex
