#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanex/autograd.hpp"
#include "spanex/candidates.hpp"
#include "spanex/error.hpp"
#include "spanex/parameters.hpp"
#include "spanex/types.hpp"

namespace spanex {

// One contextual vector per corpus token plus the sentence-level context
// vector shared by every span of the sentence.
struct TokenEmbeddingSequence {
  Var context;
  std::vector<Var> tokens;
};

// Coordinate-wise max over a group of equal-length vectors. This is the
// sub-token alignment rule: a token split into several sub-tokens gets the
// max-pool of their embeddings.
inline std::vector<double> max_pool_vectors(
    const std::vector<std::vector<double>>& group) {
  if (group.empty()) throw ShapeError("max pool over an empty group");
  std::vector<double> out = group.front();
  for (std::size_t k = 1; k < group.size(); ++k) {
    if (group[k].size() != out.size())
      throw ShapeError("max pool over mixed dimensions");
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = std::max(out[c], group[k][c]);
  }
  return out;
}

// Produces per-token embeddings on a tape. Implementations must be
// deterministic in evaluation mode given fixed parameters and input, and
// must emit exactly one vector per corpus token.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;

  virtual int dim() const = 0;
  virtual bool trainable() const = 0;
  virtual int max_length() const = 0;
  virtual std::string kind() const = 0;

  // Registers trainable blocks with the store (no-op for frozen adapters).
  virtual void register_parameters(ParamStore& store) = 0;

  virtual TokenEmbeddingSequence encode(Tape& tape,
                                        const Sentence& sentence) const = 0;

 protected:
  void check_length(const Sentence& sentence) const {
    if (sentence.tokens.empty())
      throw LengthError("sentence '" + sentence.id + "' has no tokens");
    if (sentence.length() > max_length())
      throw LengthError("sentence '" + sentence.id + "' has " +
                        std::to_string(sentence.length()) +
                        " tokens, adapter limit is " +
                        std::to_string(max_length()));
  }
};

// Token string -> dense id; id 0 is the unknown token.
class TokenVocab {
 public:
  static constexpr const char* kUnknown = "<unk>";

  TokenVocab() { add(kUnknown); }

  static TokenVocab from_sentences(const std::vector<Sentence>& sentences) {
    TokenVocab v;
    for (const auto& s : sentences)
      for (const auto& t : s.tokens) v.add(t);
    return v;
  }

  static TokenVocab from_tokens(const std::vector<std::string>& tokens) {
    TokenVocab v;
    for (const auto& t : tokens) v.add(t);
    return v;
  }

  int add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
  }

  int id_or_unknown(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? 0 : it->second;
  }

  const std::vector<std::string>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

// Trainable desk-scale encoder: a token lookup table, a width-3 tanh mixer
// over neighbouring lookups, and learned attention pooling for the sentence
// context vector.
class ToyEncoder : public EncoderAdapter {
 public:
  ToyEncoder(TokenVocab vocab, int dim, int max_len = 512)
      : vocab_(std::move(vocab)), dim_(dim), max_len_(max_len) {}

  int dim() const override { return dim_; }
  bool trainable() const override { return true; }
  int max_length() const override { return max_len_; }
  std::string kind() const override { return "toy"; }
  const TokenVocab& token_vocab() const { return vocab_; }

  void register_parameters(ParamStore& store) override {
    store.add("encoder.token_table", vocab_.size(), dim_);
    store.add("encoder.mixer_w", dim_, 3 * dim_);
    store.add("encoder.mixer_b", dim_, 1, InitKind::kZero);
    store.add("encoder.pool_w", 1, dim_);
    store.add("encoder.pool_b", 1, 1, InitKind::kZero);
  }

  TokenEmbeddingSequence encode(Tape& tape,
                                const Sentence& sentence) const override {
    check_length(sentence);
    const int n = sentence.length();
    std::vector<Var> lookups(n);
    for (int i = 0; i < n; ++i)
      lookups[i] = tape.param_row("encoder.token_table",
                                  vocab_.id_or_unknown(sentence.tokens[i]));
    const Var pad = tape.zeros(dim_);
    TokenEmbeddingSequence seq;
    seq.tokens.resize(n);
    for (int i = 0; i < n; ++i) {
      const Var window[] = {i > 0 ? lookups[i - 1] : pad, lookups[i],
                            i + 1 < n ? lookups[i + 1] : pad};
      seq.tokens[i] = tape.tanh_(
          tape.affine("encoder.mixer_w", "encoder.mixer_b",
                      tape.concat(window)));
    }
    // Context vector: softmax-attention pooling of the mixed token vectors.
    std::vector<Var> scores(n);
    for (int i = 0; i < n; ++i)
      scores[i] = tape.affine("encoder.pool_w", "encoder.pool_b",
                              seq.tokens[i]);
    const Var weights = tape.softmax(tape.concat(scores));
    seq.context = tape.weighted_sum(weights, seq.tokens);
    return seq;
  }

 private:
  TokenVocab vocab_;
  int dim_;
  int max_len_;
};

// Frozen adapter backed by an embedding cache exported from an external
// contextual encoder. The cache is JSON lines: a header {"dim": d}, then one
// record per sentence {"id": str, "cls": [d], "tokens": [[[d], ...], ...]}
// where each token holds the embeddings of its sub-tokens; alignment back to
// corpus tokens is done here by max-pooling each group.
class PretrainedEncoder : public EncoderAdapter {
 public:
  explicit PretrainedEncoder(const std::string& cache_path) {
    std::ifstream in(cache_path);
    if (!in)
      throw ParseError("cannot open embedding cache '" + cache_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(cache_path + ":" + std::to_string(line_no) + ": " +
                         e.what());
      }
      if (dim_ == 0) {
        if (!obj.contains("dim"))
          throw ParseError(cache_path +
                           ": first record must carry the embedding 'dim'");
        dim_ = obj["dim"].get<int>();
        if (dim_ <= 0) throw ParseError(cache_path + ": non-positive dim");
        continue;
      }
      Record rec;
      const std::string id = obj.value("id", std::string{});
      if (id.empty())
        throw ParseError(cache_path + ":" + std::to_string(line_no) +
                         ": record without sentence id");
      rec.context = obj.at("cls").get<std::vector<double>>();
      if (rec.context.size() != static_cast<std::size_t>(dim_))
        throw ShapeError(cache_path + ": sentence '" + id +
                         "' cls vector has wrong dimension");
      for (const auto& group : obj.at("tokens")) {
        auto subs = group.get<std::vector<std::vector<double>>>();
        for (const auto& v : subs)
          if (v.size() != static_cast<std::size_t>(dim_))
            throw ShapeError(cache_path + ": sentence '" + id +
                             "' sub-token vector has wrong dimension");
        rec.token_vectors.push_back(max_pool_vectors(subs));
      }
      max_len_ = std::max(max_len_, static_cast<int>(rec.token_vectors.size()));
      records_.emplace(id, std::move(rec));
    }
    if (dim_ == 0)
      throw ParseError(cache_path + ": empty embedding cache");
  }

  int dim() const override { return dim_; }
  bool trainable() const override { return false; }
  int max_length() const override { return max_len_; }
  std::string kind() const override { return "pretrained"; }

  void register_parameters(ParamStore&) override {}

  TokenEmbeddingSequence encode(Tape& tape,
                                const Sentence& sentence) const override {
    auto it = records_.find(sentence.id);
    if (it == records_.end())
      throw LengthError("sentence '" + sentence.id +
                        "' not present in the embedding cache");
    const Record& rec = it->second;
    if (rec.token_vectors.size() != sentence.tokens.size())
      throw ShapeError("sentence '" + sentence.id + "': cache has " +
                       std::to_string(rec.token_vectors.size()) +
                       " token vectors for " +
                       std::to_string(sentence.tokens.size()) + " tokens");
    TokenEmbeddingSequence seq;
    seq.context = tape.input(rec.context);
    for (const auto& v : rec.token_vectors)
      seq.tokens.push_back(tape.input(v));
    return seq;
  }

 private:
  struct Record {
    std::vector<double> context;
    std::vector<std::vector<double>> token_vectors;  // aligned, pooled
  };
  std::map<std::string, Record> records_;
  int dim_ = 0;
  int max_len_ = 0;
};

// Trainable lookup tables for span widths, binary distance features and
// (type, type, distance) features. Which tables exist depends on the
// ablation flags; sizes are fixed by the architecture.
class EmbeddingTables {
 public:
  EmbeddingTables(int dim, int max_span_width, int num_entity_types,
                  bool with_binary, bool with_multiclass)
      : dim_(dim),
        max_width_(max_span_width + 1),
        num_entity_types_(num_entity_types),
        with_binary_(with_binary),
        with_multiclass_(with_multiclass) {}

  void register_parameters(ParamStore& store) const {
    store.add("tables.width", max_width_, dim_);
    if (with_binary_)
      store.add("tables.bi_distance", kNumDistanceBuckets, dim_);
    if (with_multiclass_)
      store.add("tables.multiclass",
                static_cast<std::size_t>(num_entity_types_) *
                    num_entity_types_ * kNumDistanceBuckets,
                dim_);
  }

  // Width w (in tokens) maps to row w - 1.
  Var lookup_width(Tape& tape, int width) const {
    if (width < 1 || width > max_width_)
      throw IndexError("span width " + std::to_string(width) +
                       " outside [1, " + std::to_string(max_width_) + "]");
    return tape.param_row("tables.width", static_cast<std::size_t>(width - 1));
  }

  Var lookup_binary_feature(Tape& tape, int bucket) const {
    if (!with_binary_)
      throw Error("binary distance features are disabled");
    if (bucket < 0 || bucket > kMaxDistanceBucket)
      throw IndexError("distance bucket " + std::to_string(bucket) +
                       " outside [0, " + std::to_string(kMaxDistanceBucket) +
                       "]");
    return tape.param_row("tables.bi_distance",
                          static_cast<std::size_t>(bucket));
  }

  // Row index is the mixed radix ((head * |types|) + tail) * |buckets| + bucket,
  // a bijection between type-pair-distance triples and table rows.
  std::size_t multiclass_row(int head_type, int tail_type, int bucket) const {
    if (head_type < 0 || head_type >= num_entity_types_ || tail_type < 0 ||
        tail_type >= num_entity_types_)
      throw IndexError("entity type id out of range for feature lookup");
    if (bucket < 0 || bucket > kMaxDistanceBucket)
      throw IndexError("distance bucket " + std::to_string(bucket) +
                       " outside [0, " + std::to_string(kMaxDistanceBucket) +
                       "]");
    return (static_cast<std::size_t>(head_type) * num_entity_types_ +
            tail_type) *
               kNumDistanceBuckets +
           bucket;
  }

  Var lookup_multiclass_feature(Tape& tape, int head_type, int tail_type,
                                int bucket) const {
    if (!with_multiclass_)
      throw Error("multi-class features are disabled");
    return tape.param_row("tables.multiclass",
                          multiclass_row(head_type, tail_type, bucket));
  }

  int dim() const { return dim_; }
  int max_width() const { return max_width_; }
  bool has_binary() const { return with_binary_; }
  bool has_multiclass() const { return with_multiclass_; }

 private:
  int dim_;
  int max_width_;  // widest representable span, in tokens
  int num_entity_types_;
  bool with_binary_;
  bool with_multiclass_;
};

}  // namespace spanex
