#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spanex/autograd.hpp"
#include "spanex/candidates.hpp"
#include "spanex/config.hpp"
#include "spanex/encoder.hpp"
#include "spanex/error.hpp"
#include "spanex/fusion.hpp"
#include "spanex/parameters.hpp"
#include "spanex/types.hpp"

namespace spanex {

struct ModelConfig {
  int max_span_width = 10;
  AblationFlags flags;
  bool share_fusion_params = false;
};

// Representation of one candidate span: the max-pool over its token vectors,
// the shared sentence context vector, the width embedding, and their fusion.
struct SpanRep {
  Span span;
  Var token_maxpool;
  Var context;
  Var width_embed;
  Var fused;
};

// Index 0 of every binary head is the positive class.
constexpr int kPositiveIndex = 0;

// The joint extractor. Builds all candidate representations on a tape;
// the same code path serves training (teacher forcing) and inference.
class Model {
 public:
  Model(std::shared_ptr<EncoderAdapter> encoder, LabelVocab vocab,
        ModelConfig cfg)
      : encoder_(std::move(encoder)),
        vocab_(std::move(vocab)),
        cfg_(cfg),
        tables_(encoder_->dim(), cfg.max_span_width, vocab_.num_entity_types(),
                cfg.flags.two_phase && cfg.flags.bi_features,
                cfg.flags.multi_features),
        span_site_("span", {dim(), dim(), dim()}, cfg.flags.gated_fusion,
                   cfg.share_fusion_params),
        relation_site_("rel_binary", relation_input_dims(),
                       cfg.flags.gated_fusion, cfg.share_fusion_params) {
    if (vocab_.num_entity_types() == 0)
      throw VocabError("model needs at least one entity type");
    if (cfg_.flags.multi_features)
      relation_type_site_.emplace(
          "rel_type", std::vector<int>{relation_rep_dim(), dim()},
          cfg_.flags.gated_fusion, cfg_.share_fusion_params);
  }

  int dim() const { return encoder_->dim(); }
  const LabelVocab& vocab() const { return vocab_; }
  const ModelConfig& config() const { return cfg_; }
  const EncoderAdapter& encoder() const { return *encoder_; }
  const EmbeddingTables& tables() const { return tables_; }
  bool two_phase() const { return cfg_.flags.two_phase; }

  // --- head input widths -------------------------------------------------

  int span_rep_dim() const { return span_site_.output_dim(); }
  int relation_rep_dim() const { return relation_site_.output_dim(); }
  int relation_type_in_dim() const {
    return relation_type_site_ ? relation_type_site_->output_dim()
                               : relation_rep_dim();
  }
  // Class counts for the typing heads: single-phase mode carries an extra
  // null class with the highest id.
  int entity_type_classes() const {
    return vocab_.num_entity_types() + (two_phase() ? 0 : 1);
  }
  int relation_type_classes() const {
    return vocab_.num_relation_types() + (two_phase() ? 0 : 1);
  }
  int not_entity_id() const { return vocab_.num_entity_types(); }
  int not_relation_id() const { return vocab_.num_relation_types(); }

  // Registration order is part of the checkpoint contract.
  void register_parameters(ParamStore& store) const {
    encoder_->register_parameters(store);
    tables_.register_parameters(store);
    span_site_.register_parameters(store);
    relation_site_.register_parameters(store);
    if (relation_type_site_) relation_type_site_->register_parameters(store);
    if (two_phase()) {
      store.add("head.entity_binary_w", 2, span_rep_dim());
      store.add("head.entity_binary_b", 2, 1, InitKind::kZero);
      store.add("head.relation_binary_w", 2, relation_rep_dim());
      store.add("head.relation_binary_b", 2, 1, InitKind::kZero);
    }
    store.add("head.entity_type_w", entity_type_classes(), span_rep_dim());
    store.add("head.entity_type_b", entity_type_classes(), 1, InitKind::kZero);
    store.add("head.relation_type_w", relation_type_classes(),
              relation_type_in_dim());
    store.add("head.relation_type_b", relation_type_classes(), 1,
              InitKind::kZero);
  }

  // --- representation builders -------------------------------------------

  TokenEmbeddingSequence encode(Tape& tape, const Sentence& sentence) const {
    return encoder_->encode(tape, sentence);
  }

  SpanRep span_representation(Tape& tape, const TokenEmbeddingSequence& seq,
                              const Span& span) const {
    if (span.start < 0 || span.end >= static_cast<int>(seq.tokens.size()))
      throw IndexError("span [" + std::to_string(span.start) + ", " +
                       std::to_string(span.end) + "] outside the sentence");
    SpanRep rep;
    rep.span = span;
    rep.token_maxpool = tape.maxpool(
        std::span<const Var>(seq.tokens.data() + span.start,
                             static_cast<std::size_t>(span.width())));
    rep.context = seq.context;
    // Teacher forcing may present gold spans wider than any enumerated
    // candidate; widths saturate at the last table row.
    rep.width_embed = tables_.lookup_width(
        tape, std::min(span.width(), tables_.max_width()));
    const Var parts[] = {rep.token_maxpool, rep.context, rep.width_embed};
    rep.fused = span_site_.fuse(tape, parts);
    return rep;
  }

  // Max-pool over the tokens strictly between two spans; the zero vector
  // when the spans touch or overlap.
  Var relation_context(Tape& tape, const TokenEmbeddingSequence& seq,
                       const Span& a, const Span& b) const {
    const Span& left = a.start <= b.start ? a : b;
    const Span& right = a.start <= b.start ? b : a;
    const int lo = left.end + 1;
    const int hi = std::min(right.start - 1,
                            static_cast<int>(seq.tokens.size()) - 1);
    if (lo > hi) return tape.zeros(dim());
    return tape.maxpool(std::span<const Var>(
        seq.tokens.data() + lo, static_cast<std::size_t>(hi - lo + 1)));
  }

  // R_r: fusion of the two span representations with the in-between context
  // and, when enabled, the binary distance feature for the pair. Without
  // gating the span representation widens to 3d, so the relation stage falls
  // back to the span's token max-pool to keep every input d-wide and the
  // head widths at their documented arity * d.
  Var relation_representation(Tape& tape, const TokenEmbeddingSequence& seq,
                              const SpanRep& head, const SpanRep& tail) const {
    const Var head_in =
        cfg_.flags.gated_fusion ? head.fused : head.token_maxpool;
    const Var tail_in =
        cfg_.flags.gated_fusion ? tail.fused : tail.token_maxpool;
    std::vector<Var> parts = {head_in, tail_in,
                              relation_context(tape, seq, head.span,
                                               tail.span)};
    if (tables_.has_binary())
      parts.push_back(tables_.lookup_binary_feature(
          tape, bucket_distance(entity_distance(head.span, tail.span))));
    return relation_site_.fuse(tape, parts);
  }

  // Input to the relation typing head: the relation representation fused
  // with the (head type, tail type, distance) feature when enabled.
  Var relation_type_input(Tape& tape, Var relation_rep, int head_type,
                          int tail_type, int distance_bucket) const {
    if (!relation_type_site_) return relation_rep;
    const Var feature = tables_.lookup_multiclass_feature(
        tape, head_type, tail_type, distance_bucket);
    const Var parts[] = {relation_rep, feature};
    return relation_type_site_->fuse(tape, parts);
  }

  // --- heads --------------------------------------------------------------

  Var entity_binary_logits(Tape& tape, const SpanRep& rep) const {
    return tape.affine("head.entity_binary_w", "head.entity_binary_b",
                       rep.fused);
  }
  Var relation_binary_logits(Tape& tape, Var relation_rep) const {
    return tape.affine("head.relation_binary_w", "head.relation_binary_b",
                       relation_rep);
  }
  Var entity_type_logits(Tape& tape, const SpanRep& rep) const {
    return tape.affine("head.entity_type_w", "head.entity_type_b", rep.fused);
  }
  Var relation_type_logits(Tape& tape, Var type_input) const {
    return tape.affine("head.relation_type_w", "head.relation_type_b",
                       type_input);
  }

  // Binary decision over per-class sigmoid activations; ties resolve to the
  // positive class so an untrained uniform head does not silence phase two.
  bool binary_positive(Tape& tape, Var logits) const {
    const auto probs = tape.value(tape.sigmoid(logits));
    return probs[kPositiveIndex] >= probs[1 - kPositiveIndex];
  }

  // Arg-max with ties resolved to the lowest class id.
  static int argmax_class(Tape& tape, Var logits) {
    const auto v = tape.value(logits);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  // --- inference ----------------------------------------------------------

  // Full decoding pass; the result carries the same tokens with predicted
  // mentions, relations referencing indices into the predicted entity list.
  Sentence forward_inference(ParamStore& store, const Sentence& sentence) const {
    Tape tape(&store);
    const TokenEmbeddingSequence seq = encode(tape, sentence);

    Sentence out;
    out.id = sentence.id;
    out.tokens = sentence.tokens;

    std::vector<SpanRep> entity_reps;  // accepted entities, in span order
    std::vector<int> entity_types;
    for (const Span& span :
         enumerate_spans(sentence.length(), cfg_.max_span_width)) {
      SpanRep rep = span_representation(tape, seq, span);
      int type_id;
      if (two_phase()) {
        if (!binary_positive(tape, entity_binary_logits(tape, rep))) continue;
        type_id = argmax_class(tape, entity_type_logits(tape, rep));
      } else {
        type_id = argmax_class(tape, entity_type_logits(tape, rep));
        if (type_id == not_entity_id()) continue;
      }
      out.entities.push_back(EntityMention{
          span.start, span.end, vocab_.entity_name(type_id), {}, {}});
      entity_reps.push_back(std::move(rep));
      entity_types.push_back(type_id);
    }

    for (std::size_t h = 0; h < entity_reps.size(); ++h) {
      for (std::size_t t = 0; t < entity_reps.size(); ++t) {
        if (h == t) continue;
        const Var rel_rep =
            relation_representation(tape, seq, entity_reps[h], entity_reps[t]);
        const int bucket = bucket_distance(
            entity_distance(entity_reps[h].span, entity_reps[t].span));
        if (two_phase() &&
            !binary_positive(tape, relation_binary_logits(tape, rel_rep)))
          continue;
        const Var type_in = relation_type_input(
            tape, rel_rep, entity_types[h], entity_types[t], bucket);
        const int type_id =
            argmax_class(tape, relation_type_logits(tape, type_in));
        if (!two_phase() && type_id == not_relation_id()) continue;
        out.relations.push_back(RelationMention{static_cast<int>(h),
                                                static_cast<int>(t),
                                                vocab_.relation_name(type_id)});
      }
    }
    return out;
  }

 private:
  std::vector<int> relation_input_dims() const {
    const int arity =
        (cfg_.flags.two_phase && cfg_.flags.bi_features) ? 4 : 3;
    return std::vector<int>(static_cast<std::size_t>(arity), dim());
  }

  std::shared_ptr<EncoderAdapter> encoder_;
  LabelVocab vocab_;
  ModelConfig cfg_;
  EmbeddingTables tables_;
  FusionSite span_site_;
  FusionSite relation_site_;
  std::optional<FusionSite> relation_type_site_;
};

// Model assembly from a resolved run configuration.
inline std::shared_ptr<EncoderAdapter> make_encoder(
    const RunConfig& run, const std::vector<Sentence>& train_sentences) {
  if (run.encoder_kind == "toy")
    return std::make_shared<ToyEncoder>(
        TokenVocab::from_sentences(train_sentences), run.encoder_dim,
        run.encoder_max_len);
  if (run.encoder_kind == "pretrained") {
    if (run.encoder_embeddings.empty())
      throw ConfigError("encoder.kind=pretrained needs encoder.embeddings");
    return std::make_shared<PretrainedEncoder>(run.encoder_embeddings);
  }
  throw ConfigError("unknown encoder.kind '" + run.encoder_kind + "'");
}

inline Model make_model(const RunConfig& run, const LabelVocab& vocab,
                        std::shared_ptr<EncoderAdapter> encoder) {
  ModelConfig mc;
  mc.max_span_width = run.max_span_width;
  mc.flags = run.flags;
  mc.share_fusion_params = run.fusion_share_params;
  return Model(std::move(encoder), vocab, mc);
}

}  // namespace spanex
