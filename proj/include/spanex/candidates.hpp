#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "spanex/random.hpp"
#include "spanex/types.hpp"

namespace spanex {

// Entity distances are clamped into the bucket set {0..10}.
inline constexpr int kMaxDistanceBucket = 10;
inline constexpr int kNumDistanceBuckets = kMaxDistanceBucket + 1;

// All spans of width <= max_width + 1 inside a sentence of n tokens,
// in (start, width) lexicographic order.
inline std::vector<Span> enumerate_spans(int n, int max_width) {
  std::vector<Span> spans;
  const int widest = std::min(max_width + 1, n);
  for (int start = 0; start < n; ++start)
    for (int w = 1; w <= widest && start + w <= n; ++w)
      spans.push_back({start, start + w - 1});
  return spans;
}

// Tokens strictly between two spans in surface order; 0 when they touch or
// overlap. Symmetric.
inline int entity_distance(Span a, Span b) {
  if (a.start > b.start) std::swap(a, b);
  const int gap = b.start - a.end - 1;
  return gap > 0 ? gap : 0;
}

inline int bucket_distance(int dist) {
  return dist < kMaxDistanceBucket ? dist : kMaxDistanceBucket;
}

// A span with its training polarity; gold_type is present exactly for
// positive samples.
struct SpanSample {
  Span span;
  bool is_entity = false;
  std::optional<int> gold_type;
};

// An ordered span pair with its training polarity. head/tail types are the
// gold entity types of the endpoints (available for pairs built over gold
// entities; used by the type-feature lookup).
struct RelationCandidate {
  Span head;
  Span tail;
  bool is_relation = false;
  std::optional<int> gold_type;
  std::optional<int> head_type;
  std::optional<int> tail_type;
  int distance_bucket = 0;
};

// Gold entities (positives) plus up to `limit` non-gold spans drawn
// uniformly without replacement from the enumeration (negatives).
inline std::vector<SpanSample> sample_negative_spans(
    const Sentence& sentence, std::span<const Span> enumerated, long limit,
    const LabelVocab& vocab, std::mt19937_64& rng) {
  std::vector<SpanSample> samples;
  std::set<Span> gold;
  for (const auto& e : sentence.entities) {
    samples.push_back({e.span(), true, vocab.entity_id(e.type)});
    gold.insert(e.span());
  }
  std::vector<Span> pool;
  for (const Span& sp : enumerated)
    if (!gold.count(sp)) pool.push_back(sp);
  const auto chosen =
      sample_without_replacement(pool.size(), static_cast<std::size_t>(
                                                  std::max<long>(limit, 0)),
                                 rng);
  for (std::size_t idx : chosen)
    samples.push_back({pool[idx], false, std::nullopt});
  return samples;
}

// Every ordered pair of distinct spans, in index order.
inline std::vector<std::pair<Span, Span>> build_relation_candidates(
    std::span<const Span> entities) {
  std::vector<std::pair<Span, Span>> pairs;
  for (std::size_t i = 0; i < entities.size(); ++i)
    for (std::size_t j = 0; j < entities.size(); ++j)
      if (i != j) pairs.emplace_back(entities[i], entities[j]);
  return pairs;
}

// Gold relations as positives; negatives are ordered gold-entity span pairs
// that hold no gold relation, sampled uniformly without replacement up to
// `limit`. Pairs whose two mentions share an identical span are skipped.
inline std::vector<RelationCandidate> sample_negative_relations(
    const Sentence& sentence, long limit, const LabelVocab& vocab,
    std::mt19937_64& rng) {
  std::vector<RelationCandidate> candidates;
  std::set<std::pair<Span, Span>> gold_pairs;
  for (const auto& r : sentence.relations) {
    const auto& head = sentence.entities[r.head_entity];
    const auto& tail = sentence.entities[r.tail_entity];
    RelationCandidate c;
    c.head = head.span();
    c.tail = tail.span();
    c.is_relation = true;
    c.gold_type = vocab.relation_id(r.type);
    c.head_type = vocab.entity_id(head.type);
    c.tail_type = vocab.entity_id(tail.type);
    c.distance_bucket = bucket_distance(entity_distance(c.head, c.tail));
    candidates.push_back(std::move(c));
    gold_pairs.emplace(head.span(), tail.span());
  }
  // Negative pool keyed by span pair so duplicate mentions cannot inject
  // the same pair twice.
  std::vector<RelationCandidate> pool;
  std::set<std::pair<Span, Span>> seen;
  for (std::size_t i = 0; i < sentence.entities.size(); ++i) {
    for (std::size_t j = 0; j < sentence.entities.size(); ++j) {
      if (i == j) continue;
      const auto& head = sentence.entities[i];
      const auto& tail = sentence.entities[j];
      if (head.span() == tail.span()) continue;
      auto key = std::make_pair(head.span(), tail.span());
      if (gold_pairs.count(key) || seen.count(key)) continue;
      seen.insert(key);
      RelationCandidate c;
      c.head = head.span();
      c.tail = tail.span();
      c.is_relation = false;
      c.head_type = vocab.entity_id(head.type);
      c.tail_type = vocab.entity_id(tail.type);
      c.distance_bucket = bucket_distance(entity_distance(c.head, c.tail));
      pool.push_back(std::move(c));
    }
  }
  const auto chosen =
      sample_without_replacement(pool.size(), static_cast<std::size_t>(
                                                  std::max<long>(limit, 0)),
                                 rng);
  for (std::size_t idx : chosen) candidates.push_back(pool[idx]);
  return candidates;
}

}  // namespace spanex
