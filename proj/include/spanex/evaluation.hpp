#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanex/candidates.hpp"
#include "spanex/error.hpp"
#include "spanex/types.hpp"

namespace spanex {

// --- matching policy -------------------------------------------------------

enum class EntityMatch { kExact, kHeadRegionAndType };

struct MatchPolicy {
  EntityMatch entity_match = EntityMatch::kExact;
  // Whether relation endpoints must also agree on entity type.
  bool relation_requires_entity_type = true;
  // Relation types scored without regard to argument order.
  std::set<std::string> symmetric_relations;

  static MatchPolicy preset(const std::string& name) {
    MatchPolicy p;
    if (name == "conll04") {
      // defaults
    } else if (name == "ace05") {
      p.entity_match = EntityMatch::kHeadRegionAndType;
    } else if (name == "scierc") {
      p.relation_requires_entity_type = false;
    } else {
      throw ConfigError("unknown evaluation preset '" + name + "'");
    }
    return p;
  }
};

// --- counters ---------------------------------------------------------------

struct PRF {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / (tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  PRF& operator+=(const PRF& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// --- canonical keys ----------------------------------------------------------

namespace detail {

struct MentionKey {
  int start = 0;
  int end = 0;
  std::string type;  // empty for untyped relation endpoints
  auto operator<=>(const MentionKey&) const = default;
};

struct RelationKey {
  MentionKey head;
  MentionKey tail;
  std::string type;
  auto operator<=>(const RelationKey&) const = default;
};

// The span a mention is identified by under the policy. Mentions without
// head annotations fall back to their full region; the caller counts those.
inline Span match_region(const EntityMention& m, const MatchPolicy& policy,
                         long* fallbacks) {
  if (policy.entity_match == EntityMatch::kHeadRegionAndType) {
    if (m.has_head()) return Span{*m.head_start, *m.head_end};
    if (fallbacks) ++(*fallbacks);
  }
  return m.span();
}

inline MentionKey entity_key(const EntityMention& m, const MatchPolicy& policy,
                             long* fallbacks) {
  const Span region = match_region(m, policy, fallbacks);
  return MentionKey{region.start, region.end, m.type};
}

inline MentionKey endpoint_key(const EntityMention& m,
                               const MatchPolicy& policy, long* fallbacks) {
  const Span region = match_region(m, policy, fallbacks);
  return MentionKey{region.start, region.end,
                    policy.relation_requires_entity_type ? m.type
                                                         : std::string{}};
}

struct EntityInfo {
  std::string type;
  int width = 0;
};
struct RelationInfo {
  std::string type;
  int distance = 0;
};

struct KeyedSentence {
  std::map<MentionKey, EntityInfo> entities;
  std::map<RelationKey, RelationInfo> relations;
};

// Canonical, de-duplicated view of one sentence's annotations.
inline KeyedSentence collect_keys(const Sentence& s, const MatchPolicy& policy,
                                  long* fallbacks) {
  KeyedSentence out;
  for (const auto& m : s.entities) {
    out.entities.emplace(entity_key(m, policy, fallbacks),
                         EntityInfo{m.type, m.span().width()});
  }
  for (const auto& r : s.relations) {
    if (r.head_entity < 0 ||
        r.head_entity >= static_cast<int>(s.entities.size()) ||
        r.tail_entity < 0 ||
        r.tail_entity >= static_cast<int>(s.entities.size()))
      throw ValidationError("sentence '" + s.id +
                            "': relation references a missing entity");
    const EntityMention& head = s.entities[r.head_entity];
    const EntityMention& tail = s.entities[r.tail_entity];
    RelationKey key{endpoint_key(head, policy, fallbacks),
                    endpoint_key(tail, policy, fallbacks), r.type};
    if (policy.symmetric_relations.count(r.type) && key.tail < key.head)
      std::swap(key.head, key.tail);
    out.relations.emplace(
        key, RelationInfo{r.type, entity_distance(head.span(), tail.span())});
  }
  return out;
}

// tp/fp/fn between two keyed maps, attributing each instance via `assign`.
template <typename Key, typename Info, typename Assign>
void tally(const std::map<Key, Info>& gold, const std::map<Key, Info>& pred,
           Assign&& assign) {
  for (const auto& [key, info] : gold) {
    auto it = pred.find(key);
    if (it != pred.end())
      assign(info, 0);  // tp, attributed to the gold instance
    else
      assign(info, 2);  // fn
  }
  for (const auto& [key, info] : pred)
    if (!gold.count(key)) assign(info, 1);  // fp
}

}  // namespace detail

// --- corpus-level scoring -----------------------------------------------------

struct ScoreReport {
  PRF entity;    // micro
  PRF relation;  // micro
  std::map<std::string, PRF> entity_types;
  std::map<std::string, PRF> relation_types;
  long head_fallbacks = 0;  // mentions scored by full region for lack of a head

  static double macro_f1(const std::map<std::string, PRF>& per_type) {
    if (per_type.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [_, prf] : per_type) sum += prf.f1();
    return sum / static_cast<double>(per_type.size());
  }
  double entity_macro_f1() const { return macro_f1(entity_types); }
  double relation_macro_f1() const { return macro_f1(relation_types); }
};

// Pairs gold and predicted sentences by id; both corpora must cover exactly
// the same ids, each once.
inline std::vector<std::pair<const Sentence*, const Sentence*>> align_by_id(
    const std::vector<Sentence>& gold, const std::vector<Sentence>& predicted) {
  std::map<std::string, const Sentence*> by_id;
  for (const auto& p : predicted)
    if (!by_id.emplace(p.id, &p).second)
      throw AlignmentError("duplicate predicted sentence id '" + p.id + "'");
  std::vector<std::pair<const Sentence*, const Sentence*>> pairs;
  std::set<std::string> used;
  for (const auto& g : gold) {
    if (!used.insert(g.id).second)
      throw AlignmentError("duplicate gold sentence id '" + g.id + "'");
    auto it = by_id.find(g.id);
    if (it == by_id.end())
      throw AlignmentError("no prediction for sentence id '" + g.id + "'");
    pairs.emplace_back(&g, it->second);
  }
  if (used.size() != by_id.size())
    throw AlignmentError("predictions cover " + std::to_string(by_id.size()) +
                         " sentences, gold has " + std::to_string(used.size()));
  return pairs;
}

inline ScoreReport score(const std::vector<Sentence>& gold,
                         const std::vector<Sentence>& predicted,
                         const MatchPolicy& policy) {
  ScoreReport report;
  for (const auto& [g, p] : align_by_id(gold, predicted)) {
    const auto gk = detail::collect_keys(*g, policy, &report.head_fallbacks);
    const auto pk = detail::collect_keys(*p, policy, &report.head_fallbacks);
    detail::tally(gk.entities, pk.entities,
                  [&](const detail::EntityInfo& info, int kind) {
                    PRF& by_type = report.entity_types[info.type];
                    if (kind == 0) ++report.entity.tp, ++by_type.tp;
                    if (kind == 1) ++report.entity.fp, ++by_type.fp;
                    if (kind == 2) ++report.entity.fn, ++by_type.fn;
                  });
    detail::tally(gk.relations, pk.relations,
                  [&](const detail::RelationInfo& info, int kind) {
                    PRF& by_type = report.relation_types[info.type];
                    if (kind == 0) ++report.relation.tp, ++by_type.tp;
                    if (kind == 1) ++report.relation.fp, ++by_type.fp;
                    if (kind == 2) ++report.relation.fn, ++by_type.fn;
                  });
  }
  return report;
}

// --- bucketed scoring ----------------------------------------------------------

struct BucketScore {
  std::string label;
  PRF counts;
};

// Entity mentions bucketed by width: five two-token bands plus an overflow
// band that appears only when some mention exceeds the last one.
inline std::vector<BucketScore> entity_scores_by_length(
    const std::vector<Sentence>& gold, const std::vector<Sentence>& predicted,
    const MatchPolicy& policy) {
  std::vector<BucketScore> buckets;
  for (int b = 0; b < 5; ++b)
    buckets.push_back(
        {std::to_string(2 * b + 1) + "-" + std::to_string(2 * b + 2), {}});
  buckets.push_back({">10", {}});
  auto bucket_of = [](int width) { return width > 10 ? 5 : (width - 1) / 2; };
  long fallbacks = 0;
  for (const auto& [g, p] : align_by_id(gold, predicted)) {
    const auto gk = detail::collect_keys(*g, policy, &fallbacks);
    const auto pk = detail::collect_keys(*p, policy, &fallbacks);
    detail::tally(gk.entities, pk.entities,
                  [&](const detail::EntityInfo& info, int kind) {
                    PRF& prf = buckets[bucket_of(info.width)].counts;
                    if (kind == 0) ++prf.tp;
                    if (kind == 1) ++prf.fp;
                    if (kind == 2) ++prf.fn;
                  });
  }
  const PRF& overflow = buckets.back().counts;
  if (overflow.tp + overflow.fp + overflow.fn == 0) buckets.pop_back();
  return buckets;
}

// Relations bucketed by the token distance between their argument spans.
inline std::vector<BucketScore> relation_scores_by_distance(
    const std::vector<Sentence>& gold, const std::vector<Sentence>& predicted,
    const MatchPolicy& policy) {
  std::vector<BucketScore> buckets = {
      {"0", {}}, {"1-3", {}}, {"4-6", {}}, {"7-9", {}}, {">=10", {}}};
  auto bucket_of = [](int dist) {
    if (dist == 0) return 0;
    if (dist >= 10) return 4;
    return 1 + (dist - 1) / 3;
  };
  long fallbacks = 0;
  for (const auto& [g, p] : align_by_id(gold, predicted)) {
    const auto gk = detail::collect_keys(*g, policy, &fallbacks);
    const auto pk = detail::collect_keys(*p, policy, &fallbacks);
    detail::tally(gk.relations, pk.relations,
                  [&](const detail::RelationInfo& info, int kind) {
                    PRF& prf = buckets[bucket_of(info.distance)].counts;
                    if (kind == 0) ++prf.tp;
                    if (kind == 1) ++prf.fp;
                    if (kind == 2) ++prf.fn;
                  });
  }
  return buckets;
}

// --- class-distribution audit ----------------------------------------------------

// Class counts for one task family: positives per type plus the pooled
// negative class. Counts come from training-mode sampling (see training.hpp)
// or are supplied directly.
struct AuditCounts {
  std::map<std::string, long> entity_types;
  long not_entity = 0;
  std::map<std::string, long> relation_types;
  long not_relation = 0;
};

struct AuditLine {
  std::string task;  // "entity" | "relation"
  double ratio = 0.0;
  std::string display;  // "1: <ratio to one decimal>"
};

struct AuditReport {
  std::string mode;
  AuditCounts counts;
  std::vector<AuditLine> lines;
};

namespace detail {

inline AuditLine make_ratio(const std::string& task, double numerator,
                            double denominator) {
  const double ratio = std::round(numerator / denominator * 10.0) / 10.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "1: %.1f", ratio);
  return AuditLine{task, ratio, buf};
}

// One task's imbalance under one training regime. `positives` are the
// per-type gold counts, `negative` the pooled null-class count.
inline AuditLine ratio_line(const std::string& task, const std::string& mode,
                            const std::vector<long>& positives,
                            long negative) {
  std::vector<long> nonzero;
  for (long c : positives)
    if (c > 0) nonzero.push_back(c);
  long nonzero_classes = static_cast<long>(nonzero.size()) +
                         (negative > 0 ? 1 : 0);
  if (mode == "baseline") {
    // Rarest positive type against the largest class of a flat classifier.
    if (nonzero.empty() || nonzero_classes < 2)
      throw ValidationError("audit(baseline): fewer than two nonzero " + task +
                            " classes");
    const long smallest = *std::min_element(nonzero.begin(), nonzero.end());
    const long largest = std::max(
        *std::max_element(nonzero.begin(), nonzero.end()), negative);
    return make_ratio(task, static_cast<double>(largest), smallest);
  }
  if (mode == "phase_one") {
    // All positives pooled against the binary negative class.
    long positive_sum = 0;
    for (long c : positives) positive_sum += c;
    if (positive_sum <= 0 || negative <= 0)
      throw ValidationError("audit(phase_one): " + task +
                            " counts leave the ratio undefined");
    return make_ratio(task, static_cast<double>(negative), positive_sum);
  }
  if (mode == "phase_two") {
    // Positive types against each other; the negative class is gone.
    if (nonzero.size() < 2)
      throw ValidationError("audit(phase_two): fewer than two nonzero " +
                            task + " classes");
    const auto [mn, mx] = std::minmax_element(nonzero.begin(), nonzero.end());
    return make_ratio(task, static_cast<double>(*mx), *mn);
  }
  throw ConfigError("unknown audit mode '" + mode + "'");
}

inline std::vector<long> values_of(const std::map<std::string, long>& m) {
  std::vector<long> v;
  for (const auto& [_, c] : m) v.push_back(c);
  return v;
}

}  // namespace detail

// Class-imbalance ratios of one classification stage, for both tasks.
// 'baseline' describes a flat classifier over types plus the null class;
// 'phase_one' the binary filtering stage; 'phase_two' typing among
// positives only.
inline AuditReport audit_distributions(const AuditCounts& counts,
                                       const std::string& mode) {
  if (mode != "baseline" && mode != "phase_one" && mode != "phase_two")
    throw ConfigError("unknown audit mode '" + mode + "'");
  AuditReport report;
  report.mode = mode;
  report.counts = counts;
  report.lines.push_back(detail::ratio_line(
      "entity", mode, detail::values_of(counts.entity_types),
      counts.not_entity));
  report.lines.push_back(detail::ratio_line(
      "relation", mode, detail::values_of(counts.relation_types),
      counts.not_relation));
  return report;
}

// --- distance/type statistics ------------------------------------------------------

inline constexpr std::array<const char*, 4> kDistanceIntervalLabels = {
    "0-3", "4-7", "8-11", ">11"};

struct DistanceTypeRow {
  std::string head_type;
  std::string tail_type;
  std::string relation_type;
  std::array<long, 4> intervals{};
  long total = 0;

  // Share of this row's relations falling in interval i; rows sum to 100
  // within rounding.
  double percentage(std::size_t i) const {
    return total == 0 ? 0.0 : 100.0 * intervals[i] / total;
  }
};

// Gold relations grouped by (head type, tail type, relation type), counted
// over coarse distance intervals.
inline std::vector<DistanceTypeRow> distance_type_stats(
    const std::vector<Sentence>& corpus) {
  auto interval_of = [](int dist) {
    if (dist <= 3) return 0;
    if (dist <= 7) return 1;
    if (dist <= 11) return 2;
    return 3;
  };
  std::map<std::tuple<std::string, std::string, std::string>, DistanceTypeRow>
      rows;
  for (const auto& s : corpus) {
    for (const auto& r : s.relations) {
      const EntityMention& head = s.entities[r.head_entity];
      const EntityMention& tail = s.entities[r.tail_entity];
      auto key = std::make_tuple(head.type, tail.type, r.type);
      auto [it, inserted] = rows.try_emplace(key);
      if (inserted) {
        it->second.head_type = head.type;
        it->second.tail_type = tail.type;
        it->second.relation_type = r.type;
      }
      ++it->second
            .intervals[interval_of(entity_distance(head.span(), tail.span()))];
      ++it->second.total;
    }
  }
  std::vector<DistanceTypeRow> out;
  out.reserve(rows.size());
  for (auto& [_, row] : rows) out.push_back(std::move(row));
  return out;
}

// --- report emitters -----------------------------------------------------------------

namespace detail {
inline nlohmann::json prf_json(const PRF& prf) {
  return {{"tp", prf.tp},         {"fp", prf.fp},
          {"fn", prf.fn},         {"precision", prf.precision()},
          {"recall", prf.recall()}, {"f1", prf.f1()}};
}
}  // namespace detail

inline nlohmann::json score_report_to_json(const ScoreReport& report) {
  nlohmann::json j;
  j["entity"] = detail::prf_json(report.entity);
  j["relation"] = detail::prf_json(report.relation);
  j["entity_macro_f1"] = report.entity_macro_f1();
  j["relation_macro_f1"] = report.relation_macro_f1();
  for (const auto& [type, prf] : report.entity_types)
    j["entity_types"][type] = detail::prf_json(prf);
  for (const auto& [type, prf] : report.relation_types)
    j["relation_types"][type] = detail::prf_json(prf);
  j["head_fallbacks"] = report.head_fallbacks;
  return j;
}

inline std::string format_prf_line(const std::string& label, const PRF& prf) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%-24s P %6.2f  R %6.2f  F1 %6.2f  (tp %ld fp %ld fn %ld)",
                label.c_str(), 100.0 * prf.precision(), 100.0 * prf.recall(),
                100.0 * prf.f1(), prf.tp, prf.fp, prf.fn);
  return buf;
}

inline std::string format_score_report(const ScoreReport& report, bool macro) {
  std::string out;
  out += format_prf_line("entities (micro)", report.entity) + "\n";
  for (const auto& [type, prf] : report.entity_types)
    out += format_prf_line("  " + type, prf) + "\n";
  out += format_prf_line("relations (micro)", report.relation) + "\n";
  for (const auto& [type, prf] : report.relation_types)
    out += format_prf_line("  " + type, prf) + "\n";
  if (macro) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "macro: entity F1 %6.2f  relation F1 %6.2f\n",
                  100.0 * report.entity_macro_f1(),
                  100.0 * report.relation_macro_f1());
    out += buf;
  }
  if (report.head_fallbacks > 0)
    out += "warning: " + std::to_string(report.head_fallbacks) +
           " mention(s) lacked head annotations; matched by full region\n";
  return out;
}

inline std::string markdown_bucket_table(const std::string& axis,
                                         const std::vector<BucketScore>& rows) {
  std::string out = "| " + axis + " | P | R | F1 | tp | fp | fn |\n";
  out += "| --- | --- | --- | --- | --- | --- | --- |\n";
  for (const auto& row : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "| %s | %.2f | %.2f | %.2f | %ld | %ld | %ld |\n",
                  row.label.c_str(), 100.0 * row.counts.precision(),
                  100.0 * row.counts.recall(), 100.0 * row.counts.f1(),
                  row.counts.tp, row.counts.fp, row.counts.fn);
    out += buf;
  }
  return out;
}

inline nlohmann::json audit_report_to_json(const AuditReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["counts"]["entity_types"] = report.counts.entity_types;
  j["counts"]["not_entity"] = report.counts.not_entity;
  j["counts"]["relation_types"] = report.counts.relation_types;
  j["counts"]["not_relation"] = report.counts.not_relation;
  for (const auto& line : report.lines)
    j["ratios"][line.task] = {{"ratio", line.ratio},
                              {"display", line.display}};
  return j;
}

inline std::string format_audit_counts(const AuditCounts& counts) {
  std::string out;
  for (const auto& [type, c] : counts.entity_types)
    out += "  " + type + ": " + std::to_string(c) + "\n";
  out += "  " + std::string(kNotEntityLabel) + ": " +
         std::to_string(counts.not_entity) + "\n";
  for (const auto& [type, c] : counts.relation_types)
    out += "  " + type + ": " + std::to_string(c) + "\n";
  out += "  " + std::string(kNotRelationLabel) + ": " +
         std::to_string(counts.not_relation) + "\n";
  return out;
}

inline std::string format_audit_report(const AuditReport& report) {
  std::string out = "mode: " + report.mode + "\n";
  out += format_audit_counts(report.counts);
  for (const auto& line : report.lines)
    out += line.task + " imbalance " + line.display + "\n";
  return out;
}

// One row per audit mode, one ratio column per task.
inline std::string markdown_audit_table(
    const std::vector<AuditReport>& reports) {
  std::string out = "| mode | entity | relation |\n| --- | --- | --- |\n";
  for (const auto& report : reports) {
    std::string entity = "n/a", relation = "n/a";
    for (const auto& line : report.lines) {
      if (line.task == "entity") entity = line.display;
      if (line.task == "relation") relation = line.display;
    }
    out += "| " + report.mode + " | " + entity + " | " + relation + " |\n";
  }
  return out;
}

inline std::string markdown_distance_type_table(
    const std::vector<DistanceTypeRow>& rows) {
  std::string out = "| head | tail | relation |";
  for (const char* label : kDistanceIntervalLabels)
    out += std::string(" ") + label + " |";
  out += " total |\n|";
  for (int i = 0; i < 8; ++i) out += " --- |";
  out += "\n";
  for (const auto& row : rows) {
    out += "| " + row.head_type + " | " + row.tail_type + " | " +
           row.relation_type + " |";
    for (std::size_t i = 0; i < row.intervals.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.1f%% |", row.percentage(i));
      out += buf;
    }
    out += " " + std::to_string(row.total) + " |\n";
  }
  return out;
}

inline nlohmann::json distance_type_stats_to_json(
    const std::vector<DistanceTypeRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["head_type"] = row.head_type;
    j["tail_type"] = row.tail_type;
    j["relation_type"] = row.relation_type;
    for (std::size_t i = 0; i < row.intervals.size(); ++i) {
      j["intervals"][kDistanceIntervalLabels[i]] = row.intervals[i];
      j["percentages"][kDistanceIntervalLabels[i]] = row.percentage(i);
    }
    j["total"] = row.total;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace spanex
