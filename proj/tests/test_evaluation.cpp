#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <spanex/evaluation.hpp>
#include <spanex/random.hpp>

#include "helpers/synthetic.hpp"

namespace {

using spanex::EntityMatch;
using spanex::MatchPolicy;
using spanex::PRF;
using spanex::Sentence;

// --- independent matcher ------------------------------------------------------
// Re-derives tp/fp/fn via plain string keys and set intersections, sharing no
// code with the scorer under test.

std::string region_string(const spanex::EntityMention& m,
                          const MatchPolicy& policy) {
  if (policy.entity_match == EntityMatch::kHeadRegionAndType && m.has_head())
    return std::to_string(*m.head_start) + ":" + std::to_string(*m.head_end);
  return std::to_string(m.start) + ":" + std::to_string(m.end);
}

std::set<std::string> entity_keys(const Sentence& s,
                                  const MatchPolicy& policy) {
  std::set<std::string> keys;
  for (const auto& m : s.entities)
    keys.insert(region_string(m, policy) + "#" + m.type);
  return keys;
}

std::set<std::string> relation_keys(const Sentence& s,
                                    const MatchPolicy& policy) {
  std::set<std::string> keys;
  for (const auto& r : s.relations) {
    const auto& head = s.entities[static_cast<std::size_t>(r.head_entity)];
    const auto& tail = s.entities[static_cast<std::size_t>(r.tail_entity)];
    auto endpoint = [&](const spanex::EntityMention& m) {
      std::string key = region_string(m, policy);
      if (policy.relation_requires_entity_type) key += "#" + m.type;
      return key;
    };
    std::string a = endpoint(head), b = endpoint(tail);
    if (policy.symmetric_relations.count(r.type) && b < a) std::swap(a, b);
    keys.insert(a + "|" + b + "|" + r.type);
  }
  return keys;
}

PRF tally_sets(const std::set<std::string>& gold,
               const std::set<std::string>& pred) {
  PRF out;
  for (const auto& k : gold)
    pred.count(k) ? ++out.tp : ++out.fn;
  for (const auto& k : pred)
    if (!gold.count(k)) ++out.fp;
  return out;
}

struct OracleScore {
  PRF entity;
  PRF relation;
};

OracleScore oracle_score(const std::vector<Sentence>& gold,
                         const std::vector<Sentence>& predicted,
                         const MatchPolicy& policy) {
  OracleScore out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Sentence* pred = nullptr;
    for (const auto& p : predicted)
      if (p.id == gold[i].id) pred = &p;
    REQUIRE(pred != nullptr);
    out.entity += tally_sets(entity_keys(gold[i], policy),
                             entity_keys(*pred, policy));
    out.relation += tally_sets(relation_keys(gold[i], policy),
                               relation_keys(*pred, policy));
  }
  return out;
}

Sentence simple(const std::string& id, int n_tokens,
                std::vector<spanex::EntityMention> entities,
                std::vector<spanex::RelationMention> relations = {}) {
  Sentence s;
  s.id = id;
  for (int i = 0; i < n_tokens; ++i) s.tokens.push_back("t" + std::to_string(i));
  s.entities = std::move(entities);
  s.relations = std::move(relations);
  return s;
}

}  // namespace

TEST_CASE("precision, recall, and F1 from raw counts") {
  PRF prf{3, 1, 2};
  CHECK(prf.precision() == Catch::Approx(0.75));
  CHECK(prf.recall() == Catch::Approx(0.6));
  CHECK(prf.f1() == Catch::Approx(2.0 * 0.75 * 0.6 / 1.35));
  CHECK(PRF{}.precision() == 0.0);
  CHECK(PRF{}.recall() == 0.0);
  CHECK(PRF{}.f1() == 0.0);
  // All predictions wrong: defined precision, zero F1.
  CHECK(PRF{0, 4, 3}.f1() == 0.0);
}

TEST_CASE("presets configure matching as documented") {
  const auto conll = MatchPolicy::preset("conll04");
  CHECK(conll.entity_match == EntityMatch::kExact);
  CHECK(conll.relation_requires_entity_type);
  const auto ace = MatchPolicy::preset("ace05");
  CHECK(ace.entity_match == EntityMatch::kHeadRegionAndType);
  CHECK(ace.relation_requires_entity_type);
  const auto sci = MatchPolicy::preset("scierc");
  CHECK(sci.entity_match == EntityMatch::kExact);
  CHECK_FALSE(sci.relation_requires_entity_type);
  CHECK_THROWS_AS(MatchPolicy::preset("conll03"), spanex::ConfigError);
}

TEST_CASE("exact matching needs identical boundaries and type") {
  const auto policy = MatchPolicy::preset("conll04");
  const std::vector<Sentence> gold{
      simple("a", 6, {{1, 2, "A", {}, {}}, {4, 4, "B", {}, {}}})};

  SECTION("perfect prediction") {
    const auto r = spanex::score(gold, gold, policy);
    CHECK(r.entity.tp == 2);
    CHECK(r.entity.fp == 0);
    CHECK(r.entity.fn == 0);
    CHECK(r.entity.f1() == 1.0);
  }
  SECTION("boundary off by one is both a miss and a false alarm") {
    const std::vector<Sentence> pred{
        simple("a", 6, {{1, 3, "A", {}, {}}, {4, 4, "B", {}, {}}})};
    const auto r = spanex::score(gold, pred, policy);
    CHECK(r.entity.tp == 1);
    CHECK(r.entity.fp == 1);
    CHECK(r.entity.fn == 1);
  }
  SECTION("right span, wrong type") {
    const std::vector<Sentence> pred{
        simple("a", 6, {{1, 2, "B", {}, {}}, {4, 4, "B", {}, {}}})};
    const auto r = spanex::score(gold, pred, policy);
    CHECK(r.entity.tp == 1);
    CHECK(r.entity.fp == 1);
    CHECK(r.entity.fn == 1);
    CHECK(r.entity_types.at("A").fn == 1);
    CHECK(r.entity_types.at("B").fp == 1);
    CHECK(r.entity_types.at("B").tp == 1);
  }
}

TEST_CASE("head-region matching accepts differing full spans") {
  const auto policy = MatchPolicy::preset("ace05");
  // Gold span [0,3] with head [2,2]; prediction covers [1,3] with the same
  // head region and type.
  const std::vector<Sentence> gold{simple("a", 5, {{0, 3, "A", 2, 2}})};
  const std::vector<Sentence> pred{simple("a", 5, {{1, 3, "A", 2, 2}})};
  const auto r = spanex::score(gold, pred, policy);
  CHECK(r.entity.tp == 1);
  CHECK(r.entity.fp == 0);
  CHECK(r.entity.fn == 0);
  CHECK(r.head_fallbacks == 0);

  // Same head region but a different type does not match.
  const std::vector<Sentence> retyped{simple("a", 5, {{1, 3, "B", 2, 2}})};
  const auto r2 = spanex::score(gold, retyped, policy);
  CHECK(r2.entity.tp == 0);

  // Under the exact preset the same pair is no match either.
  const auto r3 = spanex::score(gold, pred, MatchPolicy::preset("conll04"));
  CHECK(r3.entity.tp == 0);
}

TEST_CASE("mentions without head annotations fall back and are counted") {
  const auto policy = MatchPolicy::preset("ace05");
  const std::vector<Sentence> gold{simple("a", 5, {{0, 2, "A", {}, {}}})};
  const std::vector<Sentence> pred{simple("a", 5, {{0, 2, "A", {}, {}}})};
  const auto r = spanex::score(gold, pred, policy);
  CHECK(r.entity.tp == 1);  // full regions agree
  CHECK(r.head_fallbacks == 2);  // one headless mention per side
  // No fallbacks under the exact presets.
  CHECK(spanex::score(gold, pred, MatchPolicy::preset("conll04"))
            .head_fallbacks == 0);
}

TEST_CASE("relation matching honours endpoint typing per preset") {
  // Gold: R from A[0,0] to B[2,2]. Prediction retypes the tail entity; the
  // relation keys still agree when endpoint types are ignored.
  const std::vector<Sentence> gold{simple(
      "a", 4, {{0, 0, "A", {}, {}}, {2, 2, "B", {}, {}}}, {{0, 1, "R"}})};
  const std::vector<Sentence> pred{simple(
      "a", 4, {{0, 0, "A", {}, {}}, {2, 2, "C", {}, {}}}, {{0, 1, "R"}})};

  const auto strict = spanex::score(gold, pred, MatchPolicy::preset("conll04"));
  CHECK(strict.relation.tp == 0);
  CHECK(strict.relation.fp == 1);
  CHECK(strict.relation.fn == 1);

  const auto loose = spanex::score(gold, pred, MatchPolicy::preset("scierc"));
  CHECK(loose.relation.tp == 1);
  CHECK(loose.relation.fp == 0);
  CHECK(loose.relation.fn == 0);
  // The entity itself is still scored with its type under scierc.
  CHECK(loose.entity.tp == 1);
  CHECK(loose.entity.fp == 1);
  CHECK(loose.entity.fn == 1);
}

TEST_CASE("symmetric relations match regardless of argument order") {
  const std::vector<Sentence> gold{simple(
      "a", 4, {{0, 0, "A", {}, {}}, {2, 2, "B", {}, {}}}, {{0, 1, "R"}})};
  const std::vector<Sentence> pred{simple(
      "a", 4, {{0, 0, "A", {}, {}}, {2, 2, "B", {}, {}}}, {{1, 0, "R"}})};

  auto policy = MatchPolicy::preset("conll04");
  CHECK(spanex::score(gold, pred, policy).relation.tp == 0);
  policy.symmetric_relations.insert("R");
  const auto r = spanex::score(gold, pred, policy);
  CHECK(r.relation.tp == 1);
  CHECK(r.relation.fp == 0);
  CHECK(r.relation.fn == 0);
  // Both orderings on both sides collapse onto one key.
  const std::vector<Sentence> both{simple(
      "a", 4, {{0, 0, "A", {}, {}}, {2, 2, "B", {}, {}}},
      {{0, 1, "R"}, {1, 0, "R"}})};
  CHECK(spanex::score(both, pred, policy).relation.tp == 1);
}

TEST_CASE("duplicate annotations collapse onto one canonical key") {
  const std::vector<Sentence> gold{
      simple("a", 4, {{0, 1, "A", {}, {}}, {0, 1, "A", {}, {}}})};
  const std::vector<Sentence> pred{simple("a", 4, {{0, 1, "A", {}, {}}})};
  const auto r = spanex::score(gold, pred, MatchPolicy::preset("conll04"));
  CHECK(r.entity.tp == 1);
  CHECK(r.entity.fn == 0);  // the duplicate is not a second miss
  CHECK(r.entity.fp == 0);
}

TEST_CASE("alignment failures are explicit") {
  const std::vector<Sentence> gold{simple("a", 3, {}), simple("b", 3, {})};
  SECTION("missing prediction") {
    const std::vector<Sentence> pred{simple("a", 3, {})};
    CHECK_THROWS_AS(spanex::score(gold, pred, MatchPolicy{}),
                    spanex::AlignmentError);
  }
  SECTION("duplicate prediction id") {
    const std::vector<Sentence> pred{simple("a", 3, {}), simple("a", 3, {}),
                                     simple("b", 3, {})};
    CHECK_THROWS_AS(spanex::score(gold, pred, MatchPolicy{}),
                    spanex::AlignmentError);
  }
  SECTION("unmatched extra prediction") {
    const std::vector<Sentence> pred{simple("a", 3, {}), simple("b", 3, {}),
                                     simple("c", 3, {})};
    CHECK_THROWS_AS(spanex::score(gold, pred, MatchPolicy{}),
                    spanex::AlignmentError);
  }
  SECTION("duplicate gold id") {
    const std::vector<Sentence> dup{simple("a", 3, {}), simple("a", 3, {})};
    const std::vector<Sentence> pred{simple("a", 3, {})};
    CHECK_THROWS_AS(spanex::score(dup, pred, MatchPolicy{}),
                    spanex::AlignmentError);
  }
}

TEST_CASE("scoring agrees with an independent matcher on random corpora") {
  auto rng = spanex::make_rng(987654321);
  const char* presets[] = {"conll04", "ace05", "scierc"};
  for (int trial = 0; trial < 50; ++trial) {
    auto pair = testutil::random_eval_pair(rng, 4);
    auto policy = MatchPolicy::preset(presets[trial % 3]);
    if (trial % 2 == 0) policy.symmetric_relations.insert("S");
    INFO("trial " << trial << " preset " << presets[trial % 3]);
    const auto ours = spanex::score(pair.gold, pair.predicted, policy);
    const auto oracle = oracle_score(pair.gold, pair.predicted, policy);
    CHECK(ours.entity.tp == oracle.entity.tp);
    CHECK(ours.entity.fp == oracle.entity.fp);
    CHECK(ours.entity.fn == oracle.entity.fn);
    CHECK(ours.relation.tp == oracle.relation.tp);
    CHECK(ours.relation.fp == oracle.relation.fp);
    CHECK(ours.relation.fn == oracle.relation.fn);

    // Per-type counters add up to the micro counters.
    PRF entity_sum, relation_sum;
    for (const auto& [_, prf] : ours.entity_types) entity_sum += prf;
    for (const auto& [_, prf] : ours.relation_types) relation_sum += prf;
    CHECK(entity_sum.tp == ours.entity.tp);
    CHECK(entity_sum.fp == ours.entity.fp);
    CHECK(entity_sum.fn == ours.entity.fn);
    CHECK(relation_sum.tp == ours.relation.tp);
    CHECK(relation_sum.fp == ours.relation.fp);
    CHECK(relation_sum.fn == ours.relation.fn);

    // Sentence order is irrelevant.
    auto shuffled_gold = pair.gold;
    auto shuffled_pred = pair.predicted;
    spanex::shuffle_inplace(shuffled_gold, rng);
    spanex::shuffle_inplace(shuffled_pred, rng);
    const auto reshuffled = spanex::score(shuffled_gold, shuffled_pred, policy);
    CHECK(reshuffled.entity.tp == ours.entity.tp);
    CHECK(reshuffled.relation.fn == ours.relation.fn);
  }
}

TEST_CASE("macro F1 averages the per-type scores") {
  spanex::ScoreReport report;
  report.entity_types["A"] = PRF{1, 0, 0};  // F1 = 1
  report.entity_types["B"] = PRF{0, 1, 1};  // F1 = 0
  CHECK(report.entity_macro_f1() == Catch::Approx(0.5));
  CHECK(spanex::ScoreReport{}.relation_macro_f1() == 0.0);
}

TEST_CASE("entity length buckets cover 1-10 with overflow on demand") {
  const auto policy = MatchPolicy::preset("conll04");
  // Gold widths 1, 2, 3, 10; predictions hit the first two only.
  const std::vector<Sentence> gold{simple("a", 12,
                                          {{0, 0, "A", {}, {}},
                                           {2, 3, "A", {}, {}},
                                           {5, 7, "B", {}, {}},
                                           {1, 10, "C", {}, {}}})};
  const std::vector<Sentence> pred{simple("a", 12,
                                          {{0, 0, "A", {}, {}},
                                           {2, 3, "A", {}, {}},
                                           {5, 6, "B", {}, {}}})};
  const auto buckets = spanex::entity_scores_by_length(gold, pred, policy);
  REQUIRE(buckets.size() == 5);  // no width beyond 10 anywhere
  CHECK(buckets[0].label == "1-2");
  CHECK(buckets[0].counts.tp == 2);
  CHECK(buckets[0].counts.fp == 1);  // predicted [5,6] has width 2
  CHECK(buckets[1].label == "3-4");
  CHECK(buckets[1].counts.fn == 1);
  CHECK(buckets[4].label == "9-10");
  CHECK(buckets[4].counts.fn == 1);  // width 10 missed

  // A width-11 mention brings the overflow bucket into existence.
  const std::vector<Sentence> wide{simple("b", 12, {{0, 10, "A", {}, {}}})};
  const std::vector<Sentence> wide_pred{simple("b", 12, {})};
  const auto with_overflow =
      spanex::entity_scores_by_length(wide, wide_pred, policy);
  REQUIRE(with_overflow.size() == 6);
  CHECK(with_overflow.back().label == ">10");
  CHECK(with_overflow.back().counts.fn == 1);
}

TEST_CASE("relation distance buckets split at 0, 1-3, 4-6, 7-9, >=10") {
  const auto policy = MatchPolicy::preset("conll04");
  auto with_gap = [&](const std::string& id, int gap) {
    // Head [0,0], tail starting at gap+1: exactly `gap` tokens between.
    return simple(id, gap + 3,
                  {{0, 0, "A", {}, {}},
                   {gap + 1, gap + 1, "B", {}, {}}},
                  {{0, 1, "R"}});
  };
  std::vector<Sentence> gold, pred;
  for (const auto& [id, gap] : std::vector<std::pair<std::string, int>>{
           {"g0", 0}, {"g1", 1}, {"g3", 3}, {"g4", 4}, {"g9", 9}, {"g10", 10},
           {"g25", 25}}) {
    gold.push_back(with_gap(id, gap));
    pred.push_back(with_gap(id, gap));
  }
  pred[0].relations.clear();  // one miss in the distance-0 bucket

  const auto buckets =
      spanex::relation_scores_by_distance(gold, pred, policy);
  REQUIRE(buckets.size() == 5);
  CHECK(buckets[0].label == "0");
  CHECK(buckets[0].counts.fn == 1);
  CHECK(buckets[0].counts.tp == 0);
  CHECK(buckets[1].label == "1-3");
  CHECK(buckets[1].counts.tp == 2);
  CHECK(buckets[2].label == "4-6");
  CHECK(buckets[2].counts.tp == 1);
  CHECK(buckets[3].label == "7-9");
  CHECK(buckets[3].counts.tp == 1);
  CHECK(buckets[4].label == ">=10");
  CHECK(buckets[4].counts.tp == 2);
}

TEST_CASE("bucketed counts add up to the corpus-level counts") {
  auto rng = spanex::make_rng(5555);
  const auto pair = testutil::random_eval_pair(rng, 8);
  const auto policy = MatchPolicy::preset("conll04");
  const auto report = spanex::score(pair.gold, pair.predicted, policy);

  PRF entity_total;
  for (const auto& b :
       spanex::entity_scores_by_length(pair.gold, pair.predicted, policy))
    entity_total += b.counts;
  CHECK(entity_total.tp == report.entity.tp);
  CHECK(entity_total.fp == report.entity.fp);
  CHECK(entity_total.fn == report.entity.fn);

  PRF relation_total;
  for (const auto& b : spanex::relation_scores_by_distance(
           pair.gold, pair.predicted, policy))
    relation_total += b.counts;
  CHECK(relation_total.tp == report.relation.tp);
  CHECK(relation_total.fp == report.relation.fp);
  CHECK(relation_total.fn == report.relation.fn);
}

TEST_CASE("audit ratios reproduce the documented corpus profile") {
  // Counts of a benchmark split: four (five) positive types plus the pooled
  // negatives a training epoch samples.
  spanex::AuditCounts counts;
  counts.entity_types = {
      {"Loc", 1541}, {"Org", 786}, {"Other", 592}, {"Peop", 1370}};
  counts.not_entity = 101555;
  counts.relation_types = {{"Kill", 229},
                           {"LocatedIn", 312},
                           {"WorkFor", 325},
                           {"OrgBasedIn", 317},
                           {"LiveIn", 421}};
  counts.not_relation = 12915;

  const auto baseline = spanex::audit_distributions(counts, "baseline");
  REQUIRE(baseline.lines.size() == 2);
  CHECK(baseline.lines[0].task == "entity");
  CHECK(baseline.lines[0].ratio == Catch::Approx(171.5));
  CHECK(baseline.lines[0].display == "1: 171.5");
  CHECK(baseline.lines[1].task == "relation");
  CHECK(baseline.lines[1].ratio == Catch::Approx(56.4));

  const auto phase_one = spanex::audit_distributions(counts, "phase_one");
  CHECK(phase_one.lines[0].ratio == Catch::Approx(23.7));
  CHECK(phase_one.lines[1].ratio == Catch::Approx(8.1));

  const auto phase_two = spanex::audit_distributions(counts, "phase_two");
  CHECK(phase_two.lines[0].ratio == Catch::Approx(2.6));
  CHECK(phase_two.lines[1].ratio == Catch::Approx(1.8));

  // The point of the two-phase split: each stage is better balanced than
  // the flat baseline.
  CHECK(phase_one.lines[0].ratio < baseline.lines[0].ratio);
  CHECK(phase_two.lines[0].ratio < baseline.lines[0].ratio);
  CHECK(phase_one.lines[1].ratio < baseline.lines[1].ratio);
  CHECK(phase_two.lines[1].ratio < baseline.lines[1].ratio);
}

TEST_CASE("audit ratio display rounds to one decimal") {
  spanex::AuditCounts counts;
  counts.entity_types = {{"A", 3}, {"B", 7}};
  counts.relation_types = {{"R", 4}, {"S", 5}};
  counts.not_entity = 10;
  counts.not_relation = 9;
  const auto report = spanex::audit_distributions(counts, "phase_two");
  // 7 / 3 = 2.333... -> "1: 2.3"
  CHECK(report.lines[0].display == "1: 2.3");
  CHECK(report.lines[0].ratio == Catch::Approx(2.3));
  // 5 / 4 = 1.25 -> 1.2 or 1.3 depending on the rounding rule; pin round().
  CHECK(report.lines[1].display == "1: 1.3");
}

TEST_CASE("audit failure modes") {
  spanex::AuditCounts counts;
  counts.entity_types = {{"A", 5}, {"B", 2}};
  counts.relation_types = {{"R", 1}, {"S", 1}};

  SECTION("unknown mode") {
    CHECK_THROWS_AS(spanex::audit_distributions(counts, "phase_three"),
                    spanex::ConfigError);
  }
  SECTION("phase_one needs sampled negatives") {
    counts.not_entity = 0;
    counts.not_relation = 3;
    CHECK_THROWS_AS(spanex::audit_distributions(counts, "phase_one"),
                    spanex::ValidationError);
  }
  SECTION("phase_one needs positives") {
    counts.entity_types = {{"A", 0}};
    counts.not_entity = 10;
    counts.not_relation = 10;
    CHECK_THROWS_AS(spanex::audit_distributions(counts, "phase_one"),
                    spanex::ValidationError);
  }
  SECTION("phase_two needs two nonzero positive classes") {
    counts.entity_types = {{"A", 5}, {"B", 0}};
    counts.not_entity = 10;
    counts.not_relation = 10;
    CHECK_THROWS_AS(spanex::audit_distributions(counts, "phase_two"),
                    spanex::ValidationError);
  }
  SECTION("baseline needs a nonzero positive class") {
    counts.entity_types = {{"A", 0}};
    counts.not_entity = 10;
    counts.not_relation = 10;
    CHECK_THROWS_AS(spanex::audit_distributions(counts, "baseline"),
                    spanex::ValidationError);
  }
}

TEST_CASE("distance-type statistics report row percentages") {
  // Four relations of one type signature at distances 2, 5, 1, 20:
  // intervals 0-3, 4-7, 8-11, >11 hold 2, 1, 0, 1.
  std::vector<Sentence> corpus;
  for (const auto& [id, gap] : std::vector<std::pair<std::string, int>>{
           {"d2", 2}, {"d5", 5}, {"d1", 1}, {"d20", 20}}) {
    corpus.push_back(simple(id, gap + 3,
                            {{0, 0, "Loc", {}, {}},
                             {gap + 1, gap + 1, "Loc", {}, {}}},
                            {{0, 1, "LocIn"}}));
  }
  const auto rows = spanex::distance_type_stats(corpus);
  REQUIRE(rows.size() == 1);
  const auto& row = rows[0];
  CHECK(row.head_type == "Loc");
  CHECK(row.tail_type == "Loc");
  CHECK(row.relation_type == "LocIn");
  CHECK(row.total == 4);
  CHECK(row.intervals == std::array<long, 4>{2, 1, 0, 1});
  CHECK(row.percentage(0) == Catch::Approx(50.0));
  CHECK(row.percentage(1) == Catch::Approx(25.0));
  CHECK(row.percentage(2) == Catch::Approx(0.0));
  CHECK(row.percentage(3) == Catch::Approx(25.0));

  // A single relation puts all of its row's mass in one interval.
  const std::vector<Sentence> lone{corpus[1]};
  const auto single = spanex::distance_type_stats(lone);
  REQUIRE(single.size() == 1);
  CHECK(single[0].percentage(1) == Catch::Approx(100.0));

  // Interval boundaries: distances 3 and 4 split between the first bands.
  const std::vector<Sentence> edges{
      simple("e3", 6, {{0, 0, "A", {}, {}}, {4, 4, "B", {}, {}}},
             {{0, 1, "R"}}),
      simple("e4", 7, {{0, 0, "A", {}, {}}, {5, 5, "B", {}, {}}},
             {{0, 1, "R"}})};
  const auto split = spanex::distance_type_stats(edges);
  REQUIRE(split.size() == 1);
  CHECK(split[0].intervals == std::array<long, 4>{1, 1, 0, 0});
}

TEST_CASE("distance-type rows sum to one hundred percent") {
  auto rng = spanex::make_rng(31337);
  const auto pair = testutil::random_eval_pair(rng, 12);
  for (const auto& row : spanex::distance_type_stats(pair.gold)) {
    double sum = 0;
    for (std::size_t i = 0; i < 4; ++i) sum += row.percentage(i);
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(100.0, 0.2));
    long count = 0;
    for (long c : row.intervals) count += c;
    CHECK(count == row.total);
  }
}

TEST_CASE("report emitters carry the key figures") {
  spanex::ScoreReport report;
  report.entity = PRF{3, 1, 2};
  report.relation = PRF{1, 1, 1};
  report.entity_types["A"] = PRF{3, 1, 2};
  report.relation_types["R"] = PRF{1, 1, 1};
  report.head_fallbacks = 2;

  const std::string text = spanex::format_score_report(report, true);
  CHECK(text.find("entities (micro)") != std::string::npos);
  CHECK(text.find("relations (micro)") != std::string::npos);
  CHECK(text.find("75.00") != std::string::npos);  // entity precision
  CHECK(text.find("macro") != std::string::npos);
  CHECK(text.find("warning: 2 mention(s)") != std::string::npos);

  const auto j = spanex::score_report_to_json(report);
  CHECK(j["entity"]["tp"] == 3);
  CHECK(j["entity"]["precision"] == Catch::Approx(0.75));
  CHECK(j["relation"]["f1"] == Catch::Approx(0.5));
  CHECK(j["entity_types"]["A"]["fn"] == 2);
  CHECK(j["head_fallbacks"] == 2);

  spanex::AuditCounts counts;
  counts.entity_types = {{"A", 4}, {"B", 2}};
  counts.relation_types = {{"R", 2}, {"S", 1}};
  counts.not_entity = 12;
  counts.not_relation = 6;
  const auto audit = spanex::audit_distributions(counts, "baseline");
  const std::string audit_text = spanex::format_audit_report(audit);
  CHECK(audit_text.find("mode: baseline") != std::string::npos);
  CHECK(audit_text.find("entity imbalance 1: 6.0") != std::string::npos);
  const auto aj = spanex::audit_report_to_json(audit);
  CHECK(aj["ratios"]["entity"]["display"] == "1: 6.0");
  CHECK(aj["counts"]["not_entity"] == 12);

  const std::string table = spanex::markdown_audit_table({audit});
  CHECK(table.find("| mode | entity | relation |") != std::string::npos);
  CHECK(table.find("| baseline | 1: 6.0 | 1: 6.0 |") != std::string::npos);

  const std::vector<spanex::BucketScore> buckets{{"1-2", PRF{1, 0, 1}}};
  const std::string bucket_table =
      spanex::markdown_bucket_table("length", buckets);
  CHECK(bucket_table.find("| length | P | R | F1 |") != std::string::npos);
  CHECK(bucket_table.find("| 1-2 |") != std::string::npos);
}
