#pragma once

// Deterministic synthetic data shared by the unit and acceptance tests:
// a small fully-learnable corpus, plus randomized gold/prediction pairs for
// exercising the scorer against an independent matcher.

#include <cstdint>
#include <string>
#include <vector>

#include <spanex/random.hpp>
#include <spanex/types.hpp>

namespace testutil {

// Three entity types, two relation types, five- or six-token sentences with
// token identities that make every decision learnable from lookups alone.
inline std::vector<spanex::Sentence> overfit_corpus() {
  const std::vector<std::string> names = {"alice", "bob", "carol", "dave"};
  const std::vector<std::string> places = {"paris", "lima", "", "cairo"};
  const std::vector<std::string> orgs = {"acme", "globex", "umbrella",
                                         "initech"};
  std::vector<spanex::Sentence> corpus;
  for (int i = 0; i < 20; ++i) {
    spanex::Sentence s;
    s.id = "s" + std::to_string(i);
    const std::string& name = names[(i / 2) % 4];
    if (i % 2 == 0) {
      const std::string& place = places[(i / 2) % 4];
      if (place.empty()) {
        // A two-token mention to exercise span widths.
        s.tokens = {name, "lives", "in", "new", "york"};
        s.entities = {{0, 0, "Per", {}, {}}, {3, 4, "Loc", {}, {}}};
      } else {
        s.tokens = {name, "lives", "in", place, "today"};
        s.entities = {{0, 0, "Per", {}, {}}, {3, 3, "Loc", {}, {}}};
      }
      s.relations = {{0, 1, "LivesIn"}};
    } else {
      const std::string& org = orgs[(i / 2) % 4];
      s.tokens = {name, "works", "at", org, "now"};
      s.entities = {{0, 0, "Per", {}, {}}, {3, 3, "Org", {}, {}}};
      s.relations = {{0, 1, "WorksFor"}};
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

// The corpus above with every relation annotated in both directions. Gated
// fusion scores a span pair independently of argument order, so the default
// configuration can only memorize relation sets that are direction-closed;
// this variant gives it exactly that.
inline std::vector<spanex::Sentence> overfit_corpus_symmetric() {
  auto corpus = overfit_corpus();
  for (auto& s : corpus) {
    const auto forward = s.relations;
    for (const auto& r : forward)
      s.relations.push_back({r.tail_entity, r.head_entity, r.type});
  }
  return corpus;
}

// Configuration text that overfits the corpus above quickly and
// deterministically.
inline std::string overfit_config_text(const std::string& train_path,
                                       const std::string& output_dir,
                                       int epochs) {
  std::string cfg;
  cfg += "corpus.train = " + train_path + "\n";
  cfg += "encoder.kind = toy\n";
  cfg += "encoder.dim = 32\n";
  cfg += "train.epochs = " + std::to_string(epochs) + "\n";
  cfg += "train.learning_rate = 0.005\n";
  cfg += "train.weight_decay = 0.0\n";
  cfg += "train.batch_size = 4\n";
  cfg += "train.seed = 7\n";
  cfg += "output.dir = " + output_dir + "\n";
  return cfg;
}

// --- randomized scoring fixtures ---------------------------------------------

// Annotated sentence pairs with deliberate noise: dropped, added, retyped
// and moved mentions; relations over whatever entities survive.
struct EvalPair {
  std::vector<spanex::Sentence> gold;
  std::vector<spanex::Sentence> predicted;
};

inline EvalPair random_eval_pair(std::mt19937_64& rng, int n_sentences) {
  const std::vector<std::string> entity_types = {"A", "B", "C"};
  const std::vector<std::string> relation_types = {"R", "S"};
  EvalPair out;
  for (int i = 0; i < n_sentences; ++i) {
    const int n = 3 + static_cast<int>(spanex::uniform_below(rng, 12));
    spanex::Sentence g;
    g.id = "p" + std::to_string(i);
    for (int t = 0; t < n; ++t) g.tokens.push_back("w" + std::to_string(t));

    const int n_entities = static_cast<int>(spanex::uniform_below(rng, 5));
    for (int e = 0; e < n_entities; ++e) {
      const int start = static_cast<int>(spanex::uniform_below(rng, n));
      const int width = 1 + static_cast<int>(spanex::uniform_below(
                                rng, std::min(3, n - start)));
      spanex::EntityMention m{
          start, start + width - 1,
          entity_types[spanex::uniform_below(rng, entity_types.size())],
          {}, {}};
      if (spanex::uniform_below(rng, 10) < 3 && m.end > m.start) {
        // A head region strictly inside the mention.
        m.head_start = m.start;
        m.head_end = m.start;
      }
      g.entities.push_back(m);
    }
    for (std::size_t h = 0; h < g.entities.size(); ++h)
      for (std::size_t t = 0; t < g.entities.size(); ++t)
        if (h != t && spanex::uniform_below(rng, 10) < 3)
          g.relations.push_back(
              {static_cast<int>(h), static_cast<int>(t),
               relation_types[spanex::uniform_below(rng, 2)]});

    // Predictions: start from gold, then drop / retype / shift / invent.
    spanex::Sentence p;
    p.id = g.id;
    p.tokens = g.tokens;
    std::vector<int> kept(g.entities.size(), -1);
    for (std::size_t e = 0; e < g.entities.size(); ++e) {
      const auto roll = spanex::uniform_below(rng, 10);
      if (roll < 2) continue;  // dropped
      spanex::EntityMention m = g.entities[e];
      if (roll < 4)
        m.type = entity_types[spanex::uniform_below(rng, entity_types.size())];
      if (roll == 4 && m.end + 1 < n) m.end += 1;  // shifted boundary
      kept[e] = static_cast<int>(p.entities.size());
      p.entities.push_back(m);
    }
    const int invented = static_cast<int>(spanex::uniform_below(rng, 3));
    for (int e = 0; e < invented; ++e) {
      const int start = static_cast<int>(spanex::uniform_below(rng, n));
      p.entities.push_back(
          {start, start,
           entity_types[spanex::uniform_below(rng, entity_types.size())],
           {}, {}});
    }
    for (const auto& r : g.relations) {
      if (kept[r.head_entity] < 0 || kept[r.tail_entity] < 0) continue;
      if (spanex::uniform_below(rng, 10) < 2) continue;  // dropped
      spanex::RelationMention pr{kept[r.head_entity], kept[r.tail_entity],
                                 r.type};
      if (spanex::uniform_below(rng, 10) < 2)
        pr.type = relation_types[spanex::uniform_below(rng, 2)];
      if (spanex::uniform_below(rng, 10) < 2)
        std::swap(pr.head_entity, pr.tail_entity);  // reversed direction
      p.relations.push_back(pr);
    }
    if (p.entities.size() >= 2 && spanex::uniform_below(rng, 10) < 4)
      p.relations.push_back(
          {0, static_cast<int>(p.entities.size()) - 1,
           relation_types[spanex::uniform_below(rng, 2)]});

    out.gold.push_back(std::move(g));
    out.predicted.push_back(std::move(p));
  }
  return out;
}

}  // namespace testutil
