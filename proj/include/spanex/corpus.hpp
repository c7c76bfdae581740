#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spanex/error.hpp"
#include "spanex/types.hpp"

namespace spanex {

// Corpus files are JSON lines, one sentence object per line:
//
//   {"id": str, "tokens": [str],
//    "entities": [{"start": int, "end": int, "type": str,
//                  "head_start": int?, "head_end": int?}],
//    "relations": [{"head": int, "tail": int, "type": str}]}
//
// `end` is inclusive; `head`/`tail` index the entities array. `entities` and
// `relations` may be omitted (prediction input). A sidecar vocab file lists
// entity types then relation types, one per line, separated by a blank line.

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj,
                                           const char* field,
                                           const std::string& sentence_id) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw ParseError("sentence '" + sentence_id + "': missing field '" +
                     field + "'");
  return *it;
}

inline Sentence parse_sentence(const nlohmann::json& obj, std::size_t line_no) {
  if (!obj.is_object())
    throw ParseError("line " + std::to_string(line_no) +
                     ": sentence record is not a JSON object");
  Sentence s;
  s.id = obj.value("id", std::string{});
  if (s.id.empty())
    throw ParseError("line " + std::to_string(line_no) +
                     ": missing or empty field 'id'");
  const auto& toks = require_field(obj, "tokens", s.id);
  if (!toks.is_array())
    throw ParseError("sentence '" + s.id + "': field 'tokens' is not an array");
  for (const auto& t : toks) {
    if (!t.is_string())
      throw ParseError("sentence '" + s.id + "': field 'tokens' holds a "
                       "non-string element");
    s.tokens.push_back(t.get<std::string>());
  }
  if (auto it = obj.find("entities"); it != obj.end()) {
    for (const auto& e : *it) {
      EntityMention m;
      m.start = require_field(e, "start", s.id).get<int>();
      m.end = require_field(e, "end", s.id).get<int>();
      m.type = require_field(e, "type", s.id).get<std::string>();
      if (e.contains("head_start")) m.head_start = e["head_start"].get<int>();
      if (e.contains("head_end")) m.head_end = e["head_end"].get<int>();
      s.entities.push_back(std::move(m));
    }
  }
  if (auto it = obj.find("relations"); it != obj.end()) {
    for (const auto& r : *it) {
      RelationMention m;
      m.head_entity = require_field(r, "head", s.id).get<int>();
      m.tail_entity = require_field(r, "tail", s.id).get<int>();
      m.type = require_field(r, "type", s.id).get<std::string>();
      s.relations.push_back(std::move(m));
    }
  }
  return s;
}

}  // namespace detail

// Checks every structural invariant of a sentence. Label membership is
// checked against `vocab` only when `fixed_vocab` is set; otherwise labels
// are added to it in first-appearance order.
inline void validate_sentence(const Sentence& s, LabelVocab& vocab,
                              bool fixed_vocab) {
  const int n = s.length();
  if (n < 1)
    throw ValidationError("sentence '" + s.id + "': empty token sequence");
  for (std::size_t i = 0; i < s.entities.size(); ++i) {
    const auto& e = s.entities[i];
    if (e.start > e.end)
      throw ValidationError("sentence '" + s.id + "': entity " +
                            std::to_string(i) + " has start " +
                            std::to_string(e.start) + " > end " +
                            std::to_string(e.end));
    if (e.start < 0 || e.end >= n)
      throw ValidationError("sentence '" + s.id + "': entity " +
                            std::to_string(i) + " span [" +
                            std::to_string(e.start) + ", " +
                            std::to_string(e.end) + "] outside [0, " +
                            std::to_string(n) + ")");
    if (e.head_start.has_value() != e.head_end.has_value())
      throw ValidationError("sentence '" + s.id + "': entity " +
                            std::to_string(i) +
                            " has a partial head region");
    if (e.has_head() &&
        !(e.start <= *e.head_start && *e.head_start <= *e.head_end &&
          *e.head_end <= e.end))
      throw ValidationError("sentence '" + s.id + "': entity " +
                            std::to_string(i) +
                            " head region not nested in its span");
    if (fixed_vocab) {
      if (!vocab.has_entity_type(e.type))
        throw VocabError("sentence '" + s.id + "': entity type '" + e.type +
                         "' not in the pinned vocabulary");
    } else {
      vocab.add_entity_type(e.type);
    }
  }
  const int m = static_cast<int>(s.entities.size());
  for (std::size_t i = 0; i < s.relations.size(); ++i) {
    const auto& r = s.relations[i];
    if (r.head_entity < 0 || r.head_entity >= m || r.tail_entity < 0 ||
        r.tail_entity >= m)
      throw ValidationError("sentence '" + s.id + "': relation " +
                            std::to_string(i) +
                            " references a nonexistent entity");
    if (r.head_entity == r.tail_entity)
      throw ValidationError("sentence '" + s.id + "': relation " +
                            std::to_string(i) + " is a self-pair");
    if (fixed_vocab) {
      if (!vocab.has_relation_type(r.type))
        throw VocabError("sentence '" + s.id + "': relation type '" + r.type +
                         "' not in the pinned vocabulary");
    } else {
      vocab.add_relation_type(r.type);
    }
  }
}

inline std::pair<std::vector<Sentence>, LabelVocab> load_corpus(
    const std::string& path, std::optional<LabelVocab> vocab = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file '" + path + "'");
  const bool fixed = vocab.has_value();
  LabelVocab out_vocab = fixed ? std::move(*vocab) : LabelVocab{};
  std::vector<Sentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Sentence s;
    try {
      s = detail::parse_sentence(obj, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    validate_sentence(s, out_vocab, fixed);
    sentences.push_back(std::move(s));
  }
  return {std::move(sentences), std::move(out_vocab)};
}

inline nlohmann::json sentence_to_json(const Sentence& s) {
  nlohmann::json obj;
  obj["id"] = s.id;
  obj["tokens"] = s.tokens;
  obj["entities"] = nlohmann::json::array();
  for (const auto& e : s.entities) {
    nlohmann::json je{{"start", e.start}, {"end", e.end}, {"type", e.type}};
    if (e.has_head()) {
      je["head_start"] = *e.head_start;
      je["head_end"] = *e.head_end;
    }
    obj["entities"].push_back(std::move(je));
  }
  obj["relations"] = nlohmann::json::array();
  for (const auto& r : s.relations) {
    obj["relations"].push_back(
        {{"head", r.head_entity}, {"tail", r.tail_entity}, {"type", r.type}});
  }
  return obj;
}

inline void save_corpus(const std::vector<Sentence>& sentences,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file '" + path + "'");
  for (const auto& s : sentences) out << sentence_to_json(s).dump() << "\n";
}

// Sidecar vocab: entity types, blank line, relation types.
inline LabelVocab load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocab file '" + path + "'");
  LabelVocab v;
  std::string line;
  bool in_relations = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      in_relations = true;
      continue;
    }
    if (in_relations)
      v.add_relation_type(line);
    else
      v.add_entity_type(line);
  }
  return v;
}

inline void save_vocab(const LabelVocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocab file '" + path + "'");
  for (const auto& t : vocab.entity_types()) out << t << "\n";
  out << "\n";
  for (const auto& t : vocab.relation_types()) out << t << "\n";
}

struct AnnotationCounts {
  std::map<std::string, long> entities;   // per entity type
  std::map<std::string, long> relations;  // per relation type

  long total_entities() const {
    long t = 0;
    for (const auto& [_, c] : entities) t += c;
    return t;
  }
  long total_relations() const {
    long t = 0;
    for (const auto& [_, c] : relations) t += c;
    return t;
  }
};

inline AnnotationCounts corpus_split_counts(
    const std::vector<Sentence>& sentences) {
  AnnotationCounts counts;
  for (const auto& s : sentences) {
    for (const auto& e : s.entities) ++counts.entities[e.type];
    for (const auto& r : s.relations) ++counts.relations[r.type];
  }
  return counts;
}

}  // namespace spanex
