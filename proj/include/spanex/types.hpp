#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spanex/error.hpp"

namespace spanex {

// A contiguous token subsequence, [start, end] inclusive.
struct Span {
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  bool contains(int token) const { return token >= start && token <= end; }
  auto operator<=>(const Span&) const = default;
};

struct EntityMention {
  int start = 0;
  int end = 0;  // inclusive
  std::string type;
  std::optional<int> head_start;  // ACE05-style syntactic head region
  std::optional<int> head_end;

  Span span() const { return {start, end}; }
  bool has_head() const { return head_start.has_value() && head_end.has_value(); }
  bool operator==(const EntityMention&) const = default;
};

// Directed: head/tail index into the owning sentence's entity list.
struct RelationMention {
  int head_entity = 0;
  int tail_entity = 0;
  std::string type;

  bool operator==(const RelationMention&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence&) const = default;
};

// Phase One polarity labels. They are never members of the label vocabulary;
// they exist only as the negative class of the binary classifiers and in
// audit reports.
inline constexpr const char* kNotEntityLabel = "Not-Entity";
inline constexpr const char* kNotRelationLabel = "Not-Relation";

// Ordered label sets for entity types and relation types, with dense 0-based
// ids assigned in insertion order.
class LabelVocab {
 public:
  LabelVocab() = default;
  LabelVocab(std::vector<std::string> entity_types,
             std::vector<std::string> relation_types) {
    for (auto& t : entity_types) add_entity_type(t);
    for (auto& t : relation_types) add_relation_type(t);
  }

  int add_entity_type(const std::string& name) {
    check_not_reserved(name);
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    int id = static_cast<int>(entity_types_.size());
    entity_types_.push_back(name);
    entity_ids_.emplace(name, id);
    return id;
  }

  int add_relation_type(const std::string& name) {
    check_not_reserved(name);
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    int id = static_cast<int>(relation_types_.size());
    relation_types_.push_back(name);
    relation_ids_.emplace(name, id);
    return id;
  }

  int entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end())
      throw VocabError("unknown entity type '" + name + "'");
    return it->second;
  }

  int relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end())
      throw VocabError("unknown relation type '" + name + "'");
    return it->second;
  }

  bool has_entity_type(const std::string& name) const {
    return entity_ids_.count(name) > 0;
  }
  bool has_relation_type(const std::string& name) const {
    return relation_ids_.count(name) > 0;
  }

  const std::string& entity_name(int id) const { return entity_types_.at(id); }
  const std::string& relation_name(int id) const { return relation_types_.at(id); }

  const std::vector<std::string>& entity_types() const { return entity_types_; }
  const std::vector<std::string>& relation_types() const { return relation_types_; }

  int num_entity_types() const { return static_cast<int>(entity_types_.size()); }
  int num_relation_types() const { return static_cast<int>(relation_types_.size()); }

  bool operator==(const LabelVocab& other) const {
    return entity_types_ == other.entity_types_ &&
           relation_types_ == other.relation_types_;
  }

 private:
  static void check_not_reserved(const std::string& name) {
    if (name == kNotEntityLabel || name == kNotRelationLabel)
      throw VocabError("'" + name + "' is a reserved polarity label and cannot "
                       "be a vocabulary member");
  }

  std::vector<std::string> entity_types_;
  std::vector<std::string> relation_types_;
  std::map<std::string, int> entity_ids_;
  std::map<std::string, int> relation_ids_;
};

}  // namespace spanex
