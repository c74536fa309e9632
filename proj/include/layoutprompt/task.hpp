#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/error.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

enum class TaskKind { QA, NLI, KIE };

/// How an answer is compared with the ground truth.
enum class AnswerType { String, Date, Currency, Quantity };

inline std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::QA: return "QA";
    case TaskKind::NLI: return "NLI";
    case TaskKind::KIE: return "KIE";
  }
  return "?";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
  const auto k = text::lower(s);
  if (k == "qa") return TaskKind::QA;
  if (k == "nli") return TaskKind::NLI;
  if (k == "kie") return TaskKind::KIE;
  return std::nullopt;
}

inline std::string_view to_string(AnswerType t) {
  switch (t) {
    case AnswerType::String: return "string";
    case AnswerType::Date: return "date";
    case AnswerType::Currency: return "currency";
    case AnswerType::Quantity: return "quantity";
  }
  return "?";
}

inline std::optional<AnswerType> parse_answer_type(std::string_view s) {
  const auto k = text::lower(s);
  if (k == "string") return AnswerType::String;
  if (k == "date") return AnswerType::Date;
  if (k == "currency") return AnswerType::Currency;
  if (k == "quantity") return AnswerType::Quantity;
  return std::nullopt;
}

/// Questions (QA), statements (NLI) or keys (KIE) asked in one prompt.
struct TaskRequest {
  TaskKind kind = TaskKind::QA;
  std::vector<std::string> items;
  std::optional<std::vector<AnswerType>> answer_types;

  /// Throws ConfigError on an empty item list, blank items, duplicate KIE
  /// keys or a mismatched answer_types length.
  void validate() const {
    if (items.empty()) throw ConfigError("task has no items");
    std::set<std::string> seen;
    for (const auto& item : items) {
      if (text::trim(item).empty()) throw ConfigError("task item is empty");
      if (kind == TaskKind::KIE && !seen.insert(item).second) {
        throw ConfigError("duplicate KIE key '" + item + "'");
      }
    }
    if (answer_types && answer_types->size() != items.size()) {
      throw ConfigError("answer_types length differs from items");
    }
  }

  /// JSON key under which the answer to item i is expected.
  std::string key(std::size_t i) const {
    return kind == TaskKind::KIE ? items.at(i) : std::to_string(i);
  }

  AnswerType type(std::size_t i) const {
    return answer_types ? answer_types->at(i) : AnswerType::String;
  }
};

/// {"kind": "QA", "items": [...], "answer_types": [...]}.
inline TaskRequest parse_task(const nlohmann::json& j, const std::string& where = "task") {
  if (!j.is_object()) throw ParseError("task must be an object", where);
  TaskRequest t;
  const auto kind = parse_task_kind(j.value("kind", ""));
  if (!kind) throw ParseError("'kind' must be QA, NLI or KIE", where);
  t.kind = *kind;
  if (!j.contains("items") || !j["items"].is_array()) throw ParseError("missing array 'items'", where);
  for (const auto& item : j["items"]) {
    if (!item.is_string()) throw ParseError("items must be strings", where + ".items");
    t.items.push_back(item.get<std::string>());
  }
  if (j.contains("answer_types")) {
    std::vector<AnswerType> types;
    for (const auto& v : j["answer_types"]) {
      const auto a = v.is_string() ? parse_answer_type(v.get<std::string>()) : std::nullopt;
      if (!a) throw ParseError("unknown answer type", where + ".answer_types");
      types.push_back(*a);
    }
    t.answer_types = std::move(types);
  }
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), where);
  }
  return t;
}

inline nlohmann::ordered_json to_json(const TaskRequest& t) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(t.kind));
  j["items"] = t.items;
  if (t.answer_types) {
    auto arr = nlohmann::ordered_json::array();
    for (auto a : *t.answer_types) arr.push_back(std::string(to_string(a)));
    j["answer_types"] = std::move(arr);
  }
  return j;
}

}  // namespace layoutprompt
