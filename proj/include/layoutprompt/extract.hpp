#pragma once
//
// Answer extraction from raw model output.
//
//   1. Collect every balanced {...} span that parses as a JSON object.
//      Brace matching skips quoted strings.
//   2. Only if none parse strictly, retry the spans leniently: single-quoted
//      strings and trailing commas are accepted (flagged "lenient-json").
//   3. With several objects, keep the one covering most expected keys;
//      earliest wins ties.
//   4. Read one answer per expected key. Nested values and hallucinated keys
//      yield no answer and a diagnostic.
//
// None of these functions throw on arbitrary input.
//

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/prompt.hpp"

namespace layoutprompt {

struct Diagnostic {
  std::string code;
  std::string detail;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ExtractionResult {
  /// One entry per expected key, in schema order.
  std::vector<std::pair<std::string, std::optional<std::string>>> answers;
  std::vector<Diagnostic> diagnostics;

  const std::optional<std::string>& answer(std::string_view key) const {
    for (const auto& [k, v] : answers) {
      if (k == key) return v;
    }
    static const std::optional<std::string> none;
    return none;
  }

  bool has_diagnostic(std::string_view code) const {
    for (const auto& d : diagnostics) {
      if (d.code == code) return true;
    }
    return false;
  }
};

namespace detail {

/// Index of the brace closing the one at `open`, or npos.
inline std::size_t match_brace(std::string_view s, std::size_t open, bool single_quotes) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"' || (single_quotes && c == '\'')) {
      const char quote = c;
      for (++i; i < s.size() && s[i] != quote; ++i) {
        if (s[i] == '\\') ++i;
      }
      if (i >= s.size()) return std::string_view::npos;
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

/// Rewrites single-quoted strings as JSON strings and drops trailing commas.
inline std::string relax_json(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') {
      const auto start = i;
      for (++i; i < s.size() && s[i] != '"'; ++i) {
        if (s[i] == '\\') ++i;
      }
      out.append(s.substr(start, i - start + 1));
      continue;
    }
    if (c == '\'') {
      out.push_back('"');
      for (++i; i < s.size() && s[i] != '\''; ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          if (s[i + 1] == '\'') {
            out.push_back('\'');
          } else {
            out.push_back('\\');
            out.push_back(s[i + 1]);
          }
          ++i;
        } else if (s[i] == '"') {
          out.append("\\\"");
        } else {
          out.push_back(s[i]);
        }
      }
      out.push_back('"');
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && text::is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

inline std::optional<nlohmann::json> parse_object(std::string_view span, bool lenient) {
  const std::string candidate = lenient ? relax_json(span) : std::string(span);
  auto j = nlohmann::json::parse(candidate, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

inline std::vector<std::pair<std::string, nlohmann::json>> scan_objects(std::string_view s,
                                                                        bool lenient) {
  std::vector<std::pair<std::string, nlohmann::json>> found;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '{') {
      const auto end = match_brace(s, i, lenient);
      if (end != std::string_view::npos) {
        const auto span = s.substr(i, end - i + 1);
        if (auto obj = parse_object(span, lenient)) {
          found.emplace_back(std::string(span), std::move(*obj));
          i = end + 1;
          continue;
        }
      }
    }
    ++i;
  }
  return found;
}

}  // namespace detail

/// Raw text of every maximal balanced-brace span that parses as a JSON
/// object, in order of appearance.
inline std::vector<std::string> find_json_objects(std::string_view output) {
  std::vector<std::string> out;
  for (auto& [raw, obj] : detail::scan_objects(output, false)) out.push_back(std::move(raw));
  return out;
}

/// The object sharing most top-level keys with `expected_keys`; the
/// earliest one on ties. Absent for an empty list.
inline std::optional<nlohmann::json> select_object(const std::vector<nlohmann::json>& objects,
                                                   const std::set<std::string>& expected_keys) {
  std::optional<nlohmann::json> best;
  std::size_t best_hits = 0;
  for (const auto& obj : objects) {
    if (!obj.is_object()) continue;
    std::size_t hits = 0;
    for (const auto& [k, v] : obj.items()) hits += expected_keys.count(k);
    if (!best || hits > best_hits) {
      best = obj;
      best_hits = hits;
    }
  }
  return best;
}

/// Scalar -> answer string; integral numbers print without a decimal point.
inline std::optional<std::string> stringify_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::trunc(d) && std::fabs(d) < 9007199254740992.0) {
      return std::to_string(static_cast<std::int64_t>(d));
    }
    return v.dump();
  }
  return std::nullopt;
}

inline ExtractionResult read_answers(const std::optional<nlohmann::json>& object,
                                     const std::vector<std::string>& expected_keys) {
  ExtractionResult r;
  const std::set<std::string> expected(expected_keys.begin(), expected_keys.end());
  bool missing = false;
  for (const auto& key : expected_keys) {
    std::optional<std::string> answer;
    if (object && object->contains(key)) {
      const auto& v = (*object)[key];
      if (v.is_object() || v.is_array()) {
        r.diagnostics.push_back({"nested-value", key});
      } else {
        answer = stringify_scalar(v);
      }
    } else {
      missing = true;
    }
    r.answers.emplace_back(key, std::move(answer));
  }
  if (object && missing) {
    for (const auto& [k, v] : object->items()) {
      if (!expected.count(k)) r.diagnostics.push_back({"hallucinated-key", k});
    }
  }
  return r;
}

/// Full pipeline from raw output to per-key answers.
inline ExtractionResult extract_answers(std::string_view output, const AnswerSchema& schema) {
  std::vector<Diagnostic> pre;
  auto found = detail::scan_objects(output, false);
  if (found.empty()) {
    found = detail::scan_objects(output, true);
    if (!found.empty()) pre.push_back({"lenient-json", std::to_string(found.size())});
  }
  if (found.empty()) pre.push_back({"no-json", ""});
  if (found.size() > 1) pre.push_back({"multiple-objects", std::to_string(found.size())});

  std::vector<nlohmann::json> objects;
  objects.reserve(found.size());
  for (auto& [raw, obj] : found) objects.push_back(std::move(obj));
  auto result = read_answers(select_object(objects, schema.key_set()), schema.keys);
  result.diagnostics.insert(result.diagnostics.begin(), pre.begin(), pre.end());
  return result;
}

inline nlohmann::ordered_json to_json(const ExtractionResult& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json answers = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.answers) {
    answers[k] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  }
  j["answers"] = std::move(answers);
  auto diags = nlohmann::ordered_json::array();
  for (const auto& d : r.diagnostics) diags.push_back({{"code", d.code}, {"detail", d.detail}});
  j["diagnostics"] = std::move(diags);
  return j;
}

inline ExtractionResult extraction_from_json(const nlohmann::json& j) {
  ExtractionResult r;
  if (!j.is_object() || !j.contains("answers") || !j["answers"].is_object()) {
    throw ParseError("extraction record needs an 'answers' object");
  }
  // nlohmann::json sorts keys; callers needing schema order re-key by schema.
  for (const auto& [k, v] : j["answers"].items()) {
    r.answers.emplace_back(k, v.is_null() ? std::nullopt : stringify_scalar(v));
  }
  if (j.contains("diagnostics")) {
    for (const auto& d : j["diagnostics"]) {
      r.diagnostics.push_back({d.value("code", ""), d.value("detail", "")});
    }
  }
  return r;
}

}  // namespace layoutprompt
