#pragma once
//
// Prompt assembly. A template carries three placeholders on their own
// lines: <<<CONTENT>>> (the verbalized document), <<<QUESTION>>> (the
// enumerated items) and <<<FORMAT>>> (the verbalizer's format description).
// Pattern A drops the FORMAT line together with the blank line after it.
//
// The built-in pattern B templates below are shipped verbatim, including a
// trailing space after "datatype string." and the missing comma in the NLI
// example object; data/templates/ holds the same text as files.
//

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "layoutprompt/error.hpp"
#include "layoutprompt/ingest.hpp"
#include "layoutprompt/task.hpp"
#include "layoutprompt/verbalize.hpp"

namespace layoutprompt {

enum class PromptPattern { A, B };

inline std::string_view to_string(PromptPattern p) { return p == PromptPattern::A ? "A" : "B"; }

inline std::optional<PromptPattern> parse_pattern(std::string_view s) {
  if (s == "A" || s == "a") return PromptPattern::A;
  if (s == "B" || s == "b") return PromptPattern::B;
  return std::nullopt;
}

inline constexpr std::string_view kContentPlaceholder = "<<<CONTENT>>>";
inline constexpr std::string_view kQuestionPlaceholder = "<<<QUESTION>>>";
inline constexpr std::string_view kFormatPlaceholder = "<<<FORMAT>>>";

inline constexpr std::string_view kQaTemplateB =
    "$$$\n"
    "<<<CONTENT>>>\n"
    "$$$\n"
    "\n"
    "From the above document, which is enclosed by \"$$$\", answer the following questions:\n"
    "<<<QUESTION>>>\n"
    "\n"
    "<<<FORMAT>>>\n"
    "\n"
    "The questions are numbered, e.g. \"(0)\".\n"
    "Write the answers into a JSON dictionary and use the question numbers as keys and as "
    "datatype string. \n"
    "Here is an example of the expected JSON format:\n"
    "{\n"
    "    \"0\": <ANSWER_TO_QUESTION_0>,\n"
    "    \"1\": <ANSWER_TO_QUESTION_1>,\n"
    "    ...\n"
    "}";

inline constexpr std::string_view kNliTemplateB =
    "$$$\n"
    "<<<CONTENT>>>\n"
    "$$$\n"
    "\n"
    "From the above document, which is enclosed by \"$$$\", validate the following statements:\n"
    "<<<QUESTION>>>\n"
    "\n"
    "<<<FORMAT>>>\n"
    "\n"
    "The statements are numbered, e.g. \"(0)\".\n"
    "Write the answers into a JSON dictionary and use the statement numbers as keys and as "
    "datatype string. \n"
    "Answer with the string value \"1\" in case of a true statement and with the string value "
    "\"0\" in case of a false statement.\n"
    "Here is an example of the expected JSON format:\n"
    "{\n"
    "    \"0\": <ANSWER_FOR_STATEMENT_0>\n"
    "    \"1\": <ANSWER_FOR_STATEMENT_1>,\n"
    "    ...\n"
    "}";

inline constexpr std::string_view kKieTemplateB =
    "$$$\n"
    "<<<CONTENT>>>\n"
    "$$$\n"
    "\n"
    "From the above document, which is enclosed by \"$$$\", extract the values to the following "
    "keys:\n"
    "<<<QUESTION>>>\n"
    "\n"
    "<<<FORMAT>>>\n"
    "\n"
    "Write the answers into a JSON dictionary with one entry for each requested key.\n"
    "Here is an example of the expected JSON format:\n"
    "{\n"
    "    KEY0: <VALUE_FOR_KEY_0>,\n"
    "    KEY1: <VALUE_FOR_KEY_1>,\n"
    "    ...\n"
    "}";

/// Removes the <<<FORMAT>>> line and one adjacent blank line (the following
/// one when present, else the preceding one).
inline std::string strip_format_block(std::string_view tmpl) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = tmpl.find('\n', start);
    lines.emplace_back(tmpl.substr(start, nl == std::string_view::npos ? nl : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]) != kFormatPlaceholder) continue;
    std::size_t first = i;
    std::size_t last = i;
    if (i + 1 < lines.size() && text::trim(lines[i + 1]).empty()) {
      last = i + 1;
    } else if (i > 0 && text::trim(lines[i - 1]).empty()) {
      first = i - 1;
    }
    lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(first),
                lines.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    break;
  }
  return text::join(lines, "\n");
}

/// Template text per (TaskKind, PromptPattern).
class PromptTemplates {
 public:
  PromptTemplates() {
    set(TaskKind::QA, PromptPattern::B, std::string(kQaTemplateB));
    set(TaskKind::NLI, PromptPattern::B, std::string(kNliTemplateB));
    set(TaskKind::KIE, PromptPattern::B, std::string(kKieTemplateB));
    for (auto k : {TaskKind::QA, TaskKind::NLI, TaskKind::KIE}) {
      set(k, PromptPattern::A, strip_format_block(get(k, PromptPattern::B)));
    }
  }

  static std::string file_name(TaskKind kind, PromptPattern pattern) {
    return text::lower(to_string(kind)) + "_" + text::lower(to_string(pattern)) + ".txt";
  }

  /// Overrides templates with `<kind>_<pattern>.txt` files found in `dir`
  /// (e.g. qa_b.txt). A pattern-A file that is absent is derived from the
  /// pattern-B one.
  static PromptTemplates from_directory(const std::filesystem::path& dir) {
    PromptTemplates t;
    for (auto k : {TaskKind::QA, TaskKind::NLI, TaskKind::KIE}) {
      const auto b = dir / file_name(k, PromptPattern::B);
      const auto a = dir / file_name(k, PromptPattern::A);
      if (std::filesystem::exists(b)) {
        t.set(k, PromptPattern::B, detail::read_file(b));
        t.set(k, PromptPattern::A, strip_format_block(t.get(k, PromptPattern::B)));
      }
      if (std::filesystem::exists(a)) t.set(k, PromptPattern::A, detail::read_file(a));
    }
    return t;
  }

  const std::string& get(TaskKind kind, PromptPattern pattern) const {
    return text_[index(kind, pattern)];
  }
  void set(TaskKind kind, PromptPattern pattern, std::string tmpl) {
    text_[index(kind, pattern)] = std::move(tmpl);
  }

 private:
  static std::size_t index(TaskKind kind, PromptPattern pattern) {
    return static_cast<std::size_t>(kind) * 2 + (pattern == PromptPattern::B ? 1 : 0);
  }
  std::array<std::string, 6> text_;
};

/// QA/NLI: "(0) first\n(1) second"; KIE: one key per line.
inline std::string enumerate_items(const std::vector<std::string>& items, TaskKind kind) {
  std::vector<std::string> lines;
  lines.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    lines.push_back(kind == TaskKind::KIE ? items[i] : "(" + std::to_string(i) + ") " + items[i]);
  }
  return text::join(lines, "\n");
}

/// Keys the model is asked to fill, in item order. NLI answers are further
/// restricted to "0"/"1".
struct AnswerSchema {
  std::vector<std::string> keys;
  std::optional<std::vector<std::string>> value_domain;

  std::set<std::string> key_set() const { return {keys.begin(), keys.end()}; }
};

inline AnswerSchema expected_answer_schema(const TaskRequest& task) {
  AnswerSchema s;
  for (std::size_t i = 0; i < task.items.size(); ++i) s.keys.push_back(task.key(i));
  if (task.kind == TaskKind::NLI) s.value_domain = std::vector<std::string>{"0", "1"};
  return s;
}

/// Single-pass substitution; text inserted for one placeholder is never
/// rescanned for others.
inline std::string substitute(std::string_view tmpl, const std::map<std::string_view, std::string_view>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    if (tmpl[i] == '<') {
      for (const auto& [placeholder, value] : values) {
        if (tmpl.compare(i, placeholder.size(), placeholder) == 0) {
          out.append(value);
          i += placeholder.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(tmpl[i++]);
  }
  return out;
}

inline std::string render_prompt(const Verbalization& v, const TaskRequest& task,
                                 PromptPattern pattern, const PromptTemplates& templates) {
  task.validate();
  std::string tmpl = templates.get(task.kind, pattern);
  if (pattern == PromptPattern::A && tmpl.find(kFormatPlaceholder) != std::string::npos) {
    tmpl = strip_format_block(tmpl);
  }
  const auto items = enumerate_items(task.items, task.kind);
  std::map<std::string_view, std::string_view> values{
      {kContentPlaceholder, v.text},
      {kQuestionPlaceholder, items},
  };
  if (pattern == PromptPattern::B) values.emplace(kFormatPlaceholder, v.format_description);
  return substitute(tmpl, values);
}

inline std::string render_prompt(const Verbalization& v, const TaskRequest& task,
                                 PromptPattern pattern) {
  static const PromptTemplates defaults;
  return render_prompt(v, task, pattern, defaults);
}

}  // namespace layoutprompt
