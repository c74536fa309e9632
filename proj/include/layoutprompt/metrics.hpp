#pragma once
//
// Scoring: type-aware accuracy, ANLS, EM/F1 and report aggregation.
//
// Type-aware comparison normalizes prediction and ground truth the same way:
//   string    trimmed, ASCII case-folded equality
//   date      parsed with the fixed format list below, compared as dates
//   currency  first match of \d+(?:(\.|,)\d{1,2})?, comma -> dot
//   quantity  group 1 of (?:[ a-zA-Z]*)(\d+)(?:[ a-zA-Z]*)
// Both sides empty counts as correct (the model rightly rejected a key)
// unless rejection scoring is switched off.
//
// Date formats, tried in order (day-first where ambiguous):
//   YYYY-MM-DD[Thh:mm...]   DD/MM/YYYY   DD-MM-YYYY   DD.MM.YYYY
//   D MonthName YYYY        MonthName D, YYYY
// Two-digit years map 00-69 -> 2000-2069, 70-99 -> 1970-1999. Month names
// are English, full or three-letter (plus "Sept"), any case.
//

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "layoutprompt/error.hpp"
#include "layoutprompt/task.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

enum class Verdict { Correct, Wrong, BothEmptyCorrect };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::Wrong: return "wrong";
    case Verdict::BothEmptyCorrect: return "both_empty_correct";
  }
  return "?";
}

inline bool is_correct(Verdict v) { return v != Verdict::Wrong; }

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  friend bool operator==(const Date&, const Date&) = default;
};

inline std::optional<std::string> normalize_currency(std::string_view s) {
  static const std::regex re(R"(\d+(?:(\.|,)\d{1,2})?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(s.begin(), s.end(), m, re)) return std::nullopt;
  std::string out = m.str(0);
  std::replace(out.begin(), out.end(), ',', '.');
  return out;
}

inline std::optional<std::string> normalize_quantity(std::string_view s) {
  static const std::regex re(R"((?:[ a-zA-Z]*)(\d+)(?:[ a-zA-Z]*))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(s.begin(), s.end(), m, re)) return std::nullopt;
  return m.str(1);
}

namespace detail {

inline bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline std::optional<Date> make_date(int y, int m, int d) {
  static constexpr std::array<int, 12> days = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1) return std::nullopt;
  const int limit = days[static_cast<std::size_t>(m - 1)] + (m == 2 && leap(y) ? 1 : 0);
  if (d > limit) return std::nullopt;
  return Date{y, m, d};
}

inline int expand_year(const std::string& y) {
  const int v = std::stoi(y);
  if (y.size() > 2) return v;
  return v < 70 ? 2000 + v : 1900 + v;
}

inline int month_from_name(const std::string& name) {
  static const std::array<const char*, 12> full = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  const auto n = text::lower(name);
  if (n == "sept") return 9;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const std::string f = full[i];
    if (n == f || n == f.substr(0, 3)) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace detail

inline std::optional<Date> normalize_date(std::string_view raw) {
  const std::string s(text::trim(raw));
  if (s.empty()) return std::nullopt;
  std::smatch m;

  static const std::regex iso(R"((\d{4})-(\d{1,2})-(\d{1,2})(?:[T ]\d{1,2}:\d{2}.*)?)");
  if (std::regex_match(s, m, iso)) {
    if (auto d = detail::make_date(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]))) return d;
  }
  static const std::array<std::regex, 3> numeric = {
      std::regex(R"((\d{1,2})/(\d{1,2})/(\d{4}|\d{2}))"),
      std::regex(R"((\d{1,2})-(\d{1,2})-(\d{4}|\d{2}))"),
      std::regex(R"((\d{1,2})\.(\d{1,2})\.(\d{4}|\d{2}))"),
  };
  for (const auto& re : numeric) {
    if (std::regex_match(s, m, re)) {
      if (auto d = detail::make_date(detail::expand_year(m[3]), std::stoi(m[2]), std::stoi(m[1]))) {
        return d;
      }
    }
  }
  static const std::regex day_month(
      R"((\d{1,2})(?:st|nd|rd|th)?[ -]([A-Za-z]+)\.?,?[ -](\d{4}|\d{2}))");
  if (std::regex_match(s, m, day_month)) {
    if (const int month = detail::month_from_name(m[2])) {
      if (auto d = detail::make_date(detail::expand_year(m[3]), month, std::stoi(m[1]))) return d;
    }
  }
  static const std::regex month_day(R"(([A-Za-z]+)\.? (\d{1,2})(?:st|nd|rd|th)?,? (\d{4}))");
  if (std::regex_match(s, m, month_day)) {
    if (const int month = detail::month_from_name(m[1])) {
      if (auto d = detail::make_date(std::stoi(m[3]), month, std::stoi(m[2]))) return d;
    }
  }
  return std::nullopt;
}

namespace detail {

inline bool blank(const std::optional<std::string>& s) {
  return !s || text::trim(*s).empty();
}

inline bool typed_equal(const std::string& a, const std::string& b, AnswerType t) {
  switch (t) {
    case AnswerType::String: return text::lower(text::trim(a)) == text::lower(text::trim(b));
    case AnswerType::Date: {
      const auto da = normalize_date(a);
      const auto db = normalize_date(b);
      return da && db && *da == *db;
    }
    case AnswerType::Currency: {
      const auto ca = normalize_currency(a);
      const auto cb = normalize_currency(b);
      return ca && cb && *ca == *cb;
    }
    case AnswerType::Quantity: {
      const auto qa = normalize_quantity(a);
      const auto qb = normalize_quantity(b);
      return qa && qb && *qa == *qb;
    }
  }
  return false;
}

}  // namespace detail

/// Symmetric in (pred, gt).
inline Verdict compare_typed(const std::optional<std::string>& pred,
                             const std::optional<std::string>& gt, AnswerType type,
                             bool allow_rejection = true) {
  const bool pe = detail::blank(pred);
  const bool ge = detail::blank(gt);
  if (pe && ge) return allow_rejection ? Verdict::BothEmptyCorrect : Verdict::Wrong;
  if (pe || ge) return Verdict::Wrong;
  return detail::typed_equal(*pred, *gt, type) ? Verdict::Correct : Verdict::Wrong;
}

/// Correct when any ground-truth variant matches. An empty list means "no
/// value expected".
inline Verdict compare_typed_any(const std::optional<std::string>& pred,
                                 const std::vector<std::string>& gts, AnswerType type,
                                 bool allow_rejection = true) {
  if (gts.empty()) return compare_typed(pred, std::nullopt, type, allow_rejection);
  Verdict best = Verdict::Wrong;
  for (const auto& gt : gts) {
    const auto v = compare_typed(pred, gt, type, allow_rejection);
    if (v == Verdict::Correct) return v;
    if (v == Verdict::BothEmptyCorrect) best = v;
  }
  return best;
}

inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline constexpr double kAnlsThreshold = 0.5;

/// Normalized Levenshtein similarity against the best ground truth. Inputs
/// are lower-cased with whitespace collapsed; similarities below 0.5 count 0.
inline double anls(std::string_view pred, const std::vector<std::string>& gt_set) {
  const auto p = text::to_u32(text::lower(text::collapse_spaces(pred)));
  double best = 0.0;
  for (const auto& gt : gt_set) {
    const auto g = text::to_u32(text::lower(text::collapse_spaces(gt)));
    const std::size_t len = std::max(p.size(), g.size());
    double sim = 1.0;
    if (len > 0) sim = 1.0 - static_cast<double>(levenshtein(p, g)) / static_cast<double>(len);
    if (sim < kAnlsThreshold) sim = 0.0;
    best = std::max(best, sim);
  }
  return best;
}

struct EmF1 {
  int em = 0;
  double f1 = 0.0;
};

/// Lower-case, delete ASCII punctuation, split on whitespace.
inline std::vector<std::string> answer_tokens(std::string_view s) {
  std::string cleaned;
  for (char c : text::lower(s)) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned.push_back(c);
  }
  return text::split_whitespace(cleaned);
}

inline EmF1 em_f1(std::string_view pred, std::string_view gt) {
  const auto p = answer_tokens(pred);
  const auto g = answer_tokens(gt);
  EmF1 r;
  r.em = p == g ? 1 : 0;
  if (p.empty() || g.empty()) {
    r.f1 = r.em;
    return r;
  }
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return r;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  r.f1 = 2.0 * precision * recall / (precision + recall);
  return r;
}

enum class Metric { Typed, Accuracy, Anls, Em, F1 };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Typed: return "typed";
    case Metric::Accuracy: return "accuracy";
    case Metric::Anls: return "anls";
    case Metric::Em: return "em";
    case Metric::F1: return "f1";
  }
  return "?";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
  const auto k = text::lower(s);
  for (auto m : {Metric::Typed, Metric::Accuracy, Metric::Anls, Metric::Em, Metric::F1}) {
    if (to_string(m) == k) return m;
  }
  return std::nullopt;
}

struct EvalRecord {
  std::string item_key;
  std::optional<std::string> prediction;
  std::vector<std::string> ground_truth;  // acceptable variants; empty = no value
  AnswerType answer_type = AnswerType::String;
  Verdict verdict = Verdict::Wrong;
  double score = 0.0;  // 1/0 for accuracy metrics, similarity for ANLS/F1
};

/// Scores one item under `metric`, filling verdict and score.
inline EvalRecord score_item(std::string key, std::optional<std::string> pred,
                             std::vector<std::string> gts, AnswerType type, Metric metric,
                             bool allow_rejection = true) {
  EvalRecord r{std::move(key), std::move(pred), std::move(gts), type};
  const std::string p = r.prediction.value_or("");
  switch (metric) {
    case Metric::Typed:
      r.verdict = compare_typed_any(r.prediction, r.ground_truth, type, allow_rejection);
      r.score = is_correct(r.verdict) ? 1.0 : 0.0;
      return r;
    case Metric::Accuracy:
      r.verdict = compare_typed_any(r.prediction, r.ground_truth, AnswerType::String, allow_rejection);
      r.score = is_correct(r.verdict) ? 1.0 : 0.0;
      return r;
    case Metric::Anls:
      r.score = r.ground_truth.empty() ? (text::trim(p).empty() ? 1.0 : 0.0) : anls(p, r.ground_truth);
      break;
    case Metric::Em:
    case Metric::F1: {
      double best = r.ground_truth.empty() ? (text::trim(p).empty() ? 1.0 : 0.0) : 0.0;
      for (const auto& gt : r.ground_truth) {
        const auto s = em_f1(p, gt);
        best = std::max(best, metric == Metric::Em ? static_cast<double>(s.em) : s.f1);
      }
      r.score = best;
      break;
    }
  }
  r.verdict = r.score >= 1.0 ? Verdict::Correct : Verdict::Wrong;
  if (r.verdict == Verdict::Correct && detail::blank(r.prediction) && r.ground_truth.empty()) {
    r.verdict = Verdict::BothEmptyCorrect;
  }
  return r;
}

/// A scored item plus the experiment coordinates it belongs to.
struct ScoredRecord {
  std::string dataset;
  std::string doc_id;
  std::string verbalizer;
  std::string noise;
  EvalRecord record;
};

struct GroupScore {
  double score = 0.0;
  std::size_t count = 0;
};

struct Report {
  std::map<std::string, GroupScore> per_dataset;
  double mean_over_datasets = 0.0;
  std::size_t total = 0;
  /// Mean over datasets of each dataset's score for that verbalizer / noise model.
  std::map<std::string, GroupScore> per_verbalizer;
  std::map<std::string, GroupScore> per_noise;
  /// (dataset, verbalizer, noise) cells; `best` marks the top verbalizer per
  /// (dataset, noise).
  struct Cell {
    GroupScore score;
    bool best = false;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
};

/// Dataset score = mean item score; cross-dataset score = arithmetic mean of
/// dataset scores. Order-independent.
inline Report aggregate(const std::vector<ScoredRecord>& records) {
  if (records.empty()) throw EmptyEvaluation();
  struct Sum {
    double total = 0;
    std::size_t n = 0;
    void add(double v) {
      total += v;
      ++n;
    }
    GroupScore get() const { return {n ? total / static_cast<double>(n) : 0.0, n}; }
  };
  std::map<std::string, Sum> dataset;
  std::map<std::tuple<std::string, std::string, std::string>, Sum> cell;
  std::map<std::pair<std::string, std::string>, Sum> ds_verb;
  std::map<std::pair<std::string, std::string>, Sum> ds_noise;
  for (const auto& r : records) {
    dataset[r.dataset].add(r.record.score);
    cell[{r.dataset, r.verbalizer, r.noise}].add(r.record.score);
    ds_verb[{r.dataset, r.verbalizer}].add(r.record.score);
    ds_noise[{r.dataset, r.noise}].add(r.record.score);
  }

  Report rep;
  rep.total = records.size();
  double sum = 0;
  for (const auto& [name, s] : dataset) {
    rep.per_dataset[name] = s.get();
    sum += s.get().score;
  }
  rep.mean_over_datasets = sum / static_cast<double>(dataset.size());

  auto fold = [](const std::map<std::pair<std::string, std::string>, Sum>& by) {
    std::map<std::string, Sum> scores;
    std::map<std::string, std::size_t> counts;
    for (const auto& [key, s] : by) {
      scores[key.second].add(s.get().score);
      counts[key.second] += s.n;
    }
    std::map<std::string, GroupScore> out;
    for (const auto& [name, s] : scores) out[name] = {s.get().score, counts[name]};
    return out;
  };
  rep.per_verbalizer = fold(ds_verb);
  rep.per_noise = fold(ds_noise);

  std::map<std::pair<std::string, std::string>, double> best;
  for (const auto& [key, s] : cell) {
    const auto& [ds, verb, noise] = key;
    rep.cells[key].score = s.get();
    auto [it, inserted] = best.try_emplace({ds, noise}, s.get().score);
    if (!inserted) it->second = std::max(it->second, s.get().score);
  }
  for (auto& [key, c] : rep.cells) {
    const auto& [ds, verb, noise] = key;
    c.best = c.score.score == best[{ds, noise}];
  }
  return rep;
}

}  // namespace layoutprompt
