#pragma once
//
// OCR file adapters.
//
// Canonical interchange format (UTF-8 JSON, unknown fields ignored):
//
//   { "doc_id": "X51005",
//     "html": "<optional source markup>",
//     "pages": [ { "width": 600, "height": 800,
//                  "words": [ { "text": "TAX INVOICE",
//                               "box": [100, 50, 321, 100],
//                               "line_id": 0 } ] } ] }
//
// width, height, line_id and html are optional. Word order defines the
// reading order. Real-valued coordinates are rounded half-up.
//
// DUE adapter: reads the benchmark's `common_format` OCR layer
// (tokens + positions + page/line token ranges) and joins the words of
// each (page, line) into one box.
//

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/core.hpp"
#include "layoutprompt/error.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json_text(const std::string& data, const std::string& what) {
  try {
    return nlohmann::json::parse(data);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), what);
  }
}

inline int coordinate(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError("coordinate is not a number", where);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError("coordinate is not finite", where);
  return static_cast<int>(text::round_half_up(d));
}

inline std::optional<int> optional_int(const nlohmann::json& obj, const char* key,
                                       const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("'") + key + "' is not a number", where);
  return coordinate(*it, where + "." + key);
}

struct RawBox {
  int left, top, right, bottom;
};

inline RawBox box_array(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) throw ParseError("box must be an array of 4 numbers", where);
  return RawBox{coordinate(v[0], where + "[0]"), coordinate(v[1], where + "[1]"),
                coordinate(v[2], where + "[2]"), coordinate(v[3], where + "[3]")};
}

}  // namespace detail

/// Parses a CanonicalOcrFile already decoded as JSON.
inline OcrDocument parse_canonical(const nlohmann::json& root) {
  if (!root.is_object()) throw ParseError("top level must be an object", "$");
  OcrDocument doc;
  doc.source = "canonical";
  const auto id = root.find("doc_id");
  if (id == root.end() || !id->is_string()) throw ParseError("missing string 'doc_id'", "$");
  doc.doc_id = id->get<std::string>();
  if (const auto html = root.find("html"); html != root.end() && !html->is_null()) {
    if (!html->is_string()) throw ParseError("'html' must be a string", "$.html");
    doc.html = html->get<std::string>();
  }

  const auto pages = root.find("pages");
  if (pages == root.end() || !pages->is_array()) throw ParseError("missing array 'pages'", "$");
  if (pages->empty()) throw ParseError("document needs at least one page", "$.pages");

  for (std::size_t p = 0; p < pages->size(); ++p) {
    const auto& pj = (*pages)[p];
    const std::string pwhere = "$.pages[" + std::to_string(p) + "]";
    if (!pj.is_object()) throw ParseError("page must be an object", pwhere);
    Page page;
    page.width = detail::optional_int(pj, "width", pwhere);
    page.height = detail::optional_int(pj, "height", pwhere);
    const auto words = pj.find("words");
    if (words == pj.end() || !words->is_array()) throw ParseError("missing array 'words'", pwhere);

    for (std::size_t w = 0; w < words->size(); ++w) {
      const auto& wj = (*words)[w];
      const std::string wwhere = pwhere + ".words[" + std::to_string(w) + "]";
      if (!wj.is_object()) throw ParseError("word must be an object", wwhere);
      const auto t = wj.find("text");
      if (t == wj.end() || !t->is_string()) throw ParseError("missing string 'text'", wwhere);
      const auto b = wj.find("box");
      if (b == wj.end()) throw ParseError("missing 'box'", wwhere);
      const auto raw = detail::box_array(*b, wwhere + ".box");
      const auto line = detail::optional_int(wj, "line_id", wwhere);
      try {
        page.boxes.push_back(make_box(t->get<std::string>(), raw.left, raw.top, raw.right,
                                      raw.bottom, line, static_cast<int>(page.boxes.size())));
      } catch (const GeometryError& e) {
        throw GeometryError(wwhere + ": " + e.what());
      } catch (const ParseError& e) {
        throw ParseError(e.what(), wwhere);
      }
      const auto& added = page.boxes.back();
      if ((page.width && added.right > *page.width) ||
          (page.height && added.bottom > *page.height)) {
        throw GeometryError(wwhere + ": box exceeds the page extent");
      }
    }
    doc.pages.push_back(std::move(page));
  }
  return doc;
}

inline OcrDocument load_canonical(const std::filesystem::path& path) {
  return parse_canonical(detail::parse_json_text(detail::read_file(path), path.string()));
}

inline nlohmann::ordered_json to_canonical_json(const OcrDocument& doc) {
  nlohmann::ordered_json root;
  root["doc_id"] = doc.doc_id;
  if (doc.html) root["html"] = *doc.html;
  auto pages = nlohmann::ordered_json::array();
  for (const auto& page : doc.pages) {
    nlohmann::ordered_json pj;
    if (page.width) pj["width"] = *page.width;
    if (page.height) pj["height"] = *page.height;
    auto words = nlohmann::ordered_json::array();
    for (const auto& b : page.boxes) {
      nlohmann::ordered_json wj;
      wj["text"] = b.text;
      wj["box"] = {b.left, b.top, b.right, b.bottom};
      if (b.line_id) wj["line_id"] = *b.line_id;
      words.push_back(std::move(wj));
    }
    pj["words"] = std::move(words);
    pages.push_back(std::move(pj));
  }
  root["pages"] = std::move(pages);
  return root;
}

inline void save_canonical(const OcrDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_canonical_json(doc).dump(2) << '\n';
}

namespace detail {

inline const nlohmann::json& due_ocr_layer(const nlohmann::json& root) {
  const auto contents = root.find("contents");
  if (contents == root.end() || !contents->is_array() || contents->empty()) {
    throw ParseError("missing array 'contents'", "$");
  }
  // microsoft_cv preferred, tesseract as fallback, otherwise the first layer
  // that carries OCR geometry.
  for (const char* tool : {"microsoft_cv", "tesseract"}) {
    for (const auto& c : *contents) {
      if (c.is_object() && c.value("tool_name", "") == tool && c.contains("common_format")) {
        return c;
      }
    }
  }
  for (const auto& c : *contents) {
    if (c.is_object() && c.contains("common_format")) return c;
  }
  throw ParseError("no content layer with 'common_format'", "$.contents");
}

/// Returns for every token the index of the [start, end) range containing
/// it, or -1.
inline std::vector<int> range_membership(const nlohmann::json& structure, std::size_t n_tokens,
                                         const std::string& where) {
  std::vector<int> owner(n_tokens, -1);
  if (!structure.is_array()) throw ParseError("'structure' must be an array", where);
  for (std::size_t r = 0; r < structure.size(); ++r) {
    const auto& range = structure[r];
    const std::string rwhere = where + "[" + std::to_string(r) + "]";
    if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() ||
        !range[1].is_number_integer()) {
      throw ParseError("range must be [start, end]", rwhere);
    }
    const auto start = range[0].get<long long>();
    const auto end = range[1].get<long long>();
    if (start < 0 || end < start || static_cast<std::size_t>(end) > n_tokens) {
      throw ParseError("range out of bounds", rwhere);
    }
    for (auto t = start; t < end; ++t) owner[static_cast<std::size_t>(t)] = static_cast<int>(r);
  }
  return owner;
}

}  // namespace detail

/// Converts one DUE document record. Words sharing a (page, line) index are
/// joined with single spaces into a box covering the union of their boxes.
inline OcrDocument parse_due(const nlohmann::json& root) {
  if (!root.is_object()) throw ParseError("top level must be an object", "$");
  OcrDocument doc;
  doc.source = "due";
  doc.doc_id = root.value("name", "");
  if (doc.doc_id.empty()) throw ParseError("missing string 'name'", "$");

  const auto& layer = detail::due_ocr_layer(root);
  const auto& cf = layer.at("common_format");
  const std::string where = "$.contents[" + layer.value("tool_name", std::string("?")) +
                            "].common_format";
  if (!cf.contains("tokens") || !cf["tokens"].is_array()) {
    throw ParseError("missing array 'tokens'", where);
  }
  if (!cf.contains("positions") || !cf["positions"].is_array()) {
    throw ParseError("missing array 'positions'", where);
  }
  const auto& tokens = cf["tokens"];
  const auto& positions = cf["positions"];
  if (tokens.size() != positions.size()) {
    throw ParseError("'tokens' and 'positions' differ in length", where);
  }
  const std::size_t n = tokens.size();

  const auto structures = cf.find("structures");
  const nlohmann::json empty = nlohmann::json::object();
  const auto& st = structures != cf.end() ? *structures : empty;

  std::vector<int> page_of(n, 0);
  std::vector<std::optional<Page>> page_shells;
  if (st.contains("pages")) {
    const auto& pages = st["pages"];
    page_of = detail::range_membership(pages.at("structure"), n, where + ".structures.pages");
    const auto n_pages = pages.at("structure").size();
    page_shells.resize(n_pages);
    for (std::size_t p = 0; p < n_pages; ++p) {
      Page shell;
      if (pages.contains("positions") && p < pages["positions"].size()) {
        const auto box = detail::box_array(pages["positions"][p],
                                           where + ".structures.pages.positions[" +
                                               std::to_string(p) + "]");
        shell.width = box.right;
        shell.height = box.bottom;
      }
      page_shells[p] = shell;
    }
  } else {
    page_shells.resize(1, Page{});
  }
  std::vector<int> line_of(n, -1);
  if (st.contains("lines")) {
    line_of = detail::range_membership(st["lines"].at("structure"), n, where + ".structures.lines");
  }

  // (page, line) -> accumulated box; solitary tokens use line -1 and are
  // keyed by token index to stay separate.
  struct Acc {
    std::vector<std::string> words;
    detail::RawBox box;
    std::optional<int> line_id;
    std::size_t first_token;
  };
  std::vector<std::map<std::pair<long long, long long>, Acc>> per_page(page_shells.size());

  for (std::size_t t = 0; t < n; ++t) {
    const std::string twhere = where + ".tokens[" + std::to_string(t) + "]";
    if (!tokens[t].is_string()) throw ParseError("token is not a string", twhere);
    const std::string word(text::trim(tokens[t].get<std::string>()));
    if (word.empty()) continue;
    if (page_of[t] < 0) throw ParseError("token not covered by any page", twhere);
    const auto raw = detail::box_array(positions[t], where + ".positions[" + std::to_string(t) + "]");
    const auto line = line_of[t];
    const std::pair<long long, long long> key =
        line >= 0 ? std::pair<long long, long long>(line, -1)
                  : std::pair<long long, long long>(-1, static_cast<long long>(t));
    auto& bucket = per_page[static_cast<std::size_t>(page_of[t])];
    auto it = bucket.find(key);
    if (it == bucket.end()) {
      bucket.emplace(key, Acc{{word}, raw, line >= 0 ? std::optional<int>(line) : std::nullopt, t});
    } else {
      auto& acc = it->second;
      acc.words.push_back(word);
      acc.box.left = std::min(acc.box.left, raw.left);
      acc.box.top = std::min(acc.box.top, raw.top);
      acc.box.right = std::max(acc.box.right, raw.right);
      acc.box.bottom = std::max(acc.box.bottom, raw.bottom);
    }
  }

  for (std::size_t p = 0; p < page_shells.size(); ++p) {
    Page page = page_shells[p].value_or(Page{});
    std::vector<const Acc*> ordered;
    for (const auto& [key, acc] : per_page[p]) ordered.push_back(&acc);
    // Line order; solitary tokens slot in by their position in the token stream.
    std::sort(ordered.begin(), ordered.end(),
              [](const Acc* a, const Acc* b) { return a->first_token < b->first_token; });
    for (const Acc* acc : ordered) {
      try {
        page.boxes.push_back(make_box(text::join(acc->words, " "), acc->box.left, acc->box.top,
                                      acc->box.right, acc->box.bottom, acc->line_id,
                                      static_cast<int>(page.boxes.size())));
      } catch (const Error& e) {
        throw GeometryError(where + ": page " + std::to_string(p) + ": " + e.what());
      }
    }
    doc.pages.push_back(std::move(page));
  }
  return doc;
}

/// Reads every record of a DUE OCR file: a single JSON object or JSON Lines.
inline std::vector<OcrDocument> load_due_all(const std::filesystem::path& path) {
  const auto data = detail::read_file(path);
  std::vector<OcrDocument> docs;
  try {
    const auto root = nlohmann::json::parse(data);
    docs.push_back(parse_due(root));
    return docs;
  } catch (const nlohmann::json::parse_error&) {
    // fall through to JSON Lines
  }
  std::istringstream lines(data);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      docs.push_back(parse_due(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(),
                       path.string() + ":" + std::to_string(lineno));
    }
  }
  if (docs.empty()) throw ParseError("no DUE records", path.string());
  return docs;
}

inline OcrDocument load_due(const std::filesystem::path& path) { return load_due_all(path).front(); }

enum class InputFormat { Auto, Canonical, Due };

/// Loads either format; Auto inspects the top-level keys.
inline OcrDocument load_document(const std::filesystem::path& path,
                                 InputFormat format = InputFormat::Auto) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  if (format == InputFormat::Canonical) return load_canonical(path);
  if (format == InputFormat::Due) return load_due(path);
  const auto data = detail::read_file(path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(data);
  } catch (const nlohmann::json::parse_error&) {
    return load_due(path);  // maybe JSON Lines
  }
  if (root.is_object() && root.contains("contents")) return parse_due(root);
  return parse_canonical(root);
}

/// Text lines of one page. When every box carries a line_id the OCR lines are
/// used (ordered by first appearance, words by reading order); otherwise
/// visual rows from group_rows stand in.
inline std::vector<std::string> page_lines(const Page& page) {
  std::vector<std::string> out;
  if (page.boxes.empty()) return out;
  const bool all_lined = std::all_of(page.boxes.begin(), page.boxes.end(),
                                     [](const TextBox& b) { return b.line_id.has_value(); });
  if (all_lined) {
    std::vector<TextBox> sorted = page.boxes;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TextBox& a, const TextBox& b) {
      return a.reading_index < b.reading_index;
    });
    std::vector<int> order;
    std::map<int, std::vector<std::string>> words;
    for (const auto& b : sorted) {
      auto& slot = words[*b.line_id];
      if (slot.empty()) order.push_back(*b.line_id);
      slot.push_back(b.text);
    }
    for (int id : order) out.push_back(text::join(words[id], " "));
    return out;
  }
  for (const auto& row : group_rows(page)) {
    std::vector<std::string> words;
    for (const auto& b : row) words.push_back(b.text);
    out.push_back(text::join(words, " "));
  }
  return out;
}

/// All lines of the document, page after page.
inline std::vector<std::string> load_lines_fallback(const OcrDocument& doc) {
  std::vector<std::string> out;
  for (const auto& page : doc.pages) {
    auto lines = page_lines(page);
    out.insert(out.end(), std::make_move_iterator(lines.begin()),
               std::make_move_iterator(lines.end()));
  }
  return out;
}

}  // namespace layoutprompt
