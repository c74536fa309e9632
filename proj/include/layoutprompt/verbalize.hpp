#pragma once
//
// Verbalizers: OCR document -> prompt-ready text.
//
// Coordinate verbalizers (BoundingBox, BoundingBoxMarkup, CenterPoint) emit
// one record per box in reading order. SpatialFormat lays texts out on a
// character grid; SpatialFormatY keeps only the vertical spacing.
//
// Grid rules, per page:
//   - rows come from group_rows; consecutive rows are separated by
//     clamp(round(dTop / char_height), 1, 4) newlines, dTop being the
//     difference of the rows' mean tops;
//   - a box starts at column round(min_left / char_width) +
//     round((left - min_left) / char_width), min_left taken over the page;
//   - when that column is not past the cursor, a single space separates the
//     texts instead.
// Non-empty pages are joined by one empty line.
//

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/core.hpp"
#include "layoutprompt/error.hpp"
#include "layoutprompt/ingest.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

enum class VerbalizerId {
  PlainText,
  BoundingBox,
  BoundingBoxMarkup,
  CenterPoint,
  SpatialFormat,
  SpatialFormatY,
  PlainHTML,
};

inline constexpr std::array<VerbalizerId, 7> kAllVerbalizers = {
    VerbalizerId::PlainText,     VerbalizerId::BoundingBox,    VerbalizerId::BoundingBoxMarkup,
    VerbalizerId::CenterPoint,   VerbalizerId::SpatialFormat,  VerbalizerId::SpatialFormatY,
    VerbalizerId::PlainHTML,
};

inline std::string_view to_string(VerbalizerId id) {
  switch (id) {
    case VerbalizerId::PlainText: return "PlainText";
    case VerbalizerId::BoundingBox: return "BoundingBox";
    case VerbalizerId::BoundingBoxMarkup: return "BoundingBoxMarkup";
    case VerbalizerId::CenterPoint: return "CenterPoint";
    case VerbalizerId::SpatialFormat: return "SpatialFormat";
    case VerbalizerId::SpatialFormatY: return "SpatialFormatY";
    case VerbalizerId::PlainHTML: return "PlainHTML";
  }
  return "?";
}

/// Case-insensitive; underscores and dashes are ignored ("spatial_format_y").
inline std::optional<VerbalizerId> parse_verbalizer(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c != '_' && c != '-') key.push_back(c);
  }
  key = text::lower(key);
  for (auto id : kAllVerbalizers) {
    if (text::lower(to_string(id)) == key) return id;
  }
  return std::nullopt;
}

struct Verbalization {
  VerbalizerId verbalizer = VerbalizerId::PlainText;
  std::string text;
  std::string format_description;
};

/// Per-verbalizer format descriptions inserted by prompt pattern B.
class FormatDescriptions {
 public:
  static constexpr std::string_view kVersion = "1";

  FormatDescriptions()
      : text_{
            "The document is given as plain text; lines appear in reading order.",
            "The document is given as a list of text boxes, one per line, in reading order. "
            "Each line has the form left:<L> top:<T> right:<R> bottom:<B> text:'<TEXT>', where "
            "left, top, right and bottom are the pixel coordinates of the box edges measured from "
            "the top-left corner of the page.",
            "The document is given as a list of text boxes, one per line, in reading order. "
            "Each line starts with a markup tag <box left=<L> top=<T> right=<R> bottom=<B>/> "
            "holding the pixel coordinates of the box edges, followed by the text of the box.",
            "The document is given as a list of text boxes, one per line, in reading order. "
            "Each line starts with a markup tag <box x=<X> y=<Y>/> holding the pixel coordinates "
            "of the box center, followed by the text of the box.",
            "The document text is placed on a character grid: whitespace reflects the spatial "
            "layout of the page, so texts aligned in the document are aligned in the text and "
            "blank lines stand for vertical space.",
            "The document text is given line by line from top to bottom; the number of newlines "
            "between lines reflects their vertical distance on the page, horizontal positions "
            "are not encoded.",
            "The document is given as its HTML source.",
        } {}

  const std::string& get(VerbalizerId id) const { return text_[static_cast<std::size_t>(id)]; }
  void set(VerbalizerId id, std::string description) {
    text_[static_cast<std::size_t>(id)] = std::move(description);
  }

  /// Overrides from a JSON object {"SpatialFormat": "...", ...}.
  void merge(const nlohmann::json& overrides) {
    if (!overrides.is_object()) throw ParseError("format descriptions must be an object");
    for (const auto& [name, value] : overrides.items()) {
      const auto id = parse_verbalizer(name);
      if (!id) throw ParseError("unknown verbalizer '" + name + "'", "format_descriptions");
      if (!value.is_string()) throw ParseError("description must be a string", name);
      set(*id, value.get<std::string>());
    }
  }

 private:
  std::array<std::string, 7> text_;
};

inline const std::string& format_description(VerbalizerId id) {
  static const FormatDescriptions defaults;
  return defaults.get(id);
}

struct VerbalizeOptions {
  /// Grid cell override; derived from the document when absent.
  std::optional<CharMetrics> metrics;
  FormatDescriptions descriptions;
};

namespace detail {

inline std::string join_blocks(const std::vector<std::string>& blocks, std::string_view sep) {
  std::vector<std::string> non_empty;
  for (const auto& b : blocks) {
    if (!b.empty()) non_empty.push_back(b);
  }
  return text::join(non_empty, sep);
}

template <typename Fn>
std::string per_box(const OcrDocument& doc, Fn&& record) {
  std::vector<std::string> lines;
  for (const auto& page : doc.pages) {
    for (const auto& b : page.boxes) lines.push_back(record(b));
  }
  return text::join(lines, "\n");
}

inline int newlines_between(double top_delta, double char_height) {
  const auto n = text::round_half_up(top_delta / char_height);
  return static_cast<int>(std::clamp<std::int64_t>(n, 1, 4));
}

inline std::string spatial_page(const Page& page, const CharMetrics& m, bool horizontal) {
  if (page.boxes.empty()) return {};
  const auto rows = group_rows(page);
  int min_left = page.boxes.front().left;
  for (const auto& b : page.boxes) min_left = std::min(min_left, b.left);
  const auto origin = text::round_half_up(min_left / m.char_width);

  std::string out;
  double previous_top = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double top = mean_top(rows[r]);
    if (r > 0) out.append(static_cast<std::size_t>(newlines_between(top - previous_top, m.char_height)), '\n');
    previous_top = top;

    std::int64_t cursor = 0;
    for (const auto& b : rows[r]) {
      if (horizontal) {
        const auto column = origin + text::round_half_up((b.left - min_left) / m.char_width);
        if (column > cursor) {
          out.append(static_cast<std::size_t>(column - cursor), ' ');
          cursor = column;
        } else if (cursor > 0) {
          out.push_back(' ');
          ++cursor;
        }
      } else if (cursor > 0) {
        out.push_back(' ');
        ++cursor;
      }
      out.append(b.text);
      cursor += static_cast<std::int64_t>(text::char_count(b.text));
    }
  }
  return out;
}

inline std::string spatial(const OcrDocument& doc, const std::optional<CharMetrics>& override,
                           bool horizontal) {
  if (doc.box_count() == 0) return {};
  const CharMetrics m = override ? *override : derive_char_metrics(doc);
  std::vector<std::string> pages;
  for (const auto& page : doc.pages) pages.push_back(spatial_page(page, m, horizontal));
  return join_blocks(pages, "\n\n");
}

}  // namespace detail

inline Verbalization verbalize_plain_text(const OcrDocument& doc,
                                          const VerbalizeOptions& opts = {}) {
  std::vector<std::string> pages;
  for (const auto& page : doc.pages) pages.push_back(text::join(page_lines(page), "\n"));
  return {VerbalizerId::PlainText, detail::join_blocks(pages, "\n"),
          opts.descriptions.get(VerbalizerId::PlainText)};
}

inline Verbalization verbalize_bounding_box(const OcrDocument& doc,
                                            const VerbalizeOptions& opts = {}) {
  auto text = detail::per_box(doc, [](const TextBox& b) {
    return "left:" + std::to_string(b.left) + " top:" + std::to_string(b.top) +
           " right:" + std::to_string(b.right) + " bottom:" + std::to_string(b.bottom) +
           " text:'" + b.text + "'";
  });
  return {VerbalizerId::BoundingBox, std::move(text),
          opts.descriptions.get(VerbalizerId::BoundingBox)};
}

inline Verbalization verbalize_bounding_box_markup(const OcrDocument& doc,
                                                   const VerbalizeOptions& opts = {}) {
  auto text = detail::per_box(doc, [](const TextBox& b) {
    return "<box left=" + std::to_string(b.left) + " top=" + std::to_string(b.top) +
           " right=" + std::to_string(b.right) + " bottom=" + std::to_string(b.bottom) + "/> " +
           b.text;
  });
  return {VerbalizerId::BoundingBoxMarkup, std::move(text),
          opts.descriptions.get(VerbalizerId::BoundingBoxMarkup)};
}

inline Verbalization verbalize_center_point(const OcrDocument& doc,
                                            const VerbalizeOptions& opts = {}) {
  auto text = detail::per_box(doc, [](const TextBox& b) {
    const auto c = center(b);
    return "<box x=" + std::to_string(c.x) + " y=" + std::to_string(c.y) + "/> " + b.text;
  });
  return {VerbalizerId::CenterPoint, std::move(text),
          opts.descriptions.get(VerbalizerId::CenterPoint)};
}

inline Verbalization verbalize_spatial_format(const OcrDocument& doc,
                                              const VerbalizeOptions& opts = {}) {
  return {VerbalizerId::SpatialFormat, detail::spatial(doc, opts.metrics, true),
          opts.descriptions.get(VerbalizerId::SpatialFormat)};
}

inline Verbalization verbalize_spatial_format_y(const OcrDocument& doc,
                                                const VerbalizeOptions& opts = {}) {
  return {VerbalizerId::SpatialFormatY, detail::spatial(doc, opts.metrics, false),
          opts.descriptions.get(VerbalizerId::SpatialFormatY)};
}

inline Verbalization verbalize_plain_html(std::string html, const VerbalizeOptions& opts = {}) {
  return {VerbalizerId::PlainHTML, std::move(html), opts.descriptions.get(VerbalizerId::PlainHTML)};
}

/// Dispatches on `id`. PlainHTML needs `doc.html` and throws MissingHtml
/// without it.
inline Verbalization verbalize(const OcrDocument& doc, VerbalizerId id,
                               const VerbalizeOptions& opts = {}) {
  switch (id) {
    case VerbalizerId::PlainText: return verbalize_plain_text(doc, opts);
    case VerbalizerId::BoundingBox: return verbalize_bounding_box(doc, opts);
    case VerbalizerId::BoundingBoxMarkup: return verbalize_bounding_box_markup(doc, opts);
    case VerbalizerId::CenterPoint: return verbalize_center_point(doc, opts);
    case VerbalizerId::SpatialFormat: return verbalize_spatial_format(doc, opts);
    case VerbalizerId::SpatialFormatY: return verbalize_spatial_format_y(doc, opts);
    case VerbalizerId::PlainHTML:
      if (!doc.html) throw MissingHtml(doc.doc_id);
      return verbalize_plain_html(*doc.html, opts);
  }
  throw Error("unknown verbalizer");
}

}  // namespace layoutprompt
