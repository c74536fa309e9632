#pragma once
//
// Document model: OCR text boxes grouped into pages, plus the geometric
// helpers (centers, character cell size, visual rows) the verbalizers and
// noise models are built on.
//

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "layoutprompt/error.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

/// One OCR unit. Coordinates are integral pixels; left < right, top < bottom.
struct TextBox {
  std::string text;
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;
  std::optional<int> line_id;
  int reading_index = 0;

  int width() const noexcept { return right - left; }
  int height() const noexcept { return bottom - top; }

  friend bool operator==(const TextBox&, const TextBox&) = default;
};

struct Page {
  std::optional<int> width;
  std::optional<int> height;
  std::vector<TextBox> boxes;

  int extent_width() const {
    if (width) return *width;
    int w = 0;
    for (const auto& b : boxes) w = std::max(w, b.right);
    return w;
  }
  int extent_height() const {
    if (height) return *height;
    int h = 0;
    for (const auto& b : boxes) h = std::max(h, b.bottom);
    return h;
  }

  friend bool operator==(const Page&, const Page&) = default;
};

struct OcrDocument {
  std::string doc_id;
  std::vector<Page> pages;
  std::string source;
  /// Source markup for the PlainHTML control verbalizer; rarely available.
  std::optional<std::string> html;

  std::size_t box_count() const {
    std::size_t n = 0;
    for (const auto& p : pages) n += p.boxes.size();
    return n;
  }

  friend bool operator==(const OcrDocument&, const OcrDocument&) = default;
};

/// Size of one character cell in pixels. Both values are strictly positive.
struct CharMetrics {
  double char_width = 1.0;
  double char_height = 1.0;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Builds a validated box. Text is trimmed; degenerate geometry throws
/// GeometryError and blank text throws ParseError.
inline TextBox make_box(std::string_view text, int left, int top, int right, int bottom,
                        std::optional<int> line_id = std::nullopt, int reading_index = 0) {
  const auto trimmed = text::trim(text);
  if (trimmed.empty()) throw ParseError("text box has empty text");
  if (left < 0 || top < 0) {
    throw GeometryError("negative coordinate in box [" + std::to_string(left) + "," +
                        std::to_string(top) + "," + std::to_string(right) + "," +
                        std::to_string(bottom) + "]");
  }
  if (!(left < right) || !(top < bottom)) {
    throw GeometryError("degenerate box [" + std::to_string(left) + "," + std::to_string(top) +
                        "," + std::to_string(right) + "," + std::to_string(bottom) + "]");
  }
  return TextBox{std::string(trimmed), left, top, right, bottom, line_id, reading_index};
}

/// Rewrites reading_index to match vector position.
inline void renumber(Page& page) {
  for (std::size_t i = 0; i < page.boxes.size(); ++i) {
    page.boxes[i].reading_index = static_cast<int>(i);
  }
}

inline Point center(const TextBox& box) {
  // (a+b)/2 rounded half-up equals floor((a+b+1)/2) for non-negative sums.
  return Point{(box.left + box.right + 1) / 2, (box.top + box.bottom + 1) / 2};
}

namespace detail {
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}
}  // namespace detail

/// Median per-character width and median box height over every box of the
/// document.
inline CharMetrics derive_char_metrics(const OcrDocument& doc) {
  std::vector<double> widths;
  std::vector<double> heights;
  for (const auto& page : doc.pages) {
    for (const auto& b : page.boxes) {
      const auto chars = std::max<std::size_t>(1, text::char_count(b.text));
      widths.push_back(static_cast<double>(b.width()) / static_cast<double>(chars));
      heights.push_back(static_cast<double>(b.height()));
    }
  }
  if (widths.empty()) throw EmptyDocument();
  return CharMetrics{detail::median(std::move(widths)), detail::median(std::move(heights))};
}

using Row = std::vector<TextBox>;

/// Two boxes are row mates when their vertical extents overlap by at least
/// half of the shorter box's height.
inline bool same_row(const TextBox& a, const TextBox& b) {
  const int overlap = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  const int smaller = std::min(a.height(), b.height());
  return overlap > 0 && 2 * overlap >= smaller;
}

/// Partitions the page into visual rows: the transitive closure of
/// same_row. Rows are ordered by mean top, boxes within a row by left edge;
/// ties fall back to reading_index.
inline std::vector<Row> group_rows(const Page& page) {
  const std::size_t n = page.boxes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (same_row(page.boxes[i], page.boxes[j])) {
        const auto ri = find(i);
        const auto rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }

  std::vector<Row> rows;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(rows.size());
      rows.emplace_back();
    }
    rows[static_cast<std::size_t>(slot[r])].push_back(page.boxes[i]);
  }

  const auto by_left = [](const TextBox& a, const TextBox& b) {
    return std::pair(a.left, a.reading_index) < std::pair(b.left, b.reading_index);
  };
  for (auto& row : rows) std::sort(row.begin(), row.end(), by_left);

  struct Keyed {
    double mean_top;
    int first_index;
    Row row;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(rows.size());
  for (auto& row : rows) {
    double sum = 0;
    int first = row.front().reading_index;
    for (const auto& b : row) {
      sum += b.top;
      first = std::min(first, b.reading_index);
    }
    keyed.push_back({sum / static_cast<double>(row.size()), first, std::move(row)});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.mean_top != b.mean_top) return a.mean_top < b.mean_top;
    return a.first_index < b.first_index;
  });

  std::vector<Row> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.row));
  return out;
}

inline double mean_top(const Row& row) {
  double sum = 0;
  for (const auto& b : row) sum += b.top;
  return row.empty() ? 0.0 : sum / static_cast<double>(row.size());
}

}  // namespace layoutprompt
