#pragma once
// Shared test helpers: box/document builders, seeded random pages, temp dirs.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "layoutprompt/core.hpp"

namespace lpt {

namespace lp = layoutprompt;
namespace fs = std::filesystem;

inline lp::TextBox box(std::string text, int l, int t, int r, int b,
                       std::optional<int> line = std::nullopt, int ri = 0) {
  return lp::TextBox{std::move(text), l, t, r, b, line, ri};
}

inline lp::Page page_of(std::vector<lp::TextBox> boxes) {
  lp::Page p;
  p.boxes = std::move(boxes);
  lp::renumber(p);
  return p;
}

inline lp::OcrDocument doc_of(std::vector<lp::TextBox> boxes, std::string id = "doc") {
  lp::OcrDocument d;
  d.doc_id = std::move(id);
  d.source = "test";
  d.pages.push_back(page_of(std::move(boxes)));
  return d;
}

/// The single-box receipt header used throughout the examples.
inline lp::OcrDocument tax_invoice() { return doc_of({box("TAX INVOICE", 100, 50, 321, 100)}); }

inline std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

/// Unique whitespace-free token; about one in five carries a two-byte
/// character so code-point counting gets exercised.
inline std::string random_word(std::mt19937_64& rng, int index) {
  static const char* letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string w;
  const auto len = draw(rng, 1, 9);
  for (int i = 0; i < len; ++i) w.push_back(letters[draw(rng, 0, 61)]);
  if (draw(rng, 0, 4) == 0) w += "\xC3\xA9";  // é
  return w + "#" + std::to_string(index);
}

struct PageShape {
  int max_boxes = 40;
  int width = 1600;
  int height = 2200;
};

/// Random page whose box widths roughly follow the text length, like real
/// OCR output, with a few overlapping and tightly packed boxes.
inline lp::Page random_page(std::mt19937_64& rng, PageShape shape = {}) {
  const auto n = draw(rng, 0, shape.max_boxes);
  std::vector<lp::TextBox> boxes;
  const int char_w = static_cast<int>(draw(rng, 6, 14));
  const int line_h = static_cast<int>(draw(rng, 12, 30));
  for (int i = 0; i < n; ++i) {
    auto text = random_word(rng, i);
    const int w = std::max<int>(1, static_cast<int>(lp::text::char_count(text)) * char_w +
                                       static_cast<int>(draw(rng, -3, 3)));
    const int h = std::max(1, line_h + static_cast<int>(draw(rng, -4, 4)));
    const int l = static_cast<int>(draw(rng, 0, shape.width - w));
    int t = static_cast<int>(draw(rng, 0, shape.height - h));
    if (i > 0 && draw(rng, 0, 2) == 0) {
      // snap to an existing line so rows with several boxes are common
      t = boxes[static_cast<std::size_t>(draw(rng, 0, i - 1))].top + static_cast<int>(draw(rng, -3, 3));
      t = std::max(0, t);
    }
    boxes.push_back(box(std::move(text), l, t, l + w, t + h));
  }
  return page_of(std::move(boxes));
}

inline lp::OcrDocument random_document(std::mt19937_64& rng, int index, PageShape shape = {}) {
  lp::OcrDocument d;
  d.doc_id = "rand-" + std::to_string(index);
  d.source = "random";
  d.pages.push_back(random_page(rng, shape));
  return d;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("lpt-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

inline std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace lpt
