#pragma once
//
// Noise models that degrade OCR geometry or reading order before
// verbalization.
//
// Randomness: std::mt19937_64 (its output sequence is fixed by the C++
// standard) with our own rejection-sampled integer draws, so a seed gives the
// same result on every platform. Each document derives its own sub-seed
// from (run seed, doc_id); see document_seed().
//

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "layoutprompt/core.hpp"
#include "layoutprompt/text.hpp"

namespace layoutprompt {

enum class NoiseModelId { None, Translate, Shuffle, NearestNeighbor };

inline std::string_view to_string(NoiseModelId id) {
  switch (id) {
    case NoiseModelId::None: return "NONE";
    case NoiseModelId::Translate: return "TRANSLATE";
    case NoiseModelId::Shuffle: return "SHUFFLE";
    case NoiseModelId::NearestNeighbor: return "NEAREST_NEIGHBOR";
  }
  return "?";
}

inline std::optional<NoiseModelId> parse_noise_model(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c != '_' && c != '-') key.push_back(c);
  }
  key = text::lower(key);
  if (key == "none") return NoiseModelId::None;
  if (key == "translate") return NoiseModelId::Translate;
  if (key == "shuffle") return NoiseModelId::Shuffle;
  if (key == "nearestneighbor" || key == "nn") return NoiseModelId::NearestNeighbor;
  return std::nullopt;
}

struct NoiseConfig {
  NoiseModelId model = NoiseModelId::None;
  std::uint64_t seed = 0;
  int translate_max = 20;
  std::optional<double> min_char_width;
  std::optional<double> min_char_height;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi] without modulo bias.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(engine_());  // full 64-bit range
    const auto limit = std::numeric_limits<std::uint64_t>::max() -
                       std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return lo + static_cast<std::int64_t>(draw % span);
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer over (seed, FNV-1a(doc_id)).
inline std::uint64_t document_seed(std::uint64_t run_seed, std::string_view doc_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = run_seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Page apply_none(const Page& page) { return page; }

/// Shifts each box by an independent (dx, dy) in [-max, max]. A shift that
/// would push an edge below zero is shortened so the box stops at 0.
inline Page apply_translate(const Page& page, const NoiseConfig& cfg, Rng& rng) {
  Page out = page;
  const int m = std::max(0, cfg.translate_max);
  for (auto& b : out.boxes) {
    auto dx = static_cast<int>(rng.uniform(-m, m));
    auto dy = static_cast<int>(rng.uniform(-m, m));
    dx = std::max(dx, -b.left);
    dy = std::max(dy, -b.top);
    b.left += dx;
    b.right += dx;
    b.top += dy;
    b.bottom += dy;
  }
  return out;
}

inline Page apply_translate(const Page& page, const NoiseConfig& cfg) {
  Rng rng(cfg.seed);
  return apply_translate(page, cfg, rng);
}

/// Fisher-Yates permutation of the boxes; reading_index follows the new order.
inline Page apply_shuffle(const Page& page, Rng& rng) {
  Page out = page;
  auto& boxes = out.boxes;
  for (std::size_t i = boxes.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(i - 1)));
    std::swap(boxes[i - 1], boxes[j]);
  }
  renumber(out);
  return out;
}

inline Page apply_shuffle(const Page& page, const NoiseConfig& cfg) {
  Rng rng(cfg.seed);
  return apply_shuffle(page, rng);
}

/// Greedy successor chain emulating a column-wise "natural" reading order.
///
/// From the current box, candidates are unvisited boxes that start below it
/// with a vertical gap in (0, min_char_height) and whose left edge is within
/// min_char_width of the current one. A unique candidate becomes the
/// successor; otherwise the unvisited box earliest in the original order
/// does.
inline Page apply_nearest_neighbor(const Page& page, const NoiseConfig& cfg,
                                   const CharMetrics& metrics) {
  const double max_dx = cfg.min_char_width.value_or(metrics.char_width);
  const double max_gap = cfg.min_char_height.value_or(metrics.char_height);
  const auto& in = page.boxes;
  const std::size_t n = in.size();

  std::vector<bool> visited(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::size_t next_unvisited = 0;
  auto first_unvisited = [&] {
    while (next_unvisited < n && visited[next_unvisited]) ++next_unvisited;
    return next_unvisited;
  };

  std::optional<std::size_t> current;
  while (order.size() < n) {
    std::optional<std::size_t> successor;
    if (current) {
      const auto& cur = in[*current];
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n && hits < 2; ++i) {
        if (visited[i]) continue;
        const int gap = in[i].top - cur.bottom;
        const int dx = std::abs(in[i].left - cur.left);
        if (gap > 0 && gap < max_gap && dx < max_dx) {
          ++hits;
          successor = i;
        }
      }
      if (hits != 1) successor.reset();
    }
    const std::size_t pick = successor ? *successor : first_unvisited();
    visited[pick] = true;
    order.push_back(pick);
    current = pick;
  }

  Page out = page;
  for (std::size_t i = 0; i < n; ++i) out.boxes[i] = in[order[i]];
  renumber(out);
  return out;
}

/// Applies cfg.model to every page of the document. The RNG is seeded from
/// document_seed(cfg.seed, doc.doc_id) and advances across pages.
inline OcrDocument apply_noise(const OcrDocument& doc, const NoiseConfig& cfg) {
  OcrDocument out = doc;
  if (cfg.model == NoiseModelId::None) return out;
  Rng rng(document_seed(cfg.seed, doc.doc_id));
  std::optional<CharMetrics> metrics;
  if (cfg.model == NoiseModelId::NearestNeighbor) {
    if (cfg.min_char_width && cfg.min_char_height) {
      metrics = CharMetrics{*cfg.min_char_width, *cfg.min_char_height};
    } else if (doc.box_count() > 0) {
      metrics = derive_char_metrics(doc);
    } else {
      return out;
    }
  }
  for (auto& page : out.pages) {
    switch (cfg.model) {
      case NoiseModelId::None: break;
      case NoiseModelId::Translate: page = apply_translate(page, cfg, rng); break;
      case NoiseModelId::Shuffle: page = apply_shuffle(page, rng); break;
      case NoiseModelId::NearestNeighbor: page = apply_nearest_neighbor(page, cfg, *metrics); break;
    }
  }
  return out;
}

}  // namespace layoutprompt
