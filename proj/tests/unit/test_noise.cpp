#include <gtest/gtest.h>

#include <set>

#include "layoutprompt/noise.hpp"
#include "support/fixtures.hpp"

using namespace layoutprompt;
using lpt::box;

namespace {

std::vector<std::string> texts(const Page& p) {
  std::vector<std::string> out;
  for (const auto& b : p.boxes) out.push_back(b.text);
  return out;
}

auto sorted_content(const Page& p) {
  std::vector<std::tuple<std::string, int, int, int, int>> v;
  for (const auto& b : p.boxes) v.emplace_back(b.text, b.left, b.top, b.right, b.bottom);
  std::sort(v.begin(), v.end());
  return v;
}

// Hand-rolled source of deltas for checking the translate formula.
class ScriptedTranslate {
 public:
  static Page apply(const Page& page, const std::vector<std::pair<int, int>>& deltas) {
    Page out = page;
    for (std::size_t i = 0; i < out.boxes.size(); ++i) {
      auto& b = out.boxes[i];
      const int dx = std::max(deltas[i].first, -b.left);
      const int dy = std::max(deltas[i].second, -b.top);
      b = box(b.text, b.left + dx, b.top + dy, b.right + dx, b.bottom + dy, b.line_id, b.reading_index);
    }
    return out;
  }
};

}  // namespace

TEST(NoiseNames, RoundTrip) {
  for (auto n : {NoiseModelId::None, NoiseModelId::Translate, NoiseModelId::Shuffle, NoiseModelId::NearestNeighbor}) {
    EXPECT_EQ(parse_noise_model(to_string(n)), n);
  }
  EXPECT_EQ(to_string(NoiseModelId::NearestNeighbor), "NEAREST_NEIGHBOR");
  EXPECT_EQ(parse_noise_model("shuffle"), NoiseModelId::Shuffle);
  EXPECT_FALSE(parse_noise_model("blur"));
}

TEST(None, Identity) {
  const auto p = lpt::tax_invoice().pages[0];
  EXPECT_EQ(apply_none(p), p);
  EXPECT_EQ(apply_none(Page{}), Page{});
  auto d = lpt::tax_invoice();
  EXPECT_EQ(apply_noise(d, {NoiseModelId::None, 42}), d);
}

TEST(Translate, FormulaWithGivenDeltas) {
  const auto p = lpt::page_of({box("TAX INVOICE", 100, 50, 321, 100)});
  EXPECT_EQ(ScriptedTranslate::apply(p, {{5, -3}}).boxes[0], box("TAX INVOICE", 105, 47, 326, 97));
  EXPECT_EQ(ScriptedTranslate::apply(lpt::page_of({box("a", 0, 0, 10, 10)}), {{-20, -20}}).boxes[0],
            box("a", 0, 0, 10, 10));
}

TEST(Translate, MatchesFormulaOnDrawnDeltas) {
  // replay the same RNG stream to recover the deltas and compare
  std::mt19937_64 gen(17);
  for (int i = 0; i < 100; ++i) {
    const auto page = lpt::random_page(gen);
    NoiseConfig cfg{NoiseModelId::Translate, static_cast<std::uint64_t>(i), 20};
    Rng rng(cfg.seed);
    std::vector<std::pair<int, int>> deltas;
    for (std::size_t k = 0; k < page.boxes.size(); ++k) {
      const auto dx = static_cast<int>(rng.uniform(-20, 20));
      const auto dy = static_cast<int>(rng.uniform(-20, 20));
      deltas.emplace_back(dx, dy);
    }
    EXPECT_EQ(apply_translate(page, cfg), ScriptedTranslate::apply(page, deltas));
  }
}

TEST(Translate, ZeroMaxIsIdentity) {
  std::mt19937_64 gen(1);
  const auto page = lpt::random_page(gen);
  EXPECT_EQ(apply_translate(page, {NoiseModelId::Translate, 5, 0}), page);
}

TEST(Translate, KeepsSizeBoundsAndOrder) {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 100; ++i) {
    const auto page = lpt::random_page(gen);
    const auto out = apply_translate(page, {NoiseModelId::Translate, static_cast<std::uint64_t>(i), 20});
    ASSERT_EQ(out.boxes.size(), page.boxes.size());
    for (std::size_t k = 0; k < page.boxes.size(); ++k) {
      const auto& a = page.boxes[k];
      const auto& b = out.boxes[k];
      EXPECT_EQ(a.text, b.text);
      EXPECT_EQ(a.width(), b.width());
      EXPECT_EQ(a.height(), b.height());
      EXPECT_LE(std::abs(b.left - a.left), 20);
      EXPECT_LE(std::abs(b.top - a.top), 20);
      EXPECT_GE(b.left, 0);
      EXPECT_GE(b.top, 0);
    }
  }
}

TEST(Translate, UsesTheWholeRange) {
  std::set<int> seen;
  const auto page = lpt::page_of({box("a", 100, 100, 110, 110)});
  for (std::uint64_t s = 0; s < 2000; ++s) seen.insert(apply_translate(page, {NoiseModelId::Translate, s, 3}).boxes[0].left - 100);
  EXPECT_EQ(seen, (std::set<int>{-3, -2, -1, 0, 1, 2, 3}));
}

TEST(Shuffle, SingleBoxUnchanged) {
  const auto p = lpt::tax_invoice().pages[0];
  EXPECT_EQ(apply_shuffle(p, {NoiseModelId::Shuffle, 9}), p);
}

TEST(Shuffle, DeterministicPermutation) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    const auto page = lpt::random_page(gen);
    const NoiseConfig cfg{NoiseModelId::Shuffle, static_cast<std::uint64_t>(i)};
    const auto a = apply_shuffle(page, cfg);
    EXPECT_EQ(a, apply_shuffle(page, cfg));
    EXPECT_EQ(sorted_content(a), sorted_content(page));
    for (std::size_t k = 0; k < a.boxes.size(); ++k) EXPECT_EQ(a.boxes[k].reading_index, static_cast<int>(k));
  }
}

TEST(Shuffle, RoughlyUniformOverThreeBoxes) {
  const auto page = lpt::page_of({box("a", 0, 0, 1, 1), box("b", 2, 0, 3, 1), box("c", 4, 0, 5, 1)});
  std::map<std::vector<std::string>, int> counts;
  const int n = 6000;
  for (int s = 0; s < n; ++s) ++counts[texts(apply_shuffle(page, {NoiseModelId::Shuffle, static_cast<std::uint64_t>(s)}))];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c, n / 6, n / 6 * 0.15);
}

TEST(NearestNeighbor, TwoByTwoReadsColumnWise) {
  // 30 px row pitch with 20 px high cells (gap 10), 200 px column pitch
  const auto page = lpt::page_of({box("A", 0, 0, 100, 20), box("B", 200, 0, 300, 20), box("C", 0, 30, 100, 50),
                                  box("D", 200, 30, 300, 50)});
  const CharMetrics m{10, 20};
  const auto out = apply_nearest_neighbor(page, {NoiseModelId::NearestNeighbor}, m);
  EXPECT_EQ(texts(out), (std::vector<std::string>{"A", "C", "B", "D"}));
  for (std::size_t k = 0; k < out.boxes.size(); ++k) EXPECT_EQ(out.boxes[k].reading_index, static_cast<int>(k));
}

TEST(NearestNeighbor, FarApartKeepsOrder) {
  const auto page = lpt::page_of({box("A", 0, 0, 10, 10), box("B", 500, 300, 510, 310), box("C", 0, 900, 10, 910)});
  EXPECT_EQ(texts(apply_nearest_neighbor(page, {NoiseModelId::NearestNeighbor}, {10, 10})),
            (std::vector<std::string>{"A", "B", "C"}));
}

TEST(NearestNeighbor, AmbiguousCandidatesFallBackToOriginalOrder) {
  // two boxes directly below A within thresholds: no unique successor
  const auto page = lpt::page_of({box("A", 0, 0, 10, 10), box("X", 100, 100, 110, 110), box("B", 0, 15, 10, 25),
                                  box("C", 3, 16, 13, 26)});
  EXPECT_EQ(texts(apply_nearest_neighbor(page, {NoiseModelId::NearestNeighbor}, {10, 10})),
            (std::vector<std::string>{"A", "X", "B", "C"}));
}

TEST(NearestNeighbor, ConfigOverridesWin) {
  const auto page = lpt::page_of({box("A", 0, 0, 100, 20), box("B", 200, 0, 300, 20), box("C", 0, 30, 100, 50)});
  // gap 10 is not under a height threshold of 5
  NoiseConfig cfg{NoiseModelId::NearestNeighbor, 0, 20, 10.0, 5.0};
  EXPECT_EQ(texts(apply_nearest_neighbor(page, cfg, {10, 20})), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(NearestNeighbor, SingleBoxAndPermutation) {
  const auto p = lpt::tax_invoice().pages[0];
  EXPECT_EQ(apply_nearest_neighbor(p, {}, {10, 10}), p);
  std::mt19937_64 gen(21);
  for (int i = 0; i < 100; ++i) {
    const auto page = lpt::random_page(gen);
    EXPECT_EQ(sorted_content(apply_nearest_neighbor(page, {}, {12, 25})), sorted_content(page));
  }
}

TEST(ApplyNoise, DocumentSeedDependsOnDocId) {
  std::vector<TextBox> boxes;
  for (int i = 0; i < 20; ++i) boxes.push_back(box("w" + std::to_string(i), i * 20, 0, i * 20 + 10, 10));
  auto d1 = lpt::doc_of(boxes, "one");
  auto d2 = d1;
  d2.doc_id = "other";
  const NoiseConfig cfg{NoiseModelId::Shuffle, 7};
  const auto a = apply_noise(d1, cfg);
  EXPECT_EQ(a, apply_noise(d1, cfg));
  EXPECT_NE(a.pages[0], apply_noise(d2, cfg).pages[0]);
  EXPECT_NE(document_seed(7, "a"), document_seed(7, "b"));
  EXPECT_NE(document_seed(7, "a"), document_seed(8, "a"));
}

TEST(ApplyNoise, EmptyDocumentsPassThrough) {
  OcrDocument d;
  d.doc_id = "empty";
  d.pages.emplace_back();
  for (auto n : {NoiseModelId::Translate, NoiseModelId::Shuffle, NoiseModelId::NearestNeighbor}) {
    EXPECT_EQ(apply_noise(d, {n, 1}), d);
  }
}

TEST(Rng, UniformBoundsAndDeterminism) {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform(-5, 5);
    EXPECT_EQ(x, b.uniform(-5, 5));
    EXPECT_GE(x, -5);
    EXPECT_LE(x, 5);
  }
  EXPECT_EQ(Rng(1).uniform(4, 4), 4);
}
