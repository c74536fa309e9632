#include <gtest/gtest.h>

#include <random>

#include "layoutprompt/extract.hpp"

using namespace layoutprompt;

namespace {

AnswerSchema keys(std::vector<std::string> k) { return {std::move(k), std::nullopt}; }

}  // namespace

TEST(Extract, SingleObject) {
  const auto r = extract_answers(R"({"0": "12.50", "1": "Sunrise Mart"})", keys({"0", "1"}));
  EXPECT_EQ(r.answer("0"), "12.50");
  EXPECT_EQ(r.answer("1"), "Sunrise Mart");
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(Extract, SurroundingProse) {
  const auto r = extract_answers("Sure! Here you go:\n```json\n{\"answer\": \"x\"}\n```\nHope it helps.",
                                 keys({"answer"}));
  EXPECT_EQ(r.answer("answer"), "x");
}

TEST(Extract, HallucinatedKey) {
  const auto r = extract_answers(R"({"price_of_green_tea":"3.00"})", keys({"answer"}));
  EXPECT_FALSE(r.answer("answer"));
  ASSERT_TRUE(r.has_diagnostic("hallucinated-key"));
  EXPECT_EQ(r.diagnostics.back().detail, "price_of_green_tea");
}

TEST(Extract, NestedValue) {
  const auto r = extract_answers(R"({"price": {"green_tea": "3.00"}})", keys({"price"}));
  EXPECT_FALSE(r.answer("price"));
  EXPECT_TRUE(r.has_diagnostic("nested-value"));
  EXPECT_FALSE(extract_answers(R"({"price": ["3.00"]})", keys({"price"})).answer("price"));
}

TEST(Extract, ExtraKeysAreFineWhenNothingIsMissing) {
  const auto r = extract_answers(R"({"a": "1", "note": "n"})", keys({"a"}));
  EXPECT_EQ(r.answer("a"), "1");
  EXPECT_FALSE(r.has_diagnostic("hallucinated-key"));
}

TEST(Extract, MostAnswersWinsThenEarliest) {
  const auto r = extract_answers(R"({"a": "1"} and then {"a": "2", "b": "3"})", keys({"a", "b"}));
  EXPECT_EQ(r.answer("a"), "2");
  EXPECT_EQ(r.answer("b"), "3");
  EXPECT_TRUE(r.has_diagnostic("multiple-objects"));
  const auto tie = extract_answers(R"({"a": "first"} {"a": "second"})", keys({"a"}));
  EXPECT_EQ(tie.answer("a"), "first");
}

TEST(Extract, BracesInsideStrings) {
  const auto r = extract_answers(R"({"a": "x } y { z", "b": "\"}"})", keys({"a", "b"}));
  EXPECT_EQ(r.answer("a"), "x } y { z");
  EXPECT_EQ(r.answer("b"), "\"}");
}

TEST(Extract, NoJson) {
  const auto r = extract_answers("I cannot find the answer.", keys({"0", "1"}));
  EXPECT_FALSE(r.answer("0"));
  EXPECT_FALSE(r.answer("1"));
  EXPECT_TRUE(r.has_diagnostic("no-json"));
  EXPECT_EQ(r.answers.size(), 2u);
  EXPECT_TRUE(extract_answers("", keys({"0"})).has_diagnostic("no-json"));
  EXPECT_TRUE(extract_answers("{broken", keys({"0"})).has_diagnostic("no-json"));
}

TEST(Extract, LenientRetryOnlyWhenStrictFails) {
  const auto r = extract_answers("{'a': 'w', 'b': 'x',}", keys({"a", "b"}));
  EXPECT_TRUE(r.has_diagnostic("lenient-json"));
  EXPECT_EQ(r.answer("a"), "w");
  EXPECT_EQ(r.answer("b"), "x");
  const auto q = extract_answers(R"({'a': 'don\'t', "b": "say \"hi\"",})", keys({"a", "b"}));
  EXPECT_EQ(q.answer("a"), "don't");
  EXPECT_EQ(q.answer("b"), "say \"hi\"");
  const auto strict = extract_answers(R"({"a": "1"} {'a': '2', 'b': '3'})", keys({"a", "b"}));
  EXPECT_EQ(strict.answer("a"), "1");
  EXPECT_FALSE(strict.has_diagnostic("lenient-json"));
}

TEST(Extract, ScalarsStringify) {
  const auto r = extract_answers(R"({"i": 3, "f": 12.5, "w": 3.0, "t": true, "n": null, "neg": -2})",
                                 keys({"i", "f", "w", "t", "n", "neg"}));
  EXPECT_EQ(r.answer("i"), "3");
  EXPECT_EQ(r.answer("f"), "12.5");
  EXPECT_EQ(r.answer("w"), "3");
  EXPECT_EQ(r.answer("t"), "true");
  EXPECT_FALSE(r.answer("n"));
  EXPECT_EQ(r.answer("neg"), "-2");
}

TEST(Extract, AnswersFollowSchemaOrder) {
  const auto r = extract_answers(R"({"b": "2", "a": "1"})", keys({"a", "b", "c"}));
  ASSERT_EQ(r.answers.size(), 3u);
  EXPECT_EQ(r.answers[0].first, "a");
  EXPECT_EQ(r.answers[2].first, "c");
}

TEST(Extract, FindObjects) {
  EXPECT_EQ(find_json_objects(R"(x {"a": {"b": 1}} y {} z {bad})"),
            (std::vector<std::string>{R"({"a": {"b": 1}})", "{}"}));
}

TEST(Extract, SelectObject) {
  EXPECT_FALSE(select_object({}, {"a"}));
  const std::vector<nlohmann::json> objs{nlohmann::json::parse(R"({"x":1})"), nlohmann::json::parse(R"({"a":1})")};
  EXPECT_EQ(*select_object(objs, {"a"}), objs[1]);
  EXPECT_EQ(*select_object(objs, {"q"}), objs[0]);
}

TEST(Extract, JsonRoundTrip) {
  const auto r = extract_answers(R"({"a": "1"})", keys({"a", "b"}));
  const auto back = extraction_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.answer("a"), "1");
  EXPECT_FALSE(back.answer("b"));
  EXPECT_EQ(back.diagnostics, r.diagnostics);
  EXPECT_THROW(extraction_from_json(nlohmann::json::parse("{}")), ParseError);
}

TEST(Extract, NeverThrowsOnNoise) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "{}[]\"':,\\ab01 \n\t.-";
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const auto len = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int k = 0; k < len; ++k) {
      if (rng() % 17 == 0) {
        s.push_back(static_cast<char>(rng() & 0xFF));
      } else {
        s.push_back(alphabet[rng() % alphabet.size()]);
      }
    }
    ExtractionResult r;
    EXPECT_NO_THROW(r = extract_answers(s, keys({"a", "0"}))) << s;
    EXPECT_EQ(r.answers.size(), 2u);
  }
}
