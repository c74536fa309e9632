#include <gtest/gtest.h>

#include "layoutprompt/prompt.hpp"
#include "support/fixtures.hpp"

using namespace layoutprompt;
using lpt::box;

namespace layoutprompt {
void PrintTo(TaskKind k, std::ostream* os) { *os << to_string(k); }
void PrintTo(PromptPattern p, std::ostream* os) { *os << to_string(p); }
}  // namespace layoutprompt

namespace {

OcrDocument receipt_header() {
  return lpt::doc_of({box("TAX INVOICE", 100, 50, 321, 100, 0), box("SUNRISE MART", 100, 120, 330, 160, 1),
                      box("TOTAL RM 12.50", 100, 180, 360, 220, 2)});
}

TaskRequest golden_task(TaskKind kind) {
  switch (kind) {
    case TaskKind::QA:
      return {kind, {"What is the total amount?", "What is the name of the store?", "What is the invoice date?"}, {}};
    case TaskKind::NLI:
      return {kind, {"The total amount is 12.50.", "The store is a bakery."}, {}};
    case TaskKind::KIE:
      return {kind, {"company", "date"}, {}};
  }
  return {};
}

std::string golden(TaskKind kind, PromptPattern p) {
  return lpt::slurp(std::filesystem::path(LPT_GOLDEN_DIR) / PromptTemplates::file_name(kind, p));
}

// true when every line of `a` appears in `b` in the same order
bool line_subsequence(const std::string& a, const std::string& b) {
  const auto la = lpt::lines_of(a);
  const auto lb = lpt::lines_of(b);
  std::size_t j = 0;
  for (const auto& line : la) {
    while (j < lb.size() && lb[j] != line) ++j;
    if (j == lb.size()) return false;
    ++j;
  }
  return true;
}

}  // namespace

class Golden : public ::testing::TestWithParam<std::tuple<TaskKind, PromptPattern>> {};

TEST_P(Golden, MatchesCheckedInFile) {
  const auto [kind, pattern] = GetParam();
  const auto v = verbalize(receipt_header(), VerbalizerId::PlainText);
  EXPECT_EQ(render_prompt(v, golden_task(kind), pattern), golden(kind, pattern));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, Golden,
                         ::testing::Combine(::testing::Values(TaskKind::QA, TaskKind::NLI, TaskKind::KIE),
                                            ::testing::Values(PromptPattern::A, PromptPattern::B)),
                         [](const auto& info) {
                           auto name = PromptTemplates::file_name(std::get<0>(info.param), std::get<1>(info.param));
                           return name.substr(0, name.find('.'));
                         });

TEST(Templates, ShippedFilesEqualBuiltIns) {
  const auto dir = std::filesystem::path(LPT_SOURCE_DIR) / "data" / "templates";
  const PromptTemplates builtin;
  for (auto k : {TaskKind::QA, TaskKind::NLI, TaskKind::KIE}) {
    for (auto p : {PromptPattern::A, PromptPattern::B}) {
      EXPECT_EQ(lpt::slurp(dir / PromptTemplates::file_name(k, p)), builtin.get(k, p))
          << PromptTemplates::file_name(k, p);
    }
  }
}

TEST(Templates, DirectoryOverridesAndDerivesPatternA) {
  lpt::TempDir dir;
  lpt::spit(dir / "qa_b.txt", "<<<CONTENT>>>\n--\n<<<QUESTION>>>\n<<<FORMAT>>>\n\nend");
  const auto t = PromptTemplates::from_directory(dir.path());
  EXPECT_EQ(t.get(TaskKind::QA, PromptPattern::A), "<<<CONTENT>>>\n--\n<<<QUESTION>>>\nend");
  EXPECT_EQ(t.get(TaskKind::KIE, PromptPattern::B), std::string(kKieTemplateB));
  const auto out = render_prompt(verbalize(lpt::tax_invoice(), VerbalizerId::PlainText), {TaskKind::QA, {"q"}, {}},
                                 PromptPattern::B, t);
  EXPECT_EQ(out, "TAX INVOICE\n--\n(0) q\n" + format_description(VerbalizerId::PlainText) + "\n\nend");
}

TEST(StripFormat, RemovesLineAndFollowingBlank) {
  EXPECT_EQ(strip_format_block("a\n\n<<<FORMAT>>>\n\nb"), "a\n\nb");
  EXPECT_EQ(strip_format_block("a\n\n<<<FORMAT>>>"), "a");
  EXPECT_EQ(strip_format_block("a\n<<<FORMAT>>>\nb"), "a\nb");
  EXPECT_EQ(strip_format_block("no placeholder"), "no placeholder");
}

TEST(Enumerate, NumberingAndKeys) {
  EXPECT_EQ(enumerate_items({"first", "second"}, TaskKind::QA), "(0) first\n(1) second");
  EXPECT_EQ(enumerate_items({"s"}, TaskKind::NLI), "(0) s");
  EXPECT_EQ(enumerate_items({"company", "total"}, TaskKind::KIE), "company\ntotal");
  std::vector<std::string> many;
  for (int i = 0; i < 12; ++i) many.push_back("q" + std::to_string(i));
  EXPECT_EQ(lpt::lines_of(enumerate_items(many, TaskKind::QA)).back(), "(11) q11");
}

TEST(Schema, KeysPerKind) {
  const auto qa = expected_answer_schema({TaskKind::QA, {"a", "b"}, {}});
  EXPECT_EQ(qa.keys, (std::vector<std::string>{"0", "1"}));
  EXPECT_FALSE(qa.value_domain);
  const auto nli = expected_answer_schema({TaskKind::NLI, {"a"}, {}});
  EXPECT_EQ(*nli.value_domain, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(expected_answer_schema({TaskKind::KIE, {"company", "total"}, {}}).keys,
            (std::vector<std::string>{"company", "total"}));
}

TEST(Render, RejectsInvalidTasks) {
  const auto v = verbalize(lpt::tax_invoice(), VerbalizerId::PlainText);
  EXPECT_THROW(render_prompt(v, {TaskKind::QA, {}, {}}, PromptPattern::A), ConfigError);
  EXPECT_THROW(render_prompt(v, {TaskKind::QA, {"  "}, {}}, PromptPattern::A), ConfigError);
  EXPECT_THROW(render_prompt(v, {TaskKind::KIE, {"k", "k"}, {}}, PromptPattern::A), ConfigError);
  EXPECT_THROW(render_prompt(v, {TaskKind::KIE, {"k"}, std::vector<AnswerType>{}}, PromptPattern::A), ConfigError);
}

TEST(Render, PlaceholdersInContentAreNotExpanded) {
  const auto d = lpt::doc_of({box("<<<QUESTION>>>", 0, 0, 100, 10)});
  const auto out = render_prompt(verbalize(d, VerbalizerId::PlainText), {TaskKind::QA, {"<<<FORMAT>>>"}, {}},
                                 PromptPattern::B);
  EXPECT_NE(out.find("$$$\n<<<QUESTION>>>\n$$$"), std::string::npos);
  EXPECT_NE(out.find("(0) <<<FORMAT>>>"), std::string::npos);
}

TEST(Render, PatternAIsLineSubsequenceOfB) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 60; ++i) {
    const auto d = lpt::random_document(rng, i);
    const auto kind = static_cast<TaskKind>(i % 3);
    TaskRequest task{kind, {}, {}};
    for (int k = 0; k <= i % 4; ++k) task.items.push_back("item " + std::to_string(k));
    for (auto vid : {VerbalizerId::PlainText, VerbalizerId::SpatialFormat, VerbalizerId::BoundingBox}) {
      const auto v = verbalize(d, vid);
      const auto a = render_prompt(v, task, PromptPattern::A);
      const auto b = render_prompt(v, task, PromptPattern::B);
      EXPECT_TRUE(line_subsequence(a, b));
      EXPECT_EQ(a.find(v.format_description + "\n"), std::string::npos);
      EXPECT_NE(b.find("\n" + v.format_description + "\n"), std::string::npos);
      EXPECT_EQ(b.size() - a.size(), v.format_description.size() + 2);
      const auto a_lines = lpt::lines_of(a);
      for (std::size_t k = 0; k < task.items.size(); ++k) {
        const auto line = kind == TaskKind::KIE ? task.items[k] : "(" + std::to_string(k) + ") " + task.items[k];
        EXPECT_EQ(std::count(a_lines.begin(), a_lines.end(), line), 1) << line;
      }
      EXPECT_EQ(a.find("<<<"), std::string::npos);
    }
  }
}
