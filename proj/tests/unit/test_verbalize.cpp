#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "layoutprompt/verbalize.hpp"
#include "support/fixtures.hpp"

using namespace layoutprompt;
using lpt::box;

TEST(Verbalize, InvoiceBoxCoordinateFormats) {
  const auto d = lpt::tax_invoice();
  EXPECT_EQ(verbalize_bounding_box(d).text, "left:100 top:50 right:321 bottom:100 text:'TAX INVOICE'");
  EXPECT_EQ(verbalize_bounding_box_markup(d).text, "<box left=100 top=50 right=321 bottom=100/> TAX INVOICE");
  EXPECT_EQ(verbalize_center_point(d).text, "<box x=211 y=75/> TAX INVOICE");
  EXPECT_EQ(verbalize_plain_text(d).text, "TAX INVOICE");
  // column round(100 / (221 / 11)) = 5
  EXPECT_EQ(verbalize_spatial_format(d).text, "     TAX INVOICE");
}

TEST(Verbalize, SmallBoxes) {
  EXPECT_EQ(verbalize_bounding_box(lpt::doc_of({box("x", 0, 0, 1, 1)})).text,
            "left:0 top:0 right:1 bottom:1 text:'x'");
  EXPECT_EQ(verbalize_center_point(lpt::doc_of({box("a", 0, 0, 2, 2)})).text, "<box x=1 y=1/> a");
}

TEST(Verbalize, CoordinateFormatsFollowReadingOrder) {
  const auto d = lpt::doc_of({box("second line", 0, 40, 50, 60), box("first", 0, 0, 30, 20)});
  EXPECT_EQ(verbalize_bounding_box(d).text,
            "left:0 top:40 right:50 bottom:60 text:'second line'\n"
            "left:0 top:0 right:30 bottom:20 text:'first'");
  EXPECT_EQ(verbalize_bounding_box_markup(d).text,
            "<box left=0 top=40 right=50 bottom=60/> second line\n"
            "<box left=0 top=0 right=30 bottom=20/> first");
  EXPECT_EQ(verbalize_center_point(d).text, "<box x=25 y=50/> second line\n<box x=15 y=10/> first");
}

TEST(Verbalize, CoordinateLinesMapToReadingIndex) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 40; ++i) {
    const auto d = lpt::random_document(rng, i);
    const auto lines = lpt::lines_of(verbalize_bounding_box(d).text);
    if (d.box_count() == 0) continue;
    ASSERT_EQ(lines.size(), d.box_count());
    for (const auto& b : d.pages[0].boxes) {
      EXPECT_NE(lines[static_cast<std::size_t>(b.reading_index)].find("text:'" + b.text + "'"), std::string::npos);
    }
  }
}

TEST(PlainText, Lines) {
  EXPECT_EQ(verbalize_plain_text(lpt::doc_of({box("A", 0, 0, 10, 10, 0), box("B", 0, 20, 10, 30, 1)})).text, "A\nB");
  EXPECT_EQ(verbalize_plain_text(lpt::doc_of({box("word1", 0, 0, 50, 10), box("word2", 400, 0, 450, 10)})).text,
            "word1 word2");
}

TEST(PlainText, PagesJoinedByNewlineSkippingEmpty) {
  auto d = lpt::doc_of({box("A", 0, 0, 10, 10)});
  d.pages.emplace_back();
  d.pages.push_back(lpt::page_of({box("B", 0, 0, 10, 10)}));
  EXPECT_EQ(verbalize_plain_text(d).text, "A\nB");
}

TEST(Spatial, ColumnFromLeftEdge) {
  // char width 10: A at column 0, B at column 10, cursor after A is 1
  const auto d = lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 100, 0, 110, 20)});
  EXPECT_EQ(verbalize_spatial_format(d).text, "A" + std::string(9, ' ') + "B");
}

TEST(Spatial, NewlinesCappedAtFour) {
  // char height 20, rows 200 px apart -> 10 lines, capped at 4
  const auto d = lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 0, 200, 10, 220)});
  EXPECT_EQ(verbalize_spatial_format(d).text, "A\n\n\n\nB");
  EXPECT_EQ(verbalize_spatial_format_y(d).text, "A\n\n\n\nB");
}

TEST(Spatial, NewlinesRoundHalfUpWithFloorOne) {
  const CharMetrics m{10, 20};
  VerbalizeOptions o;
  o.metrics = m;
  auto rows_apart = [&](int dy) {
    const auto d = lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 0, dy, 10, dy + 20)});
    return verbalize_spatial_format_y(d, o).text;
  };
  EXPECT_EQ(rows_apart(20), "A\nB");        // 1.0
  EXPECT_EQ(rows_apart(29), "A\nB");        // 1.45
  EXPECT_EQ(rows_apart(30), "A\n\nB");      // 1.5 rounds up
  EXPECT_EQ(rows_apart(50), "A\n\n\nB");    // 2.5 rounds up
  EXPECT_EQ(rows_apart(11), "A\nB");        // 0.55 -> 1
}

TEST(Spatial, LowerClampWhenRowsNearlyTouch) {
  // 11 px apart with a 20 px cell: rounds to 1, never 0
  const CharMetrics m{10, 40};
  VerbalizeOptions o;
  o.metrics = m;
  const auto d = lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 0, 11, 10, 31)});
  EXPECT_EQ(verbalize_spatial_format(d, o).text, "A\nB");
}

TEST(Spatial, SingleBox) { EXPECT_EQ(verbalize_spatial_format(lpt::doc_of({box("hello", 0, 0, 50, 10)})).text, "hello"); }

TEST(Spatial, CollisionInsertsOneSpace) {
  // both start within the first cell
  const CharMetrics m{10, 20};
  VerbalizeOptions o;
  o.metrics = m;
  const auto d = lpt::doc_of({box("AAAA", 0, 0, 40, 20), box("BB", 20, 0, 40, 20)});
  EXPECT_EQ(verbalize_spatial_format(d, o).text, "AAAA BB");
}

TEST(Spatial, OriginKeepsPageMargin) {
  // min left 100 -> origin column 10; relative offset 5 columns
  const CharMetrics m{10, 20};
  VerbalizeOptions o;
  o.metrics = m;
  const auto d = lpt::doc_of({box("A", 100, 0, 110, 20), box("B", 150, 0, 160, 20)});
  EXPECT_EQ(verbalize_spatial_format(d, o).text, std::string(10, ' ') + "A    B");
}

TEST(Spatial, ColumnsCountCodePoints) {
  const CharMetrics m{10, 20};
  VerbalizeOptions o;
  o.metrics = m;
  const auto d = lpt::doc_of({box("\xC3\xA9\xC3\xA9", 0, 0, 20, 20), box("x", 50, 0, 60, 20)});
  EXPECT_EQ(verbalize_spatial_format(d, o).text, "\xC3\xA9\xC3\xA9   x");
}

TEST(SpatialY, SingleSpaceWithinRow) {
  const auto d = lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 900, 0, 910, 20)});
  EXPECT_EQ(verbalize_spatial_format_y(d).text, "A B");
  EXPECT_EQ(verbalize_spatial_format_y(lpt::doc_of({box("A", 0, 0, 10, 20), box("B", 0, 20, 10, 40)})).text, "A\nB");
}

TEST(Spatial, EmptyInputs) {
  OcrDocument d;
  d.pages.emplace_back();
  EXPECT_EQ(verbalize_spatial_format(d).text, "");
  EXPECT_EQ(verbalize_spatial_format_y(d).text, "");
  EXPECT_EQ(verbalize_plain_text(d).text, "");
  EXPECT_EQ(verbalize_bounding_box(d).text, "");
}

TEST(Spatial, PagesSeparatedByOneEmptyLine) {
  auto d = lpt::doc_of({box("A", 0, 0, 10, 20)});
  d.pages.push_back(lpt::page_of({box("B", 0, 0, 10, 20)}));
  EXPECT_EQ(verbalize_spatial_format(d).text, "A\n\nB");
}

TEST(Spatial, NeverFiveNewlines) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    auto d = lpt::random_document(rng, i);
    d.pages.push_back(lpt::random_page(rng));
    for (auto v : {VerbalizerId::SpatialFormat, VerbalizerId::SpatialFormatY}) {
      EXPECT_EQ(verbalize(d, v).text.find("\n\n\n\n\n"), std::string::npos);
    }
  }
}

TEST(Verbalize, TextPreservedAsMultiset) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto d = lpt::random_document(rng, i);
    std::multiset<std::string> expected;
    for (const auto& b : d.pages[0].boxes) expected.insert(b.text);
    for (auto v : {VerbalizerId::PlainText, VerbalizerId::SpatialFormat, VerbalizerId::SpatialFormatY}) {
      const auto words = text::split_whitespace(verbalize(d, v).text);
      EXPECT_EQ(std::multiset<std::string>(words.begin(), words.end()), expected) << to_string(v);
    }
  }
}

TEST(Html, Passthrough) {
  EXPECT_EQ(verbalize_plain_html("<h3 tid=\"3\">TAX INVOICE</h3>").text, "<h3 tid=\"3\">TAX INVOICE</h3>");
  EXPECT_EQ(verbalize_plain_html("").text, "");
  auto d = lpt::tax_invoice();
  EXPECT_THROW(verbalize(d, VerbalizerId::PlainHTML), MissingHtml);
  d.html = "<p>x</p>";
  EXPECT_EQ(verbalize(d, VerbalizerId::PlainHTML).text, "<p>x</p>");
}

TEST(Descriptions, Defaults) {
  EXPECT_EQ(format_description(VerbalizerId::PlainText),
            "The document is given as plain text; lines appear in reading order.");
  const auto& bb = format_description(VerbalizerId::BoundingBox);
  for (const char* field : {"left", "top", "right", "bottom"}) EXPECT_NE(bb.find(field), std::string::npos);
  EXPECT_NE(format_description(VerbalizerId::SpatialFormat).find("whitespace reflects the spatial layout"),
            std::string::npos);
  for (auto v : kAllVerbalizers) {
    EXPECT_FALSE(format_description(v).empty());
    EXPECT_EQ(verbalize_plain_html("x").format_description, format_description(VerbalizerId::PlainHTML));
  }
}

TEST(Descriptions, Override) {
  VerbalizeOptions o;
  o.descriptions.merge(nlohmann::json::parse(R"({"plain_text": "custom"})"));
  EXPECT_EQ(verbalize(lpt::tax_invoice(), VerbalizerId::PlainText, o).format_description, "custom");
  EXPECT_THROW(o.descriptions.merge(nlohmann::json::parse(R"({"Nope": "x"})")), ParseError);
}

TEST(VerbalizerNames, RoundTrip) {
  for (auto v : kAllVerbalizers) EXPECT_EQ(parse_verbalizer(to_string(v)), v);
  EXPECT_EQ(parse_verbalizer("spatial-format-y"), VerbalizerId::SpatialFormatY);
  EXPECT_EQ(to_string(VerbalizerId::BoundingBoxMarkup), "BoundingBoxMarkup");
  EXPECT_FALSE(parse_verbalizer("Bogus"));
}
