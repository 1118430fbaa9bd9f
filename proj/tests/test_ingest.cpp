#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "difflab/ingest.hpp"
#include "testutil.hpp"

using namespace difflab;
using difflab::test::make_log;
using difflab::test::Row;

namespace {

TweetLog parse_text(const std::string& text, ParseStats& st, LogSchema schema = LogSchema::kAuto, bool strict = false) {
  std::istringstream in(text);
  TweetLog log;
  parse_stream(in, schema, ParseOptions{schema, strict}, log, st);
  return log;
}

}  // namespace

TEST(ParseLog, TsvFieldMapping) {
  ParseStats st;
  TweetLog log = parse_text("1244851200\tu42\t#iran\t\tprotest,rally\ten\n", st);
  ASSERT_EQ(log.size(), 1u);
  const TweetRecord r = log.record(0);
  EXPECT_EQ(r.timestamp, 1244851200);
  EXPECT_EQ(r.user, 42u);
  ASSERT_EQ(r.hashtags.size(), 1u);
  EXPECT_EQ(log.memes().name(r.hashtags[0]), "#iran");
  EXPECT_TRUE(r.urls.empty());
  ASSERT_EQ(r.nouns.size(), 2u);
  EXPECT_EQ(log.tokens().name(r.nouns[0]), "protest");
  EXPECT_EQ(log.tokens().name(r.nouns[1]), "rally");
  EXPECT_EQ(r.lang, "en");
  EXPECT_EQ(st.skipped, 0u);
}

TEST(ParseLog, EmptyInput) {
  ParseStats st;
  TweetLog log = parse_text("", st);
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(st.skipped, 0u);
}

TEST(ParseLog, LenientSkipsMalformed) {
  std::string text;
  for (int i = 0; i < 10; ++i) {
    if (i == 4) text += "not a tweet\n";
    else text += std::to_string(100 + i) + "\tu" + std::to_string(i) + "\t#a\t\tx\ten\n";
  }
  ParseStats st;
  TweetLog log = parse_text(text, st);
  EXPECT_EQ(log.size(), 9u);
  EXPECT_EQ(st.skipped, 1u);
  EXPECT_EQ(st.first_bad_line, 5u);
}

TEST(ParseLog, StrictAbortsOnOutOfOrder) {
  ParseStats st;
  EXPECT_THROW(parse_text("10\t1\t\t\t\ten\n5\t2\t\t\t\ten\n", st, LogSchema::kTsv, true), DataError);
  ParseStats lenient;
  TweetLog log = parse_text("10\t1\t\t\t\ten\n5\t2\t\t\t\ten\n", lenient, LogSchema::kTsv, false);
  EXPECT_EQ(log.size(), 1u);
  EXPECT_EQ(lenient.skipped, 1u);
}

TEST(ParseLog, JsonLinesMatchesTsv) {
  ParseStats a, b;
  TweetLog tsv = parse_text("7\tu3\t#x,#y\thttp://e\tcat,dog\ten\n", a);
  TweetLog js = parse_text(
      R"({"timestamp":7,"user_id":"u3","hashtags":["#x","#y"],"urls":"http://e","nouns":"cat,dog","lang":"en"})"
      "\n",
      b);
  ASSERT_EQ(js.size(), 1u);
  EXPECT_EQ(format_tsv(tsv, 0), format_tsv(js, 0));
}

TEST(ParseLog, FormatRoundTrip) {
  ParseStats st;
  const std::string line = "1244851200\tu42\t#iran,#gr88\thttp://a.b\tprotest,rally\ten";
  TweetLog log = parse_text(line + "\n", st);
  EXPECT_EQ(format_tsv(log, 0), line);
}

TEST(ParseLog, UnreadableFile) {
  EXPECT_THROW(parse_log("/nonexistent/difflab.tsv", {}), DataError);
}

TEST(Interner, RoundTrip) {
  Interner in;
  for (const char* s : {"a", "b", "c", "a"}) in.intern(s);
  EXPECT_EQ(in.size(), 3u);
  for (std::uint32_t id = 0; id < in.size(); ++id) EXPECT_EQ(in.find(in.name(id)), id);
  EXPECT_FALSE(in.find("zzz").has_value());
}

namespace {

// Meme "#old" born at 0, before the emergence window [10, 20]; "#new" born at
// 10 with 4 adopters; "#late" born at 15, 3 of 4 tweets non-English.
TweetLog catalog_log() {
  return make_log({
      {0, 1, {"#old"}, {}, {}, "en"},
      {5, 2, {"#old"}, {}, {}, "en"},
      {10, 1, {"#new"}, {}, {}, "en"},
      {11, 2, {"#new"}, {}, {}, "en"},
      {12, 3, {"#new"}, {}, {}, "en"},
      {12, 3, {"#new"}, {}, {}, "en"},
      {13, 4, {"#new"}, {}, {}, "en"},
      {15, 1, {"#late"}, {}, {}, "en"},
      {16, 2, {"#late"}, {}, {}, "de"},
      {17, 3, {"#late"}, {}, {}, "de"},
      {18, 4, {"#late"}, {}, {}, "de"},
      {30, 5, {"#new"}, {}, {}, "en"},
  });
}

}  // namespace

TEST(Catalog, BornBeforeWindowRejected) {
  const TweetLog log = catalog_log();
  CatalogOptions o;
  o.window = {10, 20, 30};
  o.min_adopters = 1;
  const MemeCatalog c = build_catalog(log, o);
  const MemeId old = *log.memes().find("#old");
  EXPECT_FALSE(c.accepted(old));
  EXPECT_EQ(c[old].birth_time, 0);
}

TEST(Catalog, InclusiveThresholds) {
  const TweetLog log = catalog_log();
  CatalogOptions o;
  o.window = {10, 20, 30};
  o.english_threshold = 1.0;
  o.min_adopters = 5;  // users 1,2,3,4,5 adopt "#new"; user 3 twice
  const MemeCatalog c = build_catalog(log, o);
  const MemeId m = *log.memes().find("#new");
  EXPECT_EQ(c[m].adopters, 5u);
  EXPECT_DOUBLE_EQ(c[m].english_share, 1.0);
  EXPECT_TRUE(c.accepted(m));
  o.min_adopters = 6;
  EXPECT_FALSE(build_catalog(log, o).accepted(m));
  // Adopters only count up to analysis_end.
  o.min_adopters = 5;
  o.window.analysis_end = 20;
  EXPECT_FALSE(build_catalog(log, o).accepted(m));
}

TEST(Catalog, EnglishShareBelowThreshold) {
  // 89 English tweets of 100.
  std::vector<Row> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({i, static_cast<UserId>(i), {"#m"}, {}, {}, i < 89 ? "en" : "fr"});
  const TweetLog log = make_log(rows);
  CatalogOptions o;
  o.window = {0, 50, 99};
  o.min_adopters = 1;
  o.english_threshold = 0.9;
  const MemeCatalog c = build_catalog(log, o);
  EXPECT_NEAR(c[0].english_share, 0.89, 1e-12);
  EXPECT_FALSE(c.accepted(0));
  o.english_threshold = 0.89;
  EXPECT_TRUE(build_catalog(log, o).accepted(0));
}

TEST(Catalog, HundredAdoptersNinetyFivePercentEnglish) {
  std::vector<Row> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({10 + i, static_cast<UserId>(i), {"#m"}, {}, {}, i % 20 == 0 ? "es" : "en"});
  const TweetLog log = make_log(rows);
  CatalogOptions o;
  o.window = {0, 50, 200};
  const MemeCatalog c = build_catalog(log, o);
  EXPECT_EQ(c[0].adopters, 100u);
  EXPECT_NEAR(c[0].english_share, 0.95, 1e-12);
  EXPECT_TRUE(c.accepted(0));
}

TEST(Catalog, MinAdoptersMonotone) {
  const TweetLog log = catalog_log();
  std::size_t prev = ~std::size_t{0};
  for (std::uint64_t k = 0; k <= 8; ++k) {
    CatalogOptions o;
    o.window = {0, 30, 30};
    o.english_threshold = 0.0;
    o.min_adopters = k;
    const MemeCatalog c = build_catalog(log, o);
    EXPECT_LE(c.accepted_count(), prev);
    prev = c.accepted_count();
  }
}

TEST(Catalog, EmptyWindowIsConfigError) {
  const TweetLog log = catalog_log();
  CatalogOptions o;
  o.window = {20, 10, 30};
  EXPECT_THROW(build_catalog(log, o), ConfigError);
}

TEST(Catalog, DefaultWindowIsFirstThird) {
  const TweetLog log = make_log({{0, 1, {}, {}, {}, "en"}, {300, 1, {}, {}, {}, "en"}});
  const CatalogWindow w = default_window(log);
  EXPECT_EQ(w.emergence_start, 0);
  EXPECT_EQ(w.emergence_end, 100);
  EXPECT_EQ(w.analysis_end, 300);
}

TEST(Catalog, CsvExport) {
  const TweetLog log = catalog_log();
  CatalogOptions o;
  o.window = {10, 20, 30};
  o.min_adopters = 1;
  std::ostringstream out;
  build_catalog(log, o).write_csv(out, log.memes());
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "meme_id,kind,birth_time,english_share,adopters,accepted");
}

TEST(NounBags, UnionPerUser) {
  const TweetLog log = make_log({{1, 7, {}, {}, {"a", "b"}, "en"}, {2, 7, {}, {}, {"b", "c"}, "en"}});
  const NounBags bags = build_noun_bags(log, {0, 10});
  ASSERT_EQ(bags.users.size(), 1u);
  EXPECT_EQ(bags.users[0].owner, 7u);
  std::vector<std::string> words;
  for (TokenId t : bags.users[0].tokens) words.push_back(log.tokens().name(t));
  std::sort(words.begin(), words.end());
  EXPECT_EQ(words, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(NounBags, NonEnglishExcluded) {
  const TweetLog log = make_log({{1, 7, {"#m"}, {}, {"a"}, "en"}, {2, 8, {"#m"}, {}, {"z"}, "pt"}});
  const NounBags bags = build_noun_bags(log, {0, 10});
  ASSERT_EQ(bags.users.size(), 1u);
  EXPECT_EQ(bags.users[0].owner, 7u);
  ASSERT_EQ(bags.memes.size(), 1u);
  ASSERT_EQ(bags.memes[0].tokens.size(), 1u);
  EXPECT_EQ(log.tokens().name(bags.memes[0].tokens[0]), "a");
}

TEST(NounBags, MemeOutsideWindowHasNoBag) {
  const TweetLog log = make_log({{1, 7, {}, {}, {"a"}, "en"}, {20, 7, {"#m"}, {}, {"b"}, "en"}});
  const NounBags bags = build_noun_bags(log, {0, 10});
  EXPECT_TRUE(bags.memes.empty());
}

TEST(NounBags, Deterministic) {
  const TweetLog a = catalog_log();
  const TweetLog b = catalog_log();
  const NounBags x = build_noun_bags(a, {0, 100});
  const NounBags y = build_noun_bags(b, {0, 100});
  EXPECT_EQ(x.users, y.users);
  EXPECT_EQ(x.memes, y.memes);
}
