#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "detrank/error.hpp"
#include "detrank/table.hpp"

using namespace detrank;

TEST_CASE("csv parsing") {
  const auto t = parse_csv("a,b,c\n1,\"x, y\",3\r\n\n4,\"say \"\"hi\"\"\",\"multi\nline\"\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2u);
  CHECK(t.rows[0][1] == "x, y");
  CHECK(t.rows[0][2] == "3");
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(t.rows[1][2] == "multi\nline");
  CHECK(t.column("c") == 2u);
  CHECK_FALSE(t.column("z").has_value());
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS((void)parse_csv(""), FormatError);
  CHECK_THROWS_AS((void)parse_csv("a,a\n1,2\n"), FormatError);
  CHECK_THROWS_WITH_AS((void)parse_csv("a,b\n1\n"), doctest::Contains("row 1 has 1 fields"),
                       FormatError);
  CHECK_THROWS_AS((void)parse_csv("a\n\"open\n"), FormatError);
}

TEST_CASE("csv writing round trips") {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\""};
  const auto t = parse_csv("h1,h2,h3\n" + join_csv_row(fields) + "\n");
  CHECK(t.rows[0] == fields);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_fixed(0.7921, 2) == "0.79");
  CHECK(format_fixed(-0.001, 2) == "0.00");
}

TEST_CASE("score tables") {
  SUBCASE("model and backbone form the id") {
    const auto t = to_score_table(
        parse_csv("model,backbone,logme,sfda,map\nfrcnn,r50,1.5,N/A,40\nfrcnn,r101,1.7,0.3,42\n"),
        "t");
    CHECK(t.ids == std::vector<std::string>{"frcnn r50", "frcnn r101"});
    CHECK(t.columns == std::vector<std::string>{"logme", "sfda", "map"});
    CHECK(t.values[1][0] == std::nullopt);
    CHECK(t.values[1][1] == 0.3);
    CHECK(t.row("frcnn r101") == 1u);
  }
  SUBCASE("model_name wins and text columns are skipped") {
    const auto t = to_score_table(parse_csv("note,model_name,score\nhello,a,1\nbye,b,2\n"), "t");
    CHECK(t.ids == std::vector<std::string>{"a", "b"});
    CHECK(t.columns == std::vector<std::string>{"score"});
  }
  SUBCASE("duplicate ids are rejected") {
    CHECK_THROWS_AS((void)to_score_table(parse_csv("model,s\na,1\na,2\n"), "t"), FormatError);
  }
}
