#include <doctest.h>

#include <json.hpp>
#include <random>

#include "tablehop/textprep.hpp"
#include "tablehop/utf8.hpp"
#include "test_support.hpp"

using namespace tablehop;
using testsupport::make_table;

TEST_CASE("filmography flattening") {
  auto t = make_table("t9", "Nonso Anozie", "Television", {"Year", "Title", "Role", "Notes"},
                      {{"2007", "Prime Suspect7: The Final Act", "Robert", "Episode: Part1"}});
  auto flat = flatten_table(t, 4000);
  CHECK(flat.text ==
        "title: Nonso Anozie ; section: Television\n"
        "header: Year | Title | Role | Notes\n"
        "row 1: 2007 | Prime Suspect7: The Final Act | Robert | Episode: Part1");
  CHECK_FALSE(flat.truncated);
  CHECK(flat.table_id == "t9");
}

TEST_CASE("zero rows gives title and header only") {
  auto flat = flatten_table(make_table("e", "P", "S", {"a", "b"}, {}), 4000);
  CHECK(flat.text == "title: P ; section: S\nheader: a | b");
  CHECK_FALSE(flat.truncated);
}

TEST_CASE("budget for exactly one row of a hundred") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 1; i <= 100; ++i) rows.push_back({std::to_string(i), "v"});
  auto t = make_table("h", "P", "S", {"n", "v"}, rows);
  // "title: P ; section: S" (21) + "\nheader: n | v" (14) + "\nrow 1: 1 | v" (13)
  auto flat = flatten_table(t, 21 + 14 + 13);
  CHECK(flat.text == "title: P ; section: S\nheader: n | v\nrow 1: 1 | v");
  CHECK(std::count(flat.text.begin(), flat.text.end(), '\n') == 2);
  CHECK(flat.truncated);
  CHECK(flatten_table(t, 21 + 14 + 12).text == "title: P ; section: S\nheader: n | v");
}

TEST_CASE("oversized title and header are clipped") {
  auto flat = flatten_table(make_table("x", "Long page title", "S", {"a"}, {{"1"}}), 10);
  CHECK(flat.text == "title: Lon");
  CHECK(flat.truncated);
  CHECK_THROWS_AS(flatten_table(make_table("x", "p", "s", {"a"}, {}), 0), std::invalid_argument);
}

TEST_CASE("field sanitizing") {
  CHECK(sanitize_field("a|b\nc\rd") == "a/b c d");
  auto flat = flatten_table(make_table("x", "p|q", "s", {"h|1"}, {{"x\ny"}}), 4000);
  CHECK(flat.text == "title: p/q ; section: s\nheader: h/1\nrow 1: x y");
}

TEST_CASE("budgets count code points") {
  auto flat = flatten_table(make_table("u", "é", "ü", {"ß"}, {{"東京"}}), 4000);
  CHECK(utf8::length(flat.text) == 41);
  CHECK(flat.text.size() == 48);
  auto clipped = flatten_table(make_table("u", "éééé", "s", {"a"}, {}), 9);
  CHECK(clipped.text == "title: éé");
}

TEST_CASE("attach_passages") {
  FlattenedTable flat{"t", "title: x ; section: y\nheader: a", false};
  SUBCASE("no passages is the identity") {
    auto ctx = attach_passages(flat, {}, 600);
    CHECK(ctx.text == flat.text);
    CHECK(ctx.passage_ids.empty());
    CHECK(ctx.table_id == "t");
  }
  SUBCASE("gingold passage") {
    const std::string body =
        "From the early 1950s, Gingold lived and made her career mostly in the U.S. She made "
        "appearances in revues and toured in plays and musicals until an accident ended her "
        "performing career in 1977.";
    std::vector<Passage> ps{{"p748", "Hermione Gingold", body}};
    auto ctx = attach_passages(flat, ps, 600);
    CHECK(ctx.text == flat.text + "\npassage (Hermione Gingold): " + body);
    CHECK(ctx.passage_ids == std::vector<std::string>{"p748"});
  }
  SUBCASE("long passage clipped to the budget") {
    std::vector<Passage> ps{{"big", "Big", std::string(10000, 'z')}};
    auto ctx = attach_passages(flat, ps, 600);
    auto prefix = flat.text + "\npassage (Big): ";
    REQUIRE(ctx.text.rfind(prefix, 0) == 0);
    CHECK(ctx.text.size() - prefix.size() == 600);
  }
  SUBCASE("passage line breaks flattened") {
    std::vector<Passage> ps{{"p", "T\nx", "a\nb"}};
    CHECK(attach_passages(flat, ps, 600).text == flat.text + "\npassage (T x): a b");
  }
}

TEST_CASE("flattening goldens") {
  auto fixtures = testsupport::fixture_dir() / "flatten";
  auto golden = testsupport::golden_dir() / "flatten";
  auto budgets = nlohmann::json::parse(read_file(fixtures / "budgets.json"));
  auto expected = nlohmann::json::parse(read_file(golden / "expected.json"));
  Corpus c;
  parse_tables_jsonl(read_file(fixtures / "tables.jsonl"), "flatten/tables.jsonl", c);
  REQUIRE(c.tables.size() == 5);
  for (const auto& [id, table] : c.tables) {
    CAPTURE(id);
    auto flat = flatten_table(table, budgets.at(id).get<std::size_t>());
    CHECK(flat.text == read_file(golden / (id + ".txt")));
    CHECK(flat.truncated == expected.at(id).at("truncated").get<bool>());
  }
}

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {"a", "b", "Z", "7", " ", "|", "\n", "é", "東", "-"};
  std::string s;
  std::size_t n = rng() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

}  // namespace

TEST_CASE("retained cells appear once each in row-major order") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t cols = 1 + rng() % 4;
    std::size_t n_rows = rng() % 12;
    std::vector<std::string> header;
    for (std::size_t c = 0; c < cols; ++c) header.push_back("h" + std::to_string(c));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::vector<std::string> row;
      for (std::size_t c = 0; c < cols; ++c) row.push_back(random_text(rng, 6));
      rows.push_back(row);
    }
    auto t = make_table("r", random_text(rng, 5), random_text(rng, 5), header, rows);
    std::size_t budget = 20 + rng() % 300;
    auto flat = flatten_table(t, budget);
    CHECK(flatten_table(t, budget) == flat);
    CHECK(utf8::length(flat.text) <= budget);

    // Walk the retained row lines and compare each against its cells.
    std::size_t pos = flat.text.find('\n');
    if (pos == std::string::npos) continue;
    pos = flat.text.find('\n', pos + 1);
    std::size_t r = 0;
    while (pos != std::string::npos) {
      auto end = flat.text.find('\n', pos + 1);
      auto line = flat.text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
      std::string expect = "row " + std::to_string(r + 1) + ": ";
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) expect += " | ";
        expect += sanitize_field(rows[r][c]);
      }
      CHECK(line == expect);
      ++r;
      pos = end;
    }
    std::string head = "title: " + sanitize_field(t.page_title) + " ; section: " +
                       sanitize_field(t.section_title) + "\nheader: ";
    for (std::size_t c = 0; c < cols; ++c) head += (c ? " | " : "") + header[c];
    bool head_clipped = utf8::length(head) > budget;
    CHECK(flat.truncated == (head_clipped || r < n_rows));
  }
}

TEST_CASE("attach_passages length bound and order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    FlattenedTable flat{"t", random_text(rng, 30), false};
    std::vector<Passage> ps1, ps2;
    for (std::size_t i = 0, n = rng() % 4; i < n; ++i)
      ps1.push_back({"a" + std::to_string(i), random_text(rng, 8), random_text(rng, 50)});
    for (std::size_t i = 0, n = rng() % 4; i < n; ++i)
      ps2.push_back({"b" + std::to_string(i), random_text(rng, 8), random_text(rng, 50)});
    std::size_t budget = rng() % 40;
    auto all = ps1;
    all.insert(all.end(), ps2.begin(), ps2.end());

    auto ctx = attach_passages(flat, all, budget);
    std::size_t bound = utf8::length(flat.text);
    std::vector<std::string> ids;
    for (const auto& p : all) {
      bound += utf8::length("\npassage (" + p.title + "): ") + std::min(utf8::length(p.text), budget);
      ids.push_back(p.id);
    }
    CHECK(utf8::length(ctx.text) <= bound);
    CHECK(ctx.passage_ids == ids);
  }
}
