#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "tablehop/error.hpp"
#include "tablehop/fewshot.hpp"
#include "test_support.hpp"

using namespace tablehop;
using testsupport::make_table;
using testsupport::TempDir;

namespace {

QAExample train_example(std::string id, std::string question, std::string answer, std::string gold) {
  QAExample q;
  q.id = std::move(id);
  q.question = std::move(question);
  q.answers = {std::move(answer)};
  q.gold_table_id = std::move(gold);
  q.split = Split::train;
  return q;
}

std::vector<QAExample> robert_train() {
  return load_qa_set(testsupport::fixture_dir() / "robert" / "train.jsonl", Split::train);
}

}  // namespace

TEST_CASE("joint texts") {
  Exemplar ex{"id", "q?", "ctx", {"a1", "a2"}};
  CHECK(joint_exemplar_text(ex) == "q? [SEP] ctx [SEP] a1");
  CHECK(exemplar_query_text("q?", "ctx") == "q? [SEP] ctx");
}

TEST_CASE("build_exemplar_store") {
  HashingEmbedder h(256);
  RetrievalConfig cfg;
  Budgets budgets;
  auto corpus = testsupport::robert_corpus();

  SUBCASE("no train examples") {
    auto store = build_exemplar_store({}, corpus, h, cfg, budgets);
    CHECK(store.size() == 0);
    CHECK(select_exemplars(store, h, "q", "ctx", 3).empty());
  }
  SUBCASE("the 1897-1987 actress example") {
    auto train = robert_train();
    train.resize(1);
    REQUIRE(train[0].answers == std::vector<std::string>{"1977"});
    auto store = build_exemplar_store(train, corpus, h, cfg, budgets);
    REQUIRE(store.size() == 1);
    const auto& ex = store.exemplars()[0];
    CHECK(ex.context_text.find("Hermione Gingold") != std::string::npos);
    CHECK(ex.context_text.find("accident ended her performing career in 1977") != std::string::npos);
    CHECK(ex.answer() == "1977");
  }
  SUBCASE("identical texts keep distinct ids") {
    std::vector<QAExample> train{train_example("x1", "same", "a", "sorcerer_casts"),
                                 train_example("x2", "same", "a", "sorcerer_casts")};
    auto store = build_exemplar_store(train, corpus, h, cfg, budgets);
    REQUIRE(store.size() == 2);
    CHECK(store.index().ids() == std::vector<std::string>{"x1", "x2"});
    CHECK(store.index().embedding(0) == store.index().embedding(1));
  }
  SUBCASE("non-train examples are rejected") {
    auto q = train_example("d", "q", "a", "sorcerer_casts");
    q.split = Split::dev;
    CHECK_THROWS_AS((void)build_exemplar_store(std::vector<QAExample>{q}, corpus, h, cfg, budgets), DataError);
  }
  SUBCASE("unknown gold table") {
    std::vector<QAExample> train{train_example("x", "q", "a", "no_such_table")};
    CHECK_THROWS_AS((void)build_exemplar_store(train, corpus, h, cfg, budgets), DataError);
  }
}

TEST_CASE("select_exemplars") {
  HashingEmbedder h(256);
  RetrievalConfig cfg;
  Budgets budgets;
  Corpus corpus;
  corpus.tables["ta"] = make_table("ta", "apple", "apricot", {"avocado"}, {{"almond"}});
  corpus.tables["tb"] = make_table("tb", "banana", "blueberry", {"brazil"}, {{"butternut"}});
  corpus.tables["tc"] = make_table("tc", "cherry", "coconut", {"cashew"}, {{"chestnut"}});
  std::vector<QAExample> train{train_example("A", "apple question", "aaa", "ta"),
                               train_example("B", "banana question", "bbb", "tb"),
                               train_example("C", "cherry question", "ccc", "tc")};
  auto store = build_exemplar_store(train, corpus, h, cfg, budgets);

  SUBCASE("n = 0") { CHECK(select_exemplars(store, h, "banana", "brazil", 0).empty()); }
  SUBCASE("query sharing tokens with B") {
    auto picked = select_exemplars(store, h, "banana blueberry", "brazil butternut", 3);
    REQUIRE(picked.size() == 3);
    CHECK(picked[0].source_id == "B");
    auto q = h.embed_text(exemplar_query_text("banana blueberry", "brazil butternut"));
    std::vector<ScoredId> oracle;
    for (const auto& ex : store.exemplars()) oracle.push_back({ex.source_id, cosine(q, h.embed_text(joint_exemplar_text(ex)))});
    std::sort(oracle.begin(), oracle.end(), ranks_before);
    for (std::size_t i = 0; i < 3; ++i) CHECK(picked[i].source_id == oracle[i].id);
  }
  SUBCASE("store of one returns it") {
    auto one = build_exemplar_store(std::vector<QAExample>{train[2]}, corpus, h, cfg, budgets);
    auto picked = select_exemplars(one, h, "anything at all", "", 1);
    REQUIRE(picked.size() == 1);
    CHECK(picked[0].source_id == "C");
  }
  SUBCASE("result size, determinism and train-only sources") {
    std::set<std::string> train_ids{"A", "B", "C"};
    for (std::size_t n = 0; n <= 5; ++n) {
      auto picked = select_exemplars(store, h, "apple cherry", "cashew", n);
      CHECK(picked.size() == std::min<std::size_t>(n, 3));
      CHECK(select_exemplars(store, h, "apple cherry", "cashew", n) == picked);
      for (const auto& ex : picked) CHECK(train_ids.count(ex.source_id) == 1);
    }
  }
  SUBCASE("save and load keeps selections") {
    TempDir dir;
    auto manifest = dir / "exemplars.json";
    save_exemplar_store(store, manifest);
    auto loaded = load_exemplar_store(manifest);
    CHECK(loaded == store);
    std::mt19937_64 rng(4);
    const std::vector<std::string> words{"apple", "banana", "cherry", "brazil", "almond", "x"};
    for (int i = 0; i < 30; ++i) {
      auto q = words[rng() % words.size()] + " " + words[rng() % words.size()];
      auto ctx = words[rng() % words.size()];
      CHECK(select_exemplars(loaded, h, q, ctx, 2) == select_exemplars(store, h, q, ctx, 2));
    }
  }
}

TEST_CASE("exemplar store validation") {
  Exemplar ex{"a", "q", "c", {"x"}};
  auto index = VectorIndex::build({"b"}, {Embedding{{1.0}}});
  CHECK_THROWS_AS(ExemplarStore({ex}, index), DataError);
}
