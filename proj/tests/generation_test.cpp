#include <doctest.h>

#include <json.hpp>
#include <random>

#include "tablehop/error.hpp"
#include "tablehop/generation.hpp"
#include "test_support.hpp"

using namespace tablehop;
using testsupport::FakeTransport;

namespace {

const std::string kRobert =
    "Who created the series in which the character of Robert, played by actor Nonso Anozie, appeared?";
const std::string kSorcerer = "Which Mrs. Partlet actress from the comic opera The Sorcerer died at the age of 37?";

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

struct RobertFixture {
  HashingEmbedder h{256};
  Budgets budgets;
  RetrievalConfig cfg;
  Corpus corpus = testsupport::robert_corpus();
  VectorIndex index = build_table_index(corpus, h, budgets);

  RetrievedContext context(const std::string& q, std::size_t k_tables) {
    RetrievalConfig c = cfg;
    c.k_tables = k_tables;
    return assemble_context(q, corpus, index, h, c, budgets);
  }
};

std::string scripted(const std::vector<ScriptRule>& rules, const Prompt& p) {
  return ScriptedGenerator(rules).generate(p);
}

}  // namespace

TEST_CASE("fsl prompt") {
  RobertFixture f;
  SUBCASE("zero exemplars, one candidate") {
    auto ctx = f.context(kRobert, 1);
    auto p = build_fsl_prompt(kRobert, ctx, {});
    CHECK(p.kind == PromptKind::fsl_answer);
    CHECK(count_of(p.text, "Context:\n") == 1);
    CHECK(count_of(p.text, "Question: ") == 1);
    CHECK(p.text.find(ctx.candidates[0].context.text) != std::string::npos);
    CHECK(p.text.ends_with("Question: " + kRobert + "\n"));
    CHECK(p.meta.at("exemplar_ids").empty());
  }
  SUBCASE("exemplar demonstration precedes the question") {
    Exemplar ex{"train-gingold", "In which year did an accident end the career?", "title: Jewish actors",
                {"1977"}};
    auto ctx = f.context(kSorcerer, 3);
    auto p = build_fsl_prompt(kSorcerer, ctx, std::vector<Exemplar>{ex});
    auto demo = p.text.find("ANSWER: 1977");
    auto question = p.text.find("Question: " + kSorcerer);
    REQUIRE(demo != std::string::npos);
    REQUIRE(question != std::string::npos);
    CHECK(demo < question);
    CHECK(count_of(p.text, "Context:\n") == 1 + ctx.candidates.size());
    CHECK(p.meta.at("exemplar_ids") == "train-gingold");
  }
  SUBCASE("several answers are joined") {
    Exemplar ex{"x", "q", "c", {"a", "b"}};
    auto p = build_fsl_prompt(kRobert, f.context(kRobert, 1), std::vector<Exemplar>{ex});
    CHECK(p.text.find("ANSWER: a; b\n") != std::string::npos);
  }
  SUBCASE("deterministic") {
    auto ctx = f.context(kRobert, 3);
    CHECK(build_fsl_prompt(kRobert, ctx, {}) == build_fsl_prompt(kRobert, ctx, {}));
  }
  SUBCASE("no candidates") {
    RetrievedContext empty;
    CHECK_THROWS_AS((void)build_fsl_prompt(kRobert, empty, {}), std::invalid_argument);
  }
}

TEST_CASE("closed book prompt has no context") {
  auto p = build_closed_book_prompt("q?");
  CHECK(p.text.find("Context:") == std::string::npos);
  CHECK(p.text.ends_with("Question: q?\n"));
}

TEST_CASE("decomposition prompt") {
  SUBCASE("first hop lists no findings") {
    auto p = build_decomposition_prompt(kRobert, 1, {});
    CHECK(p.kind == PromptKind::decompose);
    CHECK(p.text.find("Finding") == std::string::npos);
    CHECK(p.text.find("Original question: " + kRobert) != std::string::npos);
    CHECK(p.text.find("SUBQUESTION:") != std::string::npos);
  }
  SUBCASE("second hop carries the first finding") {
    std::vector<HopFinding> prior{{"Which series did Robert appear in?", "Prime Suspect 7: the Final Act"}};
    auto p = build_decomposition_prompt(kRobert, 2, prior);
    CHECK(p.text.find("Finding 1: Prime Suspect 7: the Final Act") != std::string::npos);
    CHECK(p.text.find("Sub-question 1: Which series did Robert appear in?") != std::string::npos);
  }
  SUBCASE("missing earlier hops") {
    CHECK_THROWS_AS((void)build_decomposition_prompt(kRobert, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)build_decomposition_prompt(kRobert, 0, {}), std::invalid_argument);
  }
}

TEST_CASE("hop answer prompt") {
  RobertFixture f;
  auto ctx = f.context("Who created Prime Suspect 7?", 1);
  auto p = build_hop_answer_prompt("Who created Prime Suspect 7?", ctx);
  CHECK(p.kind == PromptKind::hop_answer);
  CHECK(p.text.find("Example") == std::string::npos);
  CHECK(p.text.ends_with("Sub-question: Who created Prime Suspect 7?\n"));
  auto empty = build_hop_answer_prompt("q", RetrievedContext{});
  CHECK(empty.text.find("(nothing retrieved)") != std::string::npos);
}

TEST_CASE("final prompt") {
  RobertFixture f;
  auto ctx = f.context(kRobert, 3);
  auto fsl = build_fsl_prompt(kRobert, ctx, {});
  auto c1 = f.context("Which series?", 1);
  auto c2 = f.context("Who created Prime Suspect 7?", 1);
  std::vector<HopEvidence> ev{{"Which series?", &c1, "Prime Suspect 7"}, {"Who created it?", &c2, std::nullopt}};
  auto p = build_final_prompt(fsl, ev);
  CHECK(p.kind == PromptKind::final_answer);
  CHECK(p.text.starts_with(fsl.text));
  CHECK(p.text.find("Additional context:") != std::string::npos);
  CHECK(p.text.find("Sub-question 1: Which series?") != std::string::npos);
  CHECK(p.text.find("Sub-question 2: Who created it?") != std::string::npos);
  CHECK(p.text.find("Intermediate answer 1: Prime Suspect 7") != std::string::npos);
  CHECK(p.text.find("Intermediate answer 2: unknown") != std::string::npos);
  CHECK(p.text.ends_with("Question: " + kRobert + "\n"));
  CHECK_THROWS_AS((void)build_final_prompt(fsl, {}), std::invalid_argument);
  CHECK_THROWS_AS((void)build_final_prompt(build_decomposition_prompt(kRobert, 1, {}), ev), std::invalid_argument);
}

TEST_CASE("parse_response") {
  using K = ParsedResponse::Kind;
  CHECK(parse_response("ANSWER: Lynda La Plante", PromptKind::fsl_answer, true) ==
        ParsedResponse{K::answer, "Lynda La Plante"});
  CHECK(parse_response("NOT_ANSWERABLE", PromptKind::fsl_answer, true) == ParsedResponse{K::not_answerable, ""});
  CHECK(parse_response("  answer:  x  \n", PromptKind::hop_answer, true) == ParsedResponse{K::answer, "x"});
  CHECK(parse_response("thinking...\nANSWER: 1977\nANSWER: 1978", PromptKind::fsl_answer, true).text == "1977");
  CHECK(parse_response("SUBQUESTION: Who?", PromptKind::decompose, true) == ParsedResponse{K::sub_question, "Who?"});

  SUBCASE("unparseable in strict mode") {
    auto r = parse_response("I think it is Lynda", PromptKind::fsl_answer, true);
    CHECK(r.kind == K::unparseable);
    CHECK(r.text == "I think it is Lynda");
    CHECK(parse_response("ANSWER: x", PromptKind::decompose, true).kind == K::unparseable);
    CHECK(parse_response("SUBQUESTION: x", PromptKind::fsl_answer, true).kind == K::unparseable);
    CHECK(parse_response("ANSWER:   ", PromptKind::fsl_answer, true).kind == K::unparseable);
  }
  SUBCASE("lenient mode takes the flattened output") {
    CHECK(parse_response("It is\nLynda", PromptKind::fsl_answer, false) == ParsedResponse{K::answer, "It is Lynda"});
    CHECK(parse_response("Which series?", PromptKind::decompose, false) ==
          ParsedResponse{K::sub_question, "Which series?"});
    CHECK(parse_response(" \n ", PromptKind::fsl_answer, false).kind == K::unparseable);
  }
  SUBCASE("NOT_ANSWERABLE must be the whole line") {
    CHECK(parse_response("NOT_ANSWERABLE, sorry", PromptKind::fsl_answer, true).kind == K::unparseable);
  }
}

TEST_CASE("rendered tags parse back") {
  std::mt19937_64 rng(23);
  const std::string alphabet = "abc XYZ 019 :;,.-'?";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (std::size_t n = 1 + rng() % 30; s.size() < n;) s += alphabet[rng() % alphabet.size()];
    auto trimmed = s;
    trimmed.erase(0, trimmed.find_first_not_of(' '));
    trimmed.erase(trimmed.find_last_not_of(' ') + 1);
    if (trimmed.empty()) continue;
    CHECK(parse_response("ANSWER: " + s, PromptKind::fsl_answer, true) ==
          ParsedResponse{ParsedResponse::Kind::answer, trimmed});
    CHECK(parse_response("SUBQUESTION: " + s, PromptKind::decompose, true) ==
          ParsedResponse{ParsedResponse::Kind::sub_question, trimmed});
  }
}

TEST_CASE("scripted generator") {
  auto p = build_closed_book_prompt("Who wrote it?");
  SUBCASE("first matching rule wins") {
    std::vector<ScriptRule> rules{{"nothing like this", "ANSWER: no"}, {"wrote", "NOT_ANSWERABLE"},
                                  {"Who", "ANSWER: late"}};
    CHECK(scripted(rules, p) == "NOT_ANSWERABLE");
  }
  SUBCASE("no rule matches") {
    try {
      (void)scripted({}, p);
      FAIL("expected a backend error");
    } catch (const BackendError& e) {
      CHECK(std::string(e.what()).find("Who wrote it?") != std::string::npos);
    }
  }
  SUBCASE("output clipped to the configured length") {
    ScriptedGenerator g({{"Who", "ANSWER: abcdefgh"}}, 10);
    CHECK(g.generate(p) == "ANSWER: ab");
  }
  SUBCASE("prepending a non-matching rule changes nothing") {
    std::mt19937_64 rng(5);
    std::vector<ScriptRule> rules{{"Who", "ANSWER: a"}, {"wrote", "ANSWER: b"}};
    for (int i = 0; i < 50; ++i) {
      auto before = scripted(rules, p);
      rules.insert(rules.begin() + static_cast<long>(rng() % (rules.size())), ScriptRule{"#never-" + std::to_string(i), "x"});
      CHECK(scripted(rules, p) == before);
    }
  }
  SUBCASE("rule file parsing") {
    auto rules = ScriptedGenerator::parse_rules(R"([{"match": "a", "response": "b"}])", "s.json");
    CHECK(rules == std::vector<ScriptRule>{{"a", "b"}});
    CHECK_THROWS_AS(ScriptedGenerator::parse_rules("{", "s.json"), DataError);
    CHECK_THROWS_AS(ScriptedGenerator::parse_rules(R"([{"match": 1}])", "s.json"), DataError);
    CHECK(ScriptedGenerator::load_rules(testsupport::fixture_dir() / "robert" / "script.json").size() == 6);
  }
}

TEST_CASE("remote generator wire contract") {
  GeneratorConfig cfg;
  cfg.kind = GeneratorConfig::Kind::remote;
  cfg.endpoint = "http://gen.test/v1/complete";
  cfg.model_name = "some-model";
  cfg.temperature = 0.25;
  auto p = build_closed_book_prompt("q?");

  SUBCASE("request and response") {
    auto fake = std::make_shared<FakeTransport>(
        [](const HttpRequest&) { return HttpResponse{200, R"({"text": "ANSWER: x"})"}; });
    RemoteGenerator g(cfg, fake);
    CHECK(g.generate(p) == "ANSWER: x");
    auto body = nlohmann::json::parse(fake->requests().at(0).body);
    CHECK(body.at("model") == "some-model");
    CHECK(body.at("prompt") == p.text);
    CHECK(body.at("temperature") == 0.25);
    CHECK(fake->requests()[0].url == cfg.endpoint);
  }
  SUBCASE("errors") {
    auto status = std::make_shared<FakeTransport>([](const HttpRequest&) { return HttpResponse{500, ""}; });
    try {
      (void)RemoteGenerator(cfg, status).generate(p);
      FAIL("expected a backend error");
    } catch (const BackendError& e) {
      CHECK(std::string(e.what()).find(cfg.endpoint) != std::string::npos);
    }
    auto malformed = std::make_shared<FakeTransport>([](const HttpRequest&) { return HttpResponse{200, "{}"}; });
    CHECK_THROWS_AS((void)RemoteGenerator(cfg, malformed).generate(p), BackendError);
  }
  SUBCASE("configuration checks") {
    auto fake = std::make_shared<FakeTransport>([](const HttpRequest&) { return HttpResponse{200, "{}"}; });
    auto bad = cfg;
    bad.endpoint.clear();
    CHECK_THROWS_AS(RemoteGenerator(bad, fake), UsageError);
    bad = cfg;
    bad.temperature = -1.0;
    CHECK_THROWS_AS(RemoteGenerator(bad, fake), UsageError);
  }
  SUBCASE("scripted factory needs a script") {
    GeneratorConfig scripted_cfg;
    CHECK_THROWS_AS((void)make_generator(scripted_cfg), UsageError);
  }
}
