#include "tablehop/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tablehop/config.hpp"
#include "tablehop/corpus.hpp"
#include "tablehop/error.hpp"
#include "tablehop/evaluation.hpp"
#include "tablehop/fewshot.hpp"
#include "tablehop/orchestrator.hpp"
#include "tablehop/retrieval.hpp"
#include "tablehop/vindex.hpp"

namespace tablehop {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
      return kExitUsage;
    case ErrorKind::data:
      return kExitData;
    case ErrorKind::backend:
      return kExitBackend;
  }
  return kExitData;
}

const fs::path& require_path(const fs::path& path, std::string_view key) {
  if (path.empty()) {
    throw UsageError("missing required path \"" + std::string(key) + "\" (set it in the config or by flag)");
  }
  if (!fs::exists(path)) throw DataError(path.string() + ": no such file");
  return path;
}

Corpus load_checked_corpus(const RunConfig& cfg, std::ostream& err) {
  std::vector<std::string> warnings;
  auto corpus = load_corpus(require_path(cfg.tables_path, "corpus.tables"),
                            require_path(cfg.passages_path, "corpus.passages"), &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return corpus;
}

bool needs_exemplars(const PipelineConfig& p) {
  return p.shots > 0 && (p.mode == Mode::fsl || p.mode == Mode::fsl_cot_rag);
}

struct Flags {
  std::optional<std::string> config;
  std::map<std::string, std::string> values;  // dotted key -> text
  bool lenient = false;
  bool verbose = false;
};

void add_override(CLI::App& app, Flags& flags, const std::string& name, const std::string& key,
                  const std::string& help) {
  app.add_option_function<std::string>(
         name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help)
      ->configurable(false);
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto corpus = load_checked_corpus(cfg, err);
  auto report = validate_corpus(corpus);
  for (const auto& e : report.errors) out << "error: " << e << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << corpus.tables.size() << " tables, " << corpus.passages.size() << " passages\n";
  out << report.error_count << " errors, " << report.warnings.size() << " warnings\n";
  return report.ok() ? kExitOk : kExitData;
}

int cmd_build_index(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto corpus = load_checked_corpus(cfg, err);
  auto report = validate_corpus(corpus);
  if (!report.ok()) {
    for (const auto& e : report.errors) err << "error: " << e << "\n";
    throw DataError(cfg.tables_path.string() + ": corpus has " + std::to_string(report.error_count) +
                    " validation errors");
  }
  auto embedder = make_embedder(cfg.embedder);
  auto index = build_table_index(corpus, *embedder, cfg.pipeline.budgets);
  save_index(index, cfg.table_index_path);
  out << "table index: " << index.size() << " entries, dim " << index.dim() << " -> "
      << cfg.table_index_path.string() << "\n";

  if (!cfg.train_path.empty()) {
    auto train = load_qa_set(require_path(cfg.train_path, "splits.train"), Split::train);
    PassageEmbeddingCache cache;
    auto store = build_exemplar_store(train, corpus, *embedder, cfg.pipeline.retrieval,
                                      cfg.pipeline.budgets, &cache);
    save_exemplar_store(store, cfg.exemplar_index_path);
    out << "exemplar store: " << store.size() << " exemplars -> "
        << cfg.exemplar_index_path.string() << "\n";
  }
  echo_config(cfg);
  return kExitOk;
}

int cmd_retrieve(const RunConfig& cfg, const std::string& question, std::optional<std::size_t> k,
                 std::ostream& out) {
  auto index = load_index(require_path(cfg.table_index_path, "index.tables"));
  auto embedder = make_embedder(cfg.embedder);
  auto hits = retrieve_tables(question, index, *embedder, k.value_or(cfg.pipeline.retrieval.k_tables));
  for (const auto& hit : hits) {
    nlohmann::ordered_json line = {{"table_id", hit.id}, {"score", hit.score}};
    out << line.dump() << "\n";
  }
  return kExitOk;
}

int cmd_answer(const RunConfig& cfg, const std::optional<std::string>& question,
               const std::string& question_id, const std::optional<std::string>& eval_set,
               std::ostream& out, std::ostream& err) {
  std::vector<QAExample> questions;
  if (question) {
    QAExample q;
    q.id = question_id;
    q.question = *question;
    q.answers = {""};
    questions.push_back(std::move(q));
  } else {
    questions = load_qa_set(require_path(*eval_set, "--eval-set"), Split::dev);
  }

  Corpus corpus;
  VectorIndex table_index;
  ExemplarStore exemplars;
  if (cfg.pipeline.mode != Mode::llm_only) {
    corpus = load_checked_corpus(cfg, err);
    table_index = load_index(require_path(cfg.table_index_path, "index.tables"));
    if (needs_exemplars(cfg.pipeline)) {
      exemplars = load_exemplar_store(require_path(cfg.exemplar_index_path, "index.exemplars"));
    }
  }
  auto embedder = make_embedder(cfg.embedder);
  auto generator = make_generator(cfg.generator);
  PassageEmbeddingCache cache;
  Pipeline pipeline{corpus, table_index, exemplars, *embedder, *generator, &cache};

  auto records = answer_all(questions, pipeline, cfg.pipeline, cfg.parallelism);
  auto text = answers_jsonl(records);
  auto answers_path = cfg.output_dir / "answers.jsonl";
  write_file(answers_path, text);
  echo_config(cfg);
  if (question) out << text;

  std::size_t answered = 0;
  int code = kExitOk;
  for (const auto& r : records) {
    if (r.outcome != Outcome::unanswered) ++answered;
    if (r.error && code == kExitOk) code = exit_code_for(r.error_kind.value_or(ErrorKind::data));
  }
  err << answered << "/" << records.size() << " answered -> " << answers_path.string() << "\n";
  return code;
}

int cmd_eval(const RunConfig& cfg, const std::string& answers_path, const std::string& qa_path,
             const std::vector<std::size_t>& ks, std::ostream& out) {
  auto predictions = load_answers(require_path(answers_path, "--answers"));
  auto qa = load_qa_set(require_path(qa_path, "--qa"), Split::dev);
  for (std::size_t k : ks) {
    if (k == 0) throw UsageError("--ks: K must be at least 1");
  }
  auto ranks = ranks_from_predictions(predictions);
  auto report = evaluate_run(predictions, qa, &ranks, ks);
  write_file(cfg.output_dir / "report.json", report_json(report));
  echo_config(cfg);
  out << report_table(report);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-domain question answering over tables and linked passages."};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("-c,--config", flags.config, "JSON run config");
  add_override(app, flags, "--tables", "corpus.tables", "tables.jsonl");
  add_override(app, flags, "--passages", "corpus.passages", "passages.jsonl");
  add_override(app, flags, "--train", "splits.train", "train split (QA jsonl)");
  add_override(app, flags, "--table-index", "index.tables", "table index manifest");
  add_override(app, flags, "--exemplar-index", "index.exemplars", "exemplar store manifest");
  add_override(app, flags, "--output-dir", "output_dir", "where outputs and the resolved config go");
  add_override(app, flags, "--embedder", "embedder.kind", "hashing | remote");
  add_override(app, flags, "--dim", "embedder.dim", "embedding dimension");
  add_override(app, flags, "--embedder-endpoint", "embedder.endpoint", "remote embedder URL");
  add_override(app, flags, "--generator", "generator.kind", "scripted | remote");
  add_override(app, flags, "--generator-endpoint", "generator.endpoint", "remote generator URL");
  add_override(app, flags, "--model", "generator.model_name", "model name sent to the generator");
  add_override(app, flags, "--script", "generator.script", "scripted generator rule file");
  add_override(app, flags, "--mode", "pipeline.mode", "llm_only | zero_shot | fsl | fsl_cot_rag");
  add_override(app, flags, "--k-tables", "pipeline.k_tables", "tables retrieved per query");
  add_override(app, flags, "--k-passages", "pipeline.k_passages", "passages attached per table");
  add_override(app, flags, "--shots", "pipeline.shots", "exemplars per prompt");
  add_override(app, flags, "--max-hops", "pipeline.max_hops", "decomposition hops");
  add_override(app, flags, "--table-chars", "budgets.table_chars", "flattened table budget");
  add_override(app, flags, "--passage-chars", "budgets.passage_chars", "per-passage budget");
  add_override(app, flags, "--parallelism", "parallelism", "questions answered concurrently");
  add_override(app, flags, "--seed", "seed", "reserved");
  app.add_flag("--lenient", flags.lenient, "lenient response parsing");
  app.add_flag("-v,--verbose", flags.verbose, "debug logging");

  auto* ingest = app.add_subcommand("ingest", "load and validate the corpus");

  auto* build = app.add_subcommand("build-index", "build the table index (and exemplar store with --train)");

  auto* retrieve = app.add_subcommand("retrieve", "print the top tables for a question");
  std::string retrieve_question;
  std::optional<std::size_t> retrieve_k;
  retrieve->add_option("-q,--question", retrieve_question, "question text")->required();
  retrieve->add_option("-k", retrieve_k, "number of tables")->check(CLI::PositiveNumber);

  auto* answer = app.add_subcommand("answer", "answer one question or a QA file");
  std::optional<std::string> answer_question_text;
  std::optional<std::string> eval_set;
  std::string question_id = "question";
  auto* q_opt = answer->add_option("-q,--question", answer_question_text, "question text");
  auto* set_opt = answer->add_option("--eval-set", eval_set, "QA jsonl to answer");
  answer->add_option("--id", question_id, "id recorded for --question");
  q_opt->excludes(set_opt);
  answer->require_option(1);

  auto* eval = app.add_subcommand("eval", "score answers.jsonl against a QA file");
  std::string answers_path;
  std::string qa_path;
  std::vector<std::size_t> ks{1, 3};
  eval->add_option("--answers", answers_path, "answers.jsonl")->required();
  eval->add_option("--qa", qa_path, "QA jsonl with gold answers")->required();
  eval->add_option("--ks", ks, "HITS@K cutoffs, comma separated")->delimiter(',');

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("tablehop");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::get("tablehop");
  if (!logger) logger = spdlog::stderr_color_mt("tablehop");
  spdlog::set_default_logger(logger);
  spdlog::set_level(flags.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (flags.lenient) flags.values["pipeline.strict_parsing"] = "false";
    auto cfg = load_config(flags.config ? std::optional<fs::path>(*flags.config) : std::nullopt,
                           flags.values);
    if (*ingest) return cmd_ingest(cfg, out, err);
    if (*build) return cmd_build_index(cfg, out, err);
    if (*retrieve) return cmd_retrieve(cfg, retrieve_question, retrieve_k, out);
    if (*answer) return cmd_answer(cfg, answer_question_text, question_id, eval_set, out, err);
    if (*eval) return cmd_eval(cfg, answers_path, qa_path, ks, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace tablehop
