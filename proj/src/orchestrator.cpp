#include "tablehop/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace tablehop {

namespace {

std::vector<HopFinding> findings_of(std::span<const HopRecord> hops) {
  std::vector<HopFinding> out;
  out.reserve(hops.size());
  for (const auto& h : hops) out.push_back({h.sub_question, h.intermediate_answer});
  return out;
}

std::string generate_counted(const Generator& generator, Prompt& prompt, const QAExample& q,
                             std::size_t& prompts_issued) {
  prompt.meta["question_id"] = q.id;
  ++prompts_issued;
  return generator.generate(prompt);
}

void run_pipeline(const QAExample& q, const Pipeline& pipeline, const PipelineConfig& cfg,
                  AnswerRecord& record) {
  const bool strict = cfg.strict_parsing;

  if (cfg.mode == Mode::llm_only) {
    auto prompt = build_closed_book_prompt(q.question);
    auto raw = generate_counted(pipeline.generator, prompt, q, record.prompts_issued);
    auto parsed = parse_response(raw, PromptKind::fsl_answer, strict);
    if (parsed.kind == ParsedResponse::Kind::answer) {
      record.final_answer = parsed.text;
      record.outcome = Outcome::answered_fsl;
    }
    return;
  }

  record.fsl_context = assemble_context(q.question, pipeline.corpus, pipeline.table_index,
                                        pipeline.embedder, cfg.retrieval, cfg.budgets,
                                        pipeline.passage_cache);
  if (record.fsl_context.candidates.empty()) {
    throw DataError("question \"" + q.id + "\": no candidate tables retrieved (empty table index)");
  }

  std::vector<Exemplar> exemplars;
  if (cfg.mode != Mode::zero_shot && cfg.shots > 0) {
    exemplars = select_exemplars(pipeline.exemplars, pipeline.embedder, q.question,
                                 record.fsl_context.candidates.front().context.text, cfg.shots);
  }
  for (const auto& ex : exemplars) record.exemplar_ids.push_back(ex.source_id);

  auto fsl_prompt = build_fsl_prompt(q.question, record.fsl_context, exemplars);
  auto raw = generate_counted(pipeline.generator, fsl_prompt, q, record.prompts_issued);
  auto parsed = parse_response(raw, PromptKind::fsl_answer, strict);
  if (parsed.kind == ParsedResponse::Kind::answer) {
    record.final_answer = parsed.text;
    record.outcome = Outcome::answered_fsl;
    return;
  }
  if (cfg.mode != Mode::fsl_cot_rag) return;

  // NOT_ANSWERABLE or an unparseable reply: decompose and gather more evidence.
  for (std::size_t hop = 1; hop <= cfg.max_hops; ++hop) {
    try {
      record.hops.push_back(run_hop(hop, q, record.hops, pipeline, cfg, record.prompts_issued));
    } catch (const HopPathAborted& e) {
      spdlog::debug("question {}: {}", q.id, e.what());
      return;
    }
  }

  std::vector<HopEvidence> evidence;
  evidence.reserve(record.hops.size());
  for (const auto& h : record.hops) {
    evidence.push_back({h.sub_question, &h.context, h.intermediate_answer});
  }
  auto final_prompt = build_final_prompt(fsl_prompt, evidence);
  raw = generate_counted(pipeline.generator, final_prompt, q, record.prompts_issued);
  parsed = parse_response(raw, PromptKind::final_answer, strict);
  if (parsed.kind == ParsedResponse::Kind::answer) {
    record.final_answer = parsed.text;
    record.outcome = Outcome::answered_multihop;
  }
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::llm_only:
      return "llm_only";
    case Mode::zero_shot:
      return "zero_shot";
    case Mode::fsl:
      return "fsl";
    case Mode::fsl_cot_rag:
      return "fsl_cot_rag";
  }
  return "fsl_cot_rag";
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::llm_only, Mode::zero_shot, Mode::fsl, Mode::fsl_cot_rag}) {
    if (to_string(m) == text) return m;
  }
  throw UsageError("unknown mode \"" + std::string(text) +
                   "\" (expected llm_only, zero_shot, fsl or fsl_cot_rag)");
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::answered_fsl:
      return "answered_fsl";
    case Outcome::answered_multihop:
      return "answered_multihop";
    case Outcome::unanswered:
      return "unanswered";
  }
  return "unanswered";
}

Outcome parse_outcome(std::string_view text) {
  for (Outcome o : {Outcome::answered_fsl, Outcome::answered_multihop, Outcome::unanswered}) {
    if (to_string(o) == text) return o;
  }
  throw DataError("unknown outcome \"" + std::string(text) + "\"");
}

bool AnswerRecord::same_result(const AnswerRecord& other) const {
  return question_id == other.question_id && question == other.question &&
         final_answer == other.final_answer && outcome == other.outcome && hops == other.hops &&
         fsl_context == other.fsl_context && exemplar_ids == other.exemplar_ids &&
         prompts_issued == other.prompts_issued && error == other.error &&
         error_kind == other.error_kind;
}

HopRecord run_hop(std::size_t hop_index, const QAExample& q, std::span<const HopRecord> prior,
                  const Pipeline& pipeline, const PipelineConfig& cfg, std::size_t& prompts_issued) {
  if (hop_index != prior.size() + 1) {
    throw std::invalid_argument("run_hop: hop " + std::to_string(hop_index) + " after " +
                                std::to_string(prior.size()) + " earlier hops");
  }
  auto findings = findings_of(prior);
  auto decompose = build_decomposition_prompt(q.question, hop_index, findings);
  auto raw = generate_counted(pipeline.generator, decompose, q, prompts_issued);
  auto parsed = parse_response(raw, PromptKind::decompose, cfg.strict_parsing);
  if (parsed.kind != ParsedResponse::Kind::sub_question) {
    throw HopPathAborted("hop " + std::to_string(hop_index) +
                         ": decomposition reply carried no SUBQUESTION line");
  }

  HopRecord hop;
  hop.hop_index = hop_index;
  hop.sub_question = parsed.text;
  hop.context = assemble_context(hop.sub_question, pipeline.corpus, pipeline.table_index,
                                 pipeline.embedder, cfg.retrieval, cfg.budgets,
                                 pipeline.passage_cache);

  auto answer_prompt = build_hop_answer_prompt(hop.sub_question, hop.context);
  answer_prompt.meta["hop"] = std::to_string(hop_index);
  raw = generate_counted(pipeline.generator, answer_prompt, q, prompts_issued);
  parsed = parse_response(raw, PromptKind::hop_answer, cfg.strict_parsing);
  if (parsed.kind == ParsedResponse::Kind::answer) hop.intermediate_answer = parsed.text;
  return hop;
}

AnswerRecord answer_question(const QAExample& q, const Pipeline& pipeline, const PipelineConfig& cfg) {
  if (cfg.max_hops == 0) throw std::invalid_argument("answer_question: max_hops must be >= 1");
  AnswerRecord record;
  record.question_id = q.id;
  record.question = q.question;
  auto start = std::chrono::steady_clock::now();
  try {
    run_pipeline(q, pipeline, cfg, record);
  } catch (const Error& e) {
    record.final_answer.reset();
    record.outcome = Outcome::unanswered;
    record.error = e.what();
    record.error_kind = e.kind();
    record.elapsed = std::chrono::steady_clock::now() - start;
    throw QuestionAborted(e, std::move(record));
  }
  record.elapsed = std::chrono::steady_clock::now() - start;
  return record;
}

std::vector<AnswerRecord> answer_all(std::span<const QAExample> questions, const Pipeline& pipeline,
                                     const PipelineConfig& cfg, std::size_t parallelism) {
  std::vector<AnswerRecord> out(questions.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < questions.size(); i = next++) {
      try {
        out[i] = answer_question(questions[i], pipeline, cfg);
      } catch (const QuestionAborted& e) {
        spdlog::warn("question {} aborted: {}", questions[i].id, e.what());
        out[i] = e.partial();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = questions.size();
      }
    }
  };

  std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, questions.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string answer_record_json(const AnswerRecord& record) {
  using ojson = nlohmann::ordered_json;
  ojson hops = ojson::array();
  for (const auto& h : record.hops) {
    ojson hop;
    hop["sub_question"] = h.sub_question;
    hop["candidate_table_ids"] = h.context.table_ids();
    hop["passage_ids"] = h.context.passage_ids();
    hop["intermediate_answer"] = h.intermediate_answer ? ojson(*h.intermediate_answer) : ojson(nullptr);
    hops.push_back(std::move(hop));
  }
  ojson line;
  line["question_id"] = record.question_id;
  line["final_answer"] = record.final_answer ? ojson(*record.final_answer) : ojson(nullptr);
  line["outcome"] = to_string(record.outcome);
  line["hops"] = std::move(hops);
  line["prompts_issued"] = record.prompts_issued;
  line["retrieved_table_ids"] = record.fsl_context.table_ids();
  if (record.error) line["error"] = *record.error;
  return line.dump();
}

std::string answers_jsonl(std::span<const AnswerRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += answer_record_json(r);
    out += '\n';
  }
  return out;
}

}  // namespace tablehop
