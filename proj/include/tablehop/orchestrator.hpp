#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablehop/corpus.hpp"
#include "tablehop/embedding.hpp"
#include "tablehop/error.hpp"
#include "tablehop/fewshot.hpp"
#include "tablehop/generation.hpp"
#include "tablehop/retrieval.hpp"
#include "tablehop/vindex.hpp"

namespace tablehop {

/// Pipeline variants, from no retrieval at all up to the full hop loop.
enum class Mode { llm_only, zero_shot, fsl, fsl_cot_rag };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

enum class Outcome { answered_fsl, answered_multihop, unanswered };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

struct PipelineConfig {
  RetrievalConfig retrieval;
  Budgets budgets;
  std::size_t shots = 1;
  std::size_t max_hops = 2;
  bool strict_parsing = true;
  Mode mode = Mode::fsl_cot_rag;

  bool operator==(const PipelineConfig&) const = default;
};

struct HopRecord {
  std::size_t hop_index = 0;
  std::string sub_question;
  RetrievedContext context;
  std::optional<std::string> intermediate_answer;

  bool operator==(const HopRecord&) const = default;
};

struct AnswerRecord {
  std::string question_id;
  std::string question;
  std::optional<std::string> final_answer;
  Outcome outcome = Outcome::unanswered;
  std::vector<HopRecord> hops;
  RetrievedContext fsl_context;
  std::vector<std::string> exemplar_ids;
  std::size_t prompts_issued = 0;
  std::chrono::nanoseconds elapsed{0};
  std::optional<std::string> error;  // set when a failure cut the question short
  std::optional<ErrorKind> error_kind;

  /// Field-wise equality ignoring `elapsed`.
  bool same_result(const AnswerRecord& other) const;
};

/// Read-only resources shared by every question of a run.
struct Pipeline {
  const Corpus& corpus;
  const VectorIndex& table_index;
  const ExemplarStore& exemplars;
  const Embedder& embedder;
  const Generator& generator;
  PassageEmbeddingCache* passage_cache = nullptr;
};

/// A question aborted by a backend or data failure. Carries the trace built
/// up to the failure.
class QuestionAborted : public Error {
 public:
  QuestionAborted(const Error& cause, AnswerRecord partial)
      : Error(cause.kind(), cause.what()), partial_(std::move(partial)) {}
  const AnswerRecord& partial() const { return partial_; }

 private:
  AnswerRecord partial_;
};

/// Raised by run_hop when a strict parse of the decomposition reply fails.
class HopPathAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One hop: decompose, retrieve for the sub-question, answer it over that
/// context with no exemplars. `prompts_issued` is incremented per generator call.
HopRecord run_hop(std::size_t hop_index, const QAExample& q, std::span<const HopRecord> prior,
                  const Pipeline& pipeline, const PipelineConfig& cfg, std::size_t& prompts_issued);

AnswerRecord answer_question(const QAExample& q, const Pipeline& pipeline, const PipelineConfig& cfg);

/// Answers every question with up to `parallelism` workers. Results keep input
/// order; aborted questions come back unanswered with `error` set.
std::vector<AnswerRecord> answer_all(std::span<const QAExample> questions, const Pipeline& pipeline,
                                     const PipelineConfig& cfg, std::size_t parallelism);

/// One answers.jsonl line (no trailing newline):
/// {"question_id", "final_answer", "outcome", "hops": [{"sub_question",
/// "candidate_table_ids", "passage_ids", "intermediate_answer"}],
/// "prompts_issued", "retrieved_table_ids"} plus "error" when set.
std::string answer_record_json(const AnswerRecord& record);
std::string answers_jsonl(std::span<const AnswerRecord> records);

}  // namespace tablehop
