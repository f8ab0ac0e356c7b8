#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablehop/corpus.hpp"
#include "tablehop/orchestrator.hpp"

namespace tablehop {

/// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace. Idempotent.
std::string normalize_answer(std::string_view text);

/// Whitespace tokens of the normalized answer.
std::vector<std::string> answer_tokens(std::string_view text);

/// 1 iff the normalized prediction is non-empty and equals some normalized
/// gold. Throws std::invalid_argument when golds is empty.
int exact_match(const std::optional<std::string>& pred, std::span<const std::string> golds);

struct TokenScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_index = 0;  // gold achieving the best F1 (first on ties)

  bool operator==(const TokenScores&) const = default;
};

/// Multiset token overlap against each gold; keeps the gold with the highest
/// F1. An absent or empty (after normalization) prediction scores zero.
TokenScores token_f1(const std::optional<std::string>& pred, std::span<const std::string> golds);

/// What evaluation needs from one answered question.
struct Prediction {
  std::string question_id;
  std::optional<std::string> final_answer;
  Outcome outcome = Outcome::unanswered;
  std::vector<std::string> retrieved_table_ids;  // ranked, for HITS@K
};

Prediction to_prediction(const AnswerRecord& record);

/// Reads answers.jsonl back into predictions. Throws DataError on malformed lines.
std::vector<Prediction> parse_answers_jsonl(std::string_view text, std::string_view source);
std::vector<Prediction> load_answers(const std::filesystem::path& path);

struct ScoredAnswer {
  std::string question_id;
  int em = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string matched_gold;
};

struct AggregateScores {
  double em = 0.0;  // percentages, full precision
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct OutcomeCounts {
  std::size_t answered_fsl = 0;
  std::size_t answered_multihop = 0;
  std::size_t unanswered = 0;
};

struct EvalReport {
  std::vector<ScoredAnswer> per_question;
  AggregateScores aggregate;
  std::map<std::size_t, double> hits;  // K -> percentage
  std::size_t hits_questions = 0;      // questions with a gold table
  OutcomeCounts counts;
};

/// Scores every qa example against its prediction, in qa order. When
/// `retrieval_ranks` is given (question id -> ranked table ids), HITS@K is
/// computed for each K over questions that have a gold table. Throws DataError
/// for duplicate predictions, predictions for unknown questions, or
/// questions without a prediction.
EvalReport evaluate_run(std::span<const Prediction> predictions, std::span<const QAExample> qa,
                        const std::map<std::string, std::vector<std::string>>* retrieval_ranks,
                        std::span<const std::size_t> Ks);

/// Ranked table ids per question, taken from the predictions themselves.
std::map<std::string, std::vector<std::string>> ranks_from_predictions(
    std::span<const Prediction> predictions);

/// report.json contents, aggregates rounded to two decimals alongside full precision.
std::string report_json(const EvalReport& report);

/// Fixed-width table, columns F1, Precision, Recall, EM, then HITS@K lines.
std::string report_table(const EvalReport& report);

double round2(double value);

}  // namespace tablehop
