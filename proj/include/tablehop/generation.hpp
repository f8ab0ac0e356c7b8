#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablehop/fewshot.hpp"
#include "tablehop/http.hpp"
#include "tablehop/retrieval.hpp"

namespace tablehop {

enum class PromptKind { fsl_answer, decompose, hop_answer, final_answer };

std::string_view to_string(PromptKind kind);

struct Prompt {
  PromptKind kind = PromptKind::fsl_answer;
  std::string text;
  // Provenance: "question", "question_id", "hop", "exemplar_ids", "candidate_table_ids".
  std::map<std::string, std::string> meta;

  bool operator==(const Prompt&) const = default;
};

struct ParsedResponse {
  enum class Kind { answer, not_answerable, sub_question, unparseable };

  Kind kind = Kind::unparseable;
  std::string text;  // answer or sub-question text; the raw output when unparseable

  bool operator==(const ParsedResponse&) const = default;
};

inline constexpr std::string_view kAnswerTag = "ANSWER:";
inline constexpr std::string_view kSubQuestionTag = "SUBQUESTION:";
inline constexpr std::string_view kNotAnswerable = "NOT_ANSWERABLE";

/// Prior hop as seen by the decomposition prompt.
struct HopFinding {
  std::string sub_question;
  std::optional<std::string> answer;
};

/// Evidence gathered by one hop, appended to the final prompt.
struct HopEvidence {
  std::string sub_question;
  const RetrievedContext* context = nullptr;
  std::optional<std::string> answer;
};

/// Instruction block, exemplar demonstrations, candidate contexts, then the
/// question. Throws std::invalid_argument when ctx has no candidates.
Prompt build_fsl_prompt(const std::string& question, const RetrievedContext& ctx,
                        std::span<const Exemplar> exemplars);

/// Same answer format as the FSL prompt but no retrieved context at all.
Prompt build_closed_book_prompt(const std::string& question);

/// Asks for the next sub-question. Hops after the first list every earlier
/// sub-question with its finding. Throws std::invalid_argument if
/// hop_index == 0, or hop_index > 1 with no prior hops.
Prompt build_decomposition_prompt(const std::string& question, std::size_t hop_index,
                                  std::span<const HopFinding> prior_hops);

/// Zero-shot answer prompt for a sub-question over its own retrieved context.
Prompt build_hop_answer_prompt(const std::string& sub_question, const RetrievedContext& ctx);

/// The FSL prompt followed by an "Additional context:" section with each hop's
/// sub-question, retrieved contexts and intermediate answer, then the question
/// restated. Throws std::invalid_argument when fsl_prompt is not an FSL prompt
/// or there is no hop evidence.
Prompt build_final_prompt(const Prompt& fsl_prompt, std::span<const HopEvidence> hop_evidence);

/// Scans lines top-down for the first tag that is legal for `expected`:
/// SUBQUESTION: for decompose prompts, ANSWER: or NOT_ANSWERABLE otherwise.
/// Without a legal tag, strict parsing yields `unparseable`; lenient parsing
/// takes the whole output, flattened to one line, as the answer (or the
/// sub-question for decompose prompts).
ParsedResponse parse_response(std::string_view raw, PromptKind expected, bool strict);

struct GeneratorConfig {
  enum class Kind { remote, scripted };

  Kind kind = Kind::scripted;
  std::string endpoint;     // remote
  std::string model_name;   // remote, passed through opaquely
  double temperature = 0.0;
  std::size_t max_output_chars = 4000;
  std::filesystem::path script_path;  // scripted
  bool strict_parsing = true;
  double timeout_seconds = 60.0;
  std::size_t max_in_flight = 4;

  bool operator==(const GeneratorConfig&) const = default;
};

class Generator {
 public:
  explicit Generator(std::size_t max_output_chars) : max_output_chars_(max_output_chars) {}
  virtual ~Generator() = default;

  /// Backend output, clipped to max_output_chars (with a logged warning).
  std::string generate(const Prompt& prompt) const;

 protected:
  virtual std::string complete(const Prompt& prompt) const = 0;

 private:
  std::size_t max_output_chars_;
};

struct ScriptRule {
  std::string match;
  std::string response;

  bool operator==(const ScriptRule&) const = default;
};

/// Replays canned responses: the first rule whose `match` occurs in the prompt
/// text wins. No match is a BackendError naming the prompt's provenance.
class ScriptedGenerator final : public Generator {
 public:
  explicit ScriptedGenerator(std::vector<ScriptRule> rules, std::size_t max_output_chars = 4000);

  /// Rule file: a JSON list of {"match": str, "response": str}.
  static std::vector<ScriptRule> parse_rules(std::string_view json_text, std::string_view source);
  static std::vector<ScriptRule> load_rules(const std::filesystem::path& path);

  const std::vector<ScriptRule>& rules() const { return rules_; }

 protected:
  std::string complete(const Prompt& prompt) const override;

 private:
  std::vector<ScriptRule> rules_;
};

/// POST endpoint {"model": str, "prompt": str, "temperature": num} -> {"text": str}.
class RemoteGenerator final : public Generator {
 public:
  RemoteGenerator(GeneratorConfig config, std::shared_ptr<HttpTransport> transport);

 protected:
  std::string complete(const Prompt& prompt) const override;

 private:
  GeneratorConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::counting_semaphore<> in_flight_;
};

/// A null transport selects the real network client.
std::unique_ptr<Generator> make_generator(const GeneratorConfig& config,
                                          std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace tablehop
