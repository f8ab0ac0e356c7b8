#include "tablehop/generation.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tablehop/corpus.hpp"
#include "tablehop/error.hpp"
#include "tablehop/utf8.hpp"
#include "slot_guard.hpp"

namespace tablehop {

using json = nlohmann::json;

namespace {

constexpr std::string_view kAnswerInstructions =
    "Reply with exactly one line of the form \"ANSWER: <answer>\".\n"
    "If the answer cannot be found, reply with the single line NOT_ANSWERABLE.\n";

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(s[i])) !=
        std::toupper(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

void append_contexts(std::string& text, const RetrievedContext& ctx) {
  for (const auto& cand : ctx.candidates) {
    text += "Context:\n";
    text += cand.context.text;
    text += "\n\n";
  }
}

// Output collapsed to a single trimmed line.
std::string one_line(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char ch : trim(raw)) {
    if (ch == '\n' || ch == '\r') {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty() && out.back() != ' ' && ch != ' ') out += ' ';
    pending_space = false;
    out += ch;
  }
  return std::string(trim(out));
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::fsl_answer:
      return "fsl_answer";
    case PromptKind::decompose:
      return "decompose";
    case PromptKind::hop_answer:
      return "hop_answer";
    case PromptKind::final_answer:
      return "final_answer";
  }
  return "fsl_answer";
}

Prompt build_fsl_prompt(const std::string& question, const RetrievedContext& ctx,
                        std::span<const Exemplar> exemplars) {
  if (ctx.candidates.empty()) {
    throw std::invalid_argument("build_fsl_prompt: retrieved context has no candidate tables");
  }
  Prompt prompt;
  prompt.kind = PromptKind::fsl_answer;
  std::string& text = prompt.text;
  text += "Answer the question using only the tables and passages given below.\n";
  text += kAnswerInstructions;
  text += "\n";

  std::vector<std::string> exemplar_ids;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto& ex = exemplars[i];
    text += "Example " + std::to_string(i + 1) + ":\n";
    text += "Question: " + ex.question + "\n";
    text += "Context:\n" + ex.context_text + "\n";
    text += "ANSWER: " + join(ex.answers, "; ") + "\n\n";
    exemplar_ids.push_back(ex.source_id);
  }
  append_contexts(text, ctx);
  text += "Question: " + question + "\n";

  prompt.meta["question"] = question;
  prompt.meta["exemplar_ids"] = join(exemplar_ids, ",");
  prompt.meta["candidate_table_ids"] = join(ctx.table_ids(), ",");
  return prompt;
}

Prompt build_closed_book_prompt(const std::string& question) {
  Prompt prompt;
  prompt.kind = PromptKind::fsl_answer;
  prompt.text = "Answer the question.\n";
  prompt.text += kAnswerInstructions;
  prompt.text += "\nQuestion: " + question + "\n";
  prompt.meta["question"] = question;
  return prompt;
}

Prompt build_decomposition_prompt(const std::string& question, std::size_t hop_index,
                                  std::span<const HopFinding> prior_hops) {
  if (hop_index == 0) throw std::invalid_argument("build_decomposition_prompt: hops count from 1");
  if (hop_index > 1 && prior_hops.empty()) {
    throw std::invalid_argument("build_decomposition_prompt: hop " + std::to_string(hop_index) +
                                " requires the earlier hops");
  }
  Prompt prompt;
  prompt.kind = PromptKind::decompose;
  std::string& text = prompt.text;
  text += "The original question is too complex to answer in one step.\n";
  text += "Break it into a chain of simpler sub-questions and write the next one.\n";
  text += "Reply with exactly one line of the form \"SUBQUESTION: <sub-question>\".\n\n";
  text += "Original question: " + question + "\n";
  for (std::size_t i = 0; i < prior_hops.size(); ++i) {
    const auto n = std::to_string(i + 1);
    text += "Sub-question " + n + ": " + prior_hops[i].sub_question + "\n";
    text += "Finding " + n + ": " + prior_hops[i].answer.value_or("unknown") + "\n";
  }
  text += "Next sub-question number: " + std::to_string(hop_index) + "\n";

  prompt.meta["question"] = question;
  prompt.meta["hop"] = std::to_string(hop_index);
  return prompt;
}

Prompt build_hop_answer_prompt(const std::string& sub_question, const RetrievedContext& ctx) {
  Prompt prompt;
  prompt.kind = PromptKind::hop_answer;
  std::string& text = prompt.text;
  text += "Answer the sub-question using only the tables and passages given below.\n";
  text += kAnswerInstructions;
  text += "\n";
  if (ctx.candidates.empty()) text += "Context:\n(nothing retrieved)\n\n";
  append_contexts(text, ctx);
  text += "Sub-question: " + sub_question + "\n";
  prompt.meta["question"] = sub_question;
  prompt.meta["candidate_table_ids"] = join(ctx.table_ids(), ",");
  return prompt;
}

Prompt build_final_prompt(const Prompt& fsl_prompt, std::span<const HopEvidence> hop_evidence) {
  if (fsl_prompt.kind != PromptKind::fsl_answer) {
    throw std::invalid_argument("build_final_prompt: expected an fsl_answer prompt");
  }
  if (hop_evidence.empty()) {
    throw std::invalid_argument("build_final_prompt: at least one hop of evidence is required");
  }
  Prompt prompt;
  prompt.kind = PromptKind::final_answer;
  prompt.meta = fsl_prompt.meta;
  std::string& text = prompt.text;
  text = fsl_prompt.text;
  text += "\nAdditional context:\n";
  for (std::size_t i = 0; i < hop_evidence.size(); ++i) {
    const auto& hop = hop_evidence[i];
    const auto n = std::to_string(i + 1);
    text += "Sub-question " + n + ": " + hop.sub_question + "\n";
    if (hop.context != nullptr) append_contexts(text, *hop.context);
    text += "Intermediate answer " + n + ": " + hop.answer.value_or("unknown") + "\n\n";
  }
  auto question = fsl_prompt.meta.find("question");
  text += "Question: " + (question != fsl_prompt.meta.end() ? question->second : std::string()) + "\n";
  prompt.meta["hops"] = std::to_string(hop_evidence.size());
  return prompt;
}

ParsedResponse parse_response(std::string_view raw, PromptKind expected, bool strict) {
  const bool wants_sub_question = expected == PromptKind::decompose;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    auto line = trim(raw.substr(pos, end - pos));
    pos = end + 1;

    if (wants_sub_question) {
      if (starts_with_icase(line, kSubQuestionTag)) {
        auto rest = trim(line.substr(kSubQuestionTag.size()));
        if (!rest.empty()) return {ParsedResponse::Kind::sub_question, std::string(rest)};
      }
    } else {
      if (starts_with_icase(line, kAnswerTag)) {
        auto rest = trim(line.substr(kAnswerTag.size()));
        if (!rest.empty()) return {ParsedResponse::Kind::answer, std::string(rest)};
      } else if (line == kNotAnswerable) {
        return {ParsedResponse::Kind::not_answerable, {}};
      }
    }
    if (end == raw.size()) break;
  }

  auto flat = one_line(raw);
  if (strict || flat.empty()) return {ParsedResponse::Kind::unparseable, std::string(raw)};
  return {wants_sub_question ? ParsedResponse::Kind::sub_question : ParsedResponse::Kind::answer,
          std::move(flat)};
}

std::string Generator::generate(const Prompt& prompt) const {
  auto out = complete(prompt);
  if (utf8::length(out) > max_output_chars_) {
    spdlog::warn("generator output for {} prompt truncated to {} characters", to_string(prompt.kind),
                 max_output_chars_);
    out = std::string(utf8::prefix(out, max_output_chars_));
  }
  return out;
}

ScriptedGenerator::ScriptedGenerator(std::vector<ScriptRule> rules, std::size_t max_output_chars)
    : Generator(max_output_chars), rules_(std::move(rules)) {}

std::vector<ScriptRule> ScriptedGenerator::parse_rules(std::string_view json_text,
                                                       std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(source) + ": malformed script: " + e.what());
  }
  if (!doc.is_array()) throw DataError(std::string(source) + ": script must be a JSON list of rules");
  std::vector<ScriptRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rule = doc[i];
    if (!rule.is_object() || !rule.contains("match") || !rule.contains("response") ||
        !rule["match"].is_string() || !rule["response"].is_string()) {
      throw DataError(std::string(source) + ": rule " + std::to_string(i + 1) +
                      " must be {\"match\": str, \"response\": str}");
    }
    rules.push_back({rule["match"].get<std::string>(), rule["response"].get<std::string>()});
  }
  return rules;
}

std::vector<ScriptRule> ScriptedGenerator::load_rules(const std::filesystem::path& path) {
  return parse_rules(read_file(path), path.string());
}

std::string ScriptedGenerator::complete(const Prompt& prompt) const {
  for (const auto& rule : rules_) {
    if (prompt.text.find(rule.match) != std::string::npos) return rule.response;
  }
  std::string provenance;
  for (const auto& [key, value] : prompt.meta) {
    provenance += " " + key + "=\"" + value + "\"";
  }
  throw BackendError("scripted generator: no rule matches the " + std::string(to_string(prompt.kind)) +
                     " prompt;" + provenance);
}

RemoteGenerator::RemoteGenerator(GeneratorConfig config, std::shared_ptr<HttpTransport> transport)
    : Generator(config.max_output_chars),
      config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (config_.endpoint.empty()) throw UsageError("remote generator: endpoint must be set");
  if (config_.temperature < 0.0) throw UsageError("remote generator: temperature must be >= 0");
  if (!transport_) throw std::invalid_argument("remote generator: null transport");
}

std::string RemoteGenerator::complete(const Prompt& prompt) const {
  const auto& endpoint = config_.endpoint;
  HttpRequest request;
  request.url = endpoint;
  request.body = json{{"model", config_.model_name},
                      {"prompt", prompt.text},
                      {"temperature", config_.temperature}}
                     .dump();
  request.headers = default_json_headers();
  request.timeout = std::chrono::milliseconds(static_cast<long long>(config_.timeout_seconds * 1000));

  HttpResponse response;
  {
    detail::SlotGuard slot(in_flight_);
    try {
      response = transport_->post(request);
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError("generation endpoint " + endpoint + ": " + e.what());
    }
  }

  if (response.status < 200 || response.status >= 300) {
    throw BackendError("generation endpoint " + endpoint + " returned HTTP " +
                       std::to_string(response.status));
  }
  try {
    auto body = json::parse(response.body);
    return body.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError("generation endpoint " + endpoint + ": malformed response: " + e.what());
  }
}

std::unique_ptr<Generator> make_generator(const GeneratorConfig& config,
                                          std::shared_ptr<HttpTransport> transport) {
  switch (config.kind) {
    case GeneratorConfig::Kind::scripted:
      if (config.script_path.empty()) throw UsageError("scripted generator: script path must be set");
      return std::make_unique<ScriptedGenerator>(ScriptedGenerator::load_rules(config.script_path),
                                                 config.max_output_chars);
    case GeneratorConfig::Kind::remote:
      if (!transport) transport = make_http_transport();
      return std::make_unique<RemoteGenerator>(config, std::move(transport));
  }
  throw UsageError("unknown generator kind");
}

}  // namespace tablehop
