#include "tablehop/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "tablehop/error.hpp"
#include "tablehop/retrieval.hpp"

namespace tablehop {

namespace {

bool is_ascii_punct(unsigned char ch) {
  return (ch >= 33 && ch <= 47) || (ch >= 58 && ch <= 64) || (ch >= 91 && ch <= 96) ||
         (ch >= 123 && ch <= 126);
}

bool is_ascii_space(unsigned char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

std::string fixed2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

}  // namespace

std::vector<std::string> answer_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current != "a" && current != "an" && current != "the") {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (unsigned char ch : text) {
    if (is_ascii_space(ch)) {
      flush();
    } else if (!is_ascii_punct(ch)) {
      current += (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : static_cast<char>(ch);
    }
  }
  flush();
  return tokens;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  for (const auto& token : answer_tokens(text)) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

int exact_match(const std::optional<std::string>& pred, std::span<const std::string> golds) {
  if (golds.empty()) throw std::invalid_argument("exact_match: no gold answers");
  if (!pred) return 0;
  auto p = normalize_answer(*pred);
  if (p.empty()) return 0;
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

TokenScores token_f1(const std::optional<std::string>& pred, std::span<const std::string> golds) {
  if (golds.empty()) throw std::invalid_argument("token_f1: no gold answers");
  TokenScores best;
  if (!pred) return best;
  auto pred_tokens = answer_tokens(*pred);
  if (pred_tokens.empty()) return best;

  std::unordered_map<std::string, std::size_t> pred_counts;
  for (const auto& t : pred_tokens) ++pred_counts[t];

  bool have_best = false;
  for (std::size_t g = 0; g < golds.size(); ++g) {
    auto gold_tokens = answer_tokens(golds[g]);
    TokenScores s;
    s.gold_index = g;
    if (!gold_tokens.empty()) {
      auto remaining = pred_counts;
      std::size_t overlap = 0;
      for (const auto& t : gold_tokens) {
        auto it = remaining.find(t);
        if (it != remaining.end() && it->second > 0) {
          --it->second;
          ++overlap;
        }
      }
      if (overlap > 0) {
        s.precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
        s.recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
      }
    }
    if (!have_best || s.f1 > best.f1) {
      best = s;
      have_best = true;
    }
  }
  return best;
}

Prediction to_prediction(const AnswerRecord& record) {
  return Prediction{record.question_id, record.final_answer, record.outcome,
                    record.fsl_context.table_ids()};
}

std::vector<Prediction> parse_answers_jsonl(std::string_view text, std::string_view source) {
  using json = nlohmann::json;
  std::vector<Prediction> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto record = json::parse(line);
      Prediction p;
      p.question_id = record.at("question_id").get<std::string>();
      if (auto it = record.find("final_answer"); it != record.end() && !it->is_null()) {
        p.final_answer = it->get<std::string>();
      }
      p.outcome = parse_outcome(record.at("outcome").get<std::string>());
      if (auto it = record.find("retrieved_table_ids"); it != record.end() && !it->is_null()) {
        p.retrieved_table_ids = it->get<std::vector<std::string>>();
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) +
                      ": malformed answer record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> load_answers(const std::filesystem::path& path) {
  return parse_answers_jsonl(read_file(path), path.string());
}

std::map<std::string, std::vector<std::string>> ranks_from_predictions(
    std::span<const Prediction> predictions) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& p : predictions) out[p.question_id] = p.retrieved_table_ids;
  return out;
}

EvalReport evaluate_run(std::span<const Prediction> predictions, std::span<const QAExample> qa,
                        const std::map<std::string, std::vector<std::string>>* retrieval_ranks,
                        std::span<const std::size_t> Ks) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.question_id, &p).second) {
      throw DataError("duplicate answer records for question \"" + p.question_id + "\"");
    }
  }
  std::set<std::string> qa_ids;
  for (const auto& ex : qa) qa_ids.insert(ex.id);
  for (const auto& p : predictions) {
    if (!qa_ids.count(p.question_id)) {
      throw DataError("answer record for unknown question \"" + p.question_id + "\"");
    }
  }

  EvalReport report;
  std::vector<std::vector<ScoredId>> ranked;
  std::vector<std::string> golds;
  for (const auto& ex : qa) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw DataError("no answer record for question \"" + ex.id + "\"");
    const Prediction& p = *it->second;

    ScoredAnswer s;
    s.question_id = ex.id;
    s.em = exact_match(p.final_answer, ex.answers);
    auto f = token_f1(p.final_answer, ex.answers);
    s.precision = f.precision;
    s.recall = f.recall;
    s.f1 = f.f1;
    s.matched_gold = ex.answers[f.gold_index];
    report.per_question.push_back(std::move(s));

    switch (p.outcome) {
      case Outcome::answered_fsl:
        ++report.counts.answered_fsl;
        break;
      case Outcome::answered_multihop:
        ++report.counts.answered_multihop;
        break;
      case Outcome::unanswered:
        ++report.counts.unanswered;
        break;
    }

    if (retrieval_ranks != nullptr && ex.gold_table_id) {
      std::vector<ScoredId> list;
      if (auto r = retrieval_ranks->find(ex.id); r != retrieval_ranks->end()) {
        for (const auto& id : r->second) list.push_back(ScoredId{id, 0.0});
      }
      ranked.push_back(std::move(list));
      golds.push_back(*ex.gold_table_id);
    }
  }

  if (!report.per_question.empty()) {
    double n = static_cast<double>(report.per_question.size());
    for (const auto& s : report.per_question) {
      report.aggregate.em += s.em;
      report.aggregate.precision += s.precision;
      report.aggregate.recall += s.recall;
      report.aggregate.f1 += s.f1;
    }
    report.aggregate.em = 100.0 * report.aggregate.em / n;
    report.aggregate.precision = 100.0 * report.aggregate.precision / n;
    report.aggregate.recall = 100.0 * report.aggregate.recall / n;
    report.aggregate.f1 = 100.0 * report.aggregate.f1 / n;
  }

  if (retrieval_ranks != nullptr) {
    report.hits_questions = golds.size();
    for (std::size_t K : Ks) report.hits[K] = hits_at_k(ranked, golds, K);
  }
  return report;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

std::string report_json(const EvalReport& report) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["aggregate"] = {{"f1", round2(report.aggregate.f1)},
                      {"precision", round2(report.aggregate.precision)},
                      {"recall", round2(report.aggregate.recall)},
                      {"em", round2(report.aggregate.em)}};
  doc["aggregate_full_precision"] = {{"f1", report.aggregate.f1},
                                     {"precision", report.aggregate.precision},
                                     {"recall", report.aggregate.recall},
                                     {"em", report.aggregate.em}};
  ojson hits = ojson::object();
  for (const auto& [k, v] : report.hits) hits["HITS@" + std::to_string(k)] = round2(v);
  doc["hits"] = std::move(hits);
  doc["hits_questions"] = report.hits_questions;
  doc["counts"] = {{"answered_fsl", report.counts.answered_fsl},
                   {"answered_multihop", report.counts.answered_multihop},
                   {"unanswered", report.counts.unanswered}};
  ojson per = ojson::array();
  for (const auto& s : report.per_question) {
    per.push_back({{"question_id", s.question_id},
                   {"em", s.em},
                   {"precision", s.precision},
                   {"recall", s.recall},
                   {"f1", s.f1},
                   {"matched_gold", s.matched_gold}});
  }
  doc["per_question"] = std::move(per);
  return doc.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
  char line[128];
  std::string out;
  std::snprintf(line, sizeof(line), "%-10s%10s%11s%10s%10s\n", "", "F1", "Precision", "Recall", "EM");
  out += line;
  std::snprintf(line, sizeof(line), "%-10s%10s%11s%10s%10s\n", "run",
                fixed2(report.aggregate.f1).c_str(), fixed2(report.aggregate.precision).c_str(),
                fixed2(report.aggregate.recall).c_str(), fixed2(report.aggregate.em).c_str());
  out += line;
  for (const auto& [k, v] : report.hits) {
    std::snprintf(line, sizeof(line), "%-10s%10s\n", ("HITS@" + std::to_string(k)).c_str(),
                  fixed2(v).c_str());
    out += line;
  }
  return out;
}

}  // namespace tablehop
