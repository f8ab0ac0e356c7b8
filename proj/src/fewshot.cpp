#include "tablehop/fewshot.hpp"

#include <unordered_map>

#include <json.hpp>

#include "tablehop/error.hpp"

namespace tablehop {

using json = nlohmann::json;

std::string joint_exemplar_text(const Exemplar& exemplar) {
  std::string out = exemplar.question;
  out += kJointSeparator;
  out += exemplar.context_text;
  out += kJointSeparator;
  out += exemplar.answer();
  return out;
}

std::string exemplar_query_text(const std::string& question, const std::string& candidate_context) {
  std::string out = question;
  out += kJointSeparator;
  out += candidate_context;
  return out;
}

ExemplarStore::ExemplarStore(std::vector<Exemplar> exemplars, VectorIndex index)
    : exemplars_(std::move(exemplars)), index_(std::move(index)) {
  if (index_.size() != exemplars_.size()) {
    throw DataError("exemplar store: index has " + std::to_string(index_.size()) +
                    " entries for " + std::to_string(exemplars_.size()) + " exemplars");
  }
  for (std::size_t i = 0; i < exemplars_.size(); ++i) {
    if (index_.ids()[i] != exemplars_[i].source_id) {
      throw DataError("exemplar store: index id \"" + index_.ids()[i] +
                      "\" does not match exemplar \"" + exemplars_[i].source_id + "\"");
    }
    if (exemplars_[i].answers.empty()) {
      throw DataError("exemplar store: exemplar \"" + exemplars_[i].source_id + "\" has no answer");
    }
  }
}

const Exemplar* ExemplarStore::find(const std::string& source_id) const {
  for (const auto& ex : exemplars_) {
    if (ex.source_id == source_id) return &ex;
  }
  return nullptr;
}

ExemplarStore build_exemplar_store(std::span<const QAExample> train, const Corpus& corpus,
                                   const Embedder& embedder, const RetrievalConfig& cfg,
                                   const Budgets& budgets, PassageEmbeddingCache* cache) {
  std::vector<Exemplar> exemplars;
  exemplars.reserve(train.size());
  for (const auto& qa : train) {
    if (qa.split != Split::train) {
      throw DataError("exemplar \"" + qa.id + "\" is from the " + std::string(to_string(qa.split)) +
                      " split; only train examples may become exemplars");
    }
    if (!qa.gold_table_id) throw DataError("train example \"" + qa.id + "\" has no gold_table_id");
    auto it = corpus.tables.find(*qa.gold_table_id);
    if (it == corpus.tables.end()) {
      throw DataError("train example \"" + qa.id + "\": gold table \"" + *qa.gold_table_id +
                      "\" is not in the corpus");
    }
    const Table& table = it->second;
    std::vector<Passage> passages;
    if (cfg.k_passages > 0) {
      for (const auto& ps :
           retrieve_passages(qa.question, table, corpus, embedder, cfg.k_passages, cache)) {
        passages.push_back(*corpus.find_passage(ps.id));
      }
    }
    auto ctx = attach_passages(flatten_table(table, budgets.table_chars), passages,
                               budgets.passage_chars);
    exemplars.push_back(Exemplar{qa.id, qa.question, std::move(ctx.text), qa.answers});
  }

  std::vector<std::string> ids;
  std::vector<std::string> texts;
  ids.reserve(exemplars.size());
  texts.reserve(exemplars.size());
  for (const auto& ex : exemplars) {
    ids.push_back(ex.source_id);
    texts.push_back(joint_exemplar_text(ex));
  }
  auto index = VectorIndex::build(ids, embedder.embed_batch(texts));
  return ExemplarStore(std::move(exemplars), std::move(index));
}

std::vector<Exemplar> select_exemplars(const ExemplarStore& store, const Embedder& embedder,
                                       const std::string& question,
                                       const std::string& candidate_context, std::size_t n) {
  if (n == 0 || store.size() == 0) return {};
  auto query = embedder.embed_text(exemplar_query_text(question, candidate_context));
  std::unordered_map<std::string_view, const Exemplar*> by_id;
  for (const auto& ex : store.exemplars()) by_id.emplace(ex.source_id, &ex);
  std::vector<Exemplar> out;
  for (const auto& hit : store.index().top_k(query, n)) out.push_back(*by_id.at(hit.id));
  return out;
}

std::filesystem::path exemplars_sidecar_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p += ".exemplars.jsonl";
  return p;
}

void save_exemplar_store(const ExemplarStore& store, const std::filesystem::path& manifest) {
  save_index(store.index(), manifest);
  std::string sidecar;
  for (const auto& ex : store.exemplars()) {
    json line = {{"source_id", ex.source_id},
                 {"question", ex.question},
                 {"context_text", ex.context_text},
                 {"answer", ex.answer()},
                 {"answers", ex.answers}};
    sidecar += line.dump();
    sidecar += '\n';
  }
  write_file(exemplars_sidecar_path(manifest), sidecar);
}

ExemplarStore load_exemplar_store(const std::filesystem::path& manifest) {
  auto index = load_index(manifest);
  auto sidecar_file = exemplars_sidecar_path(manifest);
  auto sidecar = read_file(sidecar_file);
  std::vector<Exemplar> exemplars;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < sidecar.size()) {
    auto end = sidecar.find('\n', pos);
    if (end == std::string::npos) end = sidecar.size();
    ++line_no;
    std::string_view line(sidecar.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      auto record = json::parse(line);
      Exemplar ex;
      ex.source_id = record.at("source_id").get<std::string>();
      ex.question = record.at("question").get<std::string>();
      ex.context_text = record.at("context_text").get<std::string>();
      if (auto it = record.find("answers"); it != record.end()) {
        ex.answers = it->get<std::vector<std::string>>();
      } else {
        ex.answers = {record.at("answer").get<std::string>()};
      }
      exemplars.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(sidecar_file.string() + ":" + std::to_string(line_no) +
                      ": malformed exemplar: " + e.what());
    }
  }
  return ExemplarStore(std::move(exemplars), std::move(index));
}

}  // namespace tablehop
