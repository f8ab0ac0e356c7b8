#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tablehop/corpus.hpp"
#include "tablehop/embedding.hpp"
#include "tablehop/retrieval.hpp"
#include "tablehop/textprep.hpp"
#include "tablehop/vindex.hpp"

namespace tablehop {

/// A (question, table context, answer) demonstration drawn from the train split.
struct Exemplar {
  std::string source_id;
  std::string question;
  std::string context_text;
  std::vector<std::string> answers;  // first one goes into the joint embedding

  const std::string& answer() const { return answers.front(); }

  bool operator==(const Exemplar&) const = default;
};

inline constexpr std::string_view kJointSeparator = " [SEP] ";

/// question [SEP] context [SEP] answer
std::string joint_exemplar_text(const Exemplar& exemplar);
/// question [SEP] candidate context, the query-side counterpart without the answer.
std::string exemplar_query_text(const std::string& question, const std::string& candidate_context);

class ExemplarStore {
 public:
  ExemplarStore() = default;
  /// Throws DataError if the index ids are not exactly the exemplar source ids.
  ExemplarStore(std::vector<Exemplar> exemplars, VectorIndex index);

  const std::vector<Exemplar>& exemplars() const { return exemplars_; }
  const VectorIndex& index() const { return index_; }
  std::size_t size() const { return exemplars_.size(); }
  const Exemplar* find(const std::string& source_id) const;

  bool operator==(const ExemplarStore&) const = default;

 private:
  std::vector<Exemplar> exemplars_;
  VectorIndex index_;
};

/// Each train example becomes an exemplar whose context is its gold table
/// flattened with the top k_passages linked passages for its question. Throws
/// DataError for non-train examples or gold tables missing from the corpus.
ExemplarStore build_exemplar_store(std::span<const QAExample> train, const Corpus& corpus,
                                   const Embedder& embedder, const RetrievalConfig& cfg,
                                   const Budgets& budgets, PassageEmbeddingCache* cache = nullptr);

/// Top n exemplars by cosine between the joint embeddings and
/// embed(question [SEP] candidate_context).
std::vector<Exemplar> select_exemplars(const ExemplarStore& store, const Embedder& embedder,
                                       const std::string& question,
                                       const std::string& candidate_context, std::size_t n);

/// Writes `<manifest>` and its entries file (vindex format) plus the sidecar
/// `<manifest>.exemplars.jsonl` ({"source_id", "question", "context_text",
/// "answer", "answers"} per line).
void save_exemplar_store(const ExemplarStore& store, const std::filesystem::path& manifest);
ExemplarStore load_exemplar_store(const std::filesystem::path& manifest);

std::filesystem::path exemplars_sidecar_path(const std::filesystem::path& manifest);

}  // namespace tablehop
