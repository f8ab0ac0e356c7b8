#pragma once

#include <cstddef>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tablehop/corpus.hpp"
#include "tablehop/embedding.hpp"
#include "tablehop/textprep.hpp"
#include "tablehop/vindex.hpp"

namespace tablehop {

struct RetrievalConfig {
  std::size_t k_tables = 3;
  std::size_t k_passages = 3;

  bool operator==(const RetrievalConfig&) const = default;
};

struct Candidate {
  std::string table_id;
  double table_score = 0.0;
  RichContext context;
  std::vector<ScoredId> passage_scores;

  bool operator==(const Candidate&) const = default;
};

struct RetrievedContext {
  std::string question;
  std::vector<Candidate> candidates;

  std::vector<std::string> table_ids() const;
  /// Passage ids of every candidate, concatenated in candidate order.
  std::vector<std::string> passage_ids() const;

  bool operator==(const RetrievedContext&) const = default;
};

/// Memoizes passage embeddings (title + " " + text) across queries. Safe to
/// share between threads.
class PassageEmbeddingCache {
 public:
  const Embedding& get(const Passage& passage, const Embedder& embedder);

 private:
  std::mutex mutex_;
  std::unordered_map<std::string, Embedding> cache_;
};

/// Text embedded for a passage when ranking it against a query.
std::string passage_embedding_text(const Passage& passage);

std::vector<ScoredId> retrieve_tables(const std::string& query, const VectorIndex& table_index,
                                      const Embedder& embedder, std::size_t k);

/// Ranks only the passages linked from `table`'s cells (deduplicated) against
/// the query. Links that do not resolve in the corpus are skipped.
std::vector<ScoredId> retrieve_passages(const std::string& query, const Table& table,
                                        const Corpus& corpus, const Embedder& embedder,
                                        std::size_t k, PassageEmbeddingCache* cache = nullptr);

/// Top k_tables tables for the question, each flattened and enriched with its
/// own top k_passages passages for the same question.
RetrievedContext assemble_context(const std::string& question, const Corpus& corpus,
                                  const VectorIndex& table_index, const Embedder& embedder,
                                  const RetrievalConfig& cfg, const Budgets& budgets,
                                  PassageEmbeddingCache* cache = nullptr);

/// Builds the table index over flattened-table embeddings, in table id order.
VectorIndex build_table_index(const Corpus& corpus, const Embedder& embedder,
                              const Budgets& budgets);

/// Percentage of questions whose gold id is among the first K ranked entries.
/// An empty question set scores 0. Throws std::invalid_argument on a length
/// mismatch or K == 0.
double hits_at_k(const std::vector<std::vector<ScoredId>>& ranked_lists,
                 const std::vector<std::string>& gold_ids, std::size_t K);

}  // namespace tablehop
