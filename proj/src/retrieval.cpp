#include "tablehop/retrieval.hpp"

#include <algorithm>
#include <stdexcept>

#include "tablehop/error.hpp"

namespace tablehop {

std::vector<std::string> RetrievedContext::table_ids() const {
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.table_id);
  return out;
}

std::vector<std::string> RetrievedContext::passage_ids() const {
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    out.insert(out.end(), c.context.passage_ids.begin(), c.context.passage_ids.end());
  }
  return out;
}

std::string passage_embedding_text(const Passage& passage) {
  return passage.title + " " + passage.text;
}

const Embedding& PassageEmbeddingCache::get(const Passage& passage, const Embedder& embedder) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(passage.id); it != cache_.end()) return it->second;
  }
  // Embed outside the lock; a racing duplicate computes the same vector.
  auto emb = embedder.embed_text(passage_embedding_text(passage));
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(passage.id, std::move(emb)).first->second;
}

std::vector<ScoredId> retrieve_tables(const std::string& query, const VectorIndex& table_index,
                                      const Embedder& embedder, std::size_t k) {
  if (k == 0) throw std::invalid_argument("retrieve_tables: k must be positive");
  if (table_index.empty()) return {};
  return table_index.top_k(embedder.embed_text(query), k);
}

std::vector<ScoredId> retrieve_passages(const std::string& query, const Table& table,
                                        const Corpus& corpus, const Embedder& embedder,
                                        std::size_t k, PassageEmbeddingCache* cache) {
  if (k == 0) throw std::invalid_argument("retrieve_passages: k must be positive");
  std::vector<const Passage*> pool;
  for (const auto& id : table.linked_passage_ids()) {
    if (const Passage* p = corpus.find_passage(id)) pool.push_back(p);
  }
  if (pool.empty()) return {};

  auto query_emb = embedder.embed_text(query);
  std::vector<ScoredId> scored;
  scored.reserve(pool.size());
  for (const Passage* p : pool) {
    double score = cache != nullptr ? cosine(query_emb, cache->get(*p, embedder))
                                    : cosine(query_emb, embedder.embed_text(passage_embedding_text(*p)));
    scored.push_back(ScoredId{p->id, score});
  }
  std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    ranks_before);
  scored.resize(keep);
  return scored;
}

RetrievedContext assemble_context(const std::string& question, const Corpus& corpus,
                                  const VectorIndex& table_index, const Embedder& embedder,
                                  const RetrievalConfig& cfg, const Budgets& budgets,
                                  PassageEmbeddingCache* cache) {
  RetrievedContext out;
  out.question = question;
  for (const auto& hit : retrieve_tables(question, table_index, embedder, cfg.k_tables)) {
    auto it = corpus.tables.find(hit.id);
    if (it == corpus.tables.end()) {
      throw DataError("index/corpus inconsistency: indexed table \"" + hit.id +
                      "\" is not in the corpus");
    }
    const Table& table = it->second;
    Candidate cand;
    cand.table_id = hit.id;
    cand.table_score = hit.score;
    if (cfg.k_passages > 0) {
      cand.passage_scores = retrieve_passages(question, table, corpus, embedder, cfg.k_passages, cache);
    }
    std::vector<Passage> passages;
    passages.reserve(cand.passage_scores.size());
    for (const auto& ps : cand.passage_scores) passages.push_back(*corpus.find_passage(ps.id));
    cand.context = attach_passages(flatten_table(table, budgets.table_chars), passages,
                                   budgets.passage_chars);
    out.candidates.push_back(std::move(cand));
  }
  return out;
}

VectorIndex build_table_index(const Corpus& corpus, const Embedder& embedder,
                              const Budgets& budgets) {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  ids.reserve(corpus.tables.size());
  texts.reserve(corpus.tables.size());
  for (const auto& [id, table] : corpus.tables) {
    ids.push_back(id);
    texts.push_back(flatten_table(table, budgets.table_chars).text);
  }
  return VectorIndex::build(ids, embedder.embed_batch(texts));
}

double hits_at_k(const std::vector<std::vector<ScoredId>>& ranked_lists,
                 const std::vector<std::string>& gold_ids, std::size_t K) {
  if (K == 0) throw std::invalid_argument("hits_at_k: K must be positive");
  if (ranked_lists.size() != gold_ids.size()) {
    throw std::invalid_argument("hits_at_k: " + std::to_string(ranked_lists.size()) +
                                " ranked lists but " + std::to_string(gold_ids.size()) +
                                " gold ids");
  }
  if (gold_ids.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < gold_ids.size(); ++q) {
    const auto& list = ranked_lists[q];
    std::size_t depth = std::min(K, list.size());
    bool found = std::any_of(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(depth),
                             [&](const ScoredId& s) { return s.id == gold_ids[q]; });
    if (found) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold_ids.size());
}

}  // namespace tablehop
