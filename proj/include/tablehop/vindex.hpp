#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tablehop/embedding.hpp"

namespace tablehop {

struct ScoredId {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

/// Ranking order used everywhere: higher score first, then id ascending.
inline bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// Exact cosine index. Vectors live in one contiguous row-major buffer so a
/// query is a single dense scan.
class VectorIndex {
 public:
  VectorIndex() = default;

  /// Throws DataError on a duplicate id or mixed dimensions.
  static VectorIndex build(std::span<const std::pair<std::string, Embedding>> items);
  static VectorIndex build(const std::vector<std::string>& ids, const std::vector<Embedding>& vectors);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const;
  Embedding embedding(std::size_t i) const;

  /// The min(k, size()) best entries in ranks_before order. Throws
  /// std::invalid_argument for k == 0 and DataError on a dimension mismatch.
  std::vector<ScoredId> top_k(const Embedding& query, std::size_t k) const;

  bool operator==(const VectorIndex&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
};

/// Writes `<manifest>` ({"format", "version", "dim", "count", "checksum"}) and
/// the entries file `<manifest>.entries.jsonl` ({"id", "values"} per line).
/// The checksum is FNV-1a 64 over the entries file bytes, as 16 hex digits.
void save_index(const VectorIndex& index, const std::filesystem::path& manifest);

/// Throws DataError on IO failure, "version mismatch" for a wrong format tag
/// or version, and "checksum mismatch" when the entries file was altered.
VectorIndex load_index(const std::filesystem::path& manifest);

std::filesystem::path entries_path(const std::filesystem::path& manifest);

}  // namespace tablehop
