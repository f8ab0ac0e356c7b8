#include "tablehop/vindex.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "tablehop/corpus.hpp"
#include "tablehop/error.hpp"
#include "tablehop/simd/kernels.hpp"

namespace tablehop {

using json = nlohmann::json;

namespace {

constexpr const char* kFormatTag = "tablehop-vindex";
constexpr int kFormatVersion = 1;

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace

VectorIndex VectorIndex::build(std::span<const std::pair<std::string, Embedding>> items) {
  VectorIndex index;
  if (items.empty()) return index;
  index.dim_ = items.front().second.dim();
  index.ids_.reserve(items.size());
  index.data_.reserve(items.size() * index.dim_);
  std::unordered_set<std::string> seen;
  for (const auto& [id, emb] : items) {
    if (!seen.insert(id).second) throw DataError("vector index: duplicate id \"" + id + "\"");
    if (emb.dim() != index.dim_) {
      throw DataError("vector index: dimension mismatch for \"" + id + "\" (" +
                      std::to_string(emb.dim()) + " vs " + std::to_string(index.dim_) + ")");
    }
    index.ids_.push_back(id);
    index.data_.insert(index.data_.end(), emb.values.begin(), emb.values.end());
  }
  return index;
}

VectorIndex VectorIndex::build(const std::vector<std::string>& ids,
                               const std::vector<Embedding>& vectors) {
  if (ids.size() != vectors.size()) {
    throw std::invalid_argument("vector index: ids and vectors differ in length");
  }
  std::vector<std::pair<std::string, Embedding>> items;
  items.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) items.emplace_back(ids[i], vectors[i]);
  return build(items);
}

std::span<const double> VectorIndex::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

Embedding VectorIndex::embedding(std::size_t i) const {
  auto r = row(i);
  return Embedding{std::vector<double>(r.begin(), r.end())};
}

std::vector<ScoredId> VectorIndex::top_k(const Embedding& query, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("top_k: k must be positive");
  if (empty()) return {};
  if (query.dim() != dim_) {
    throw DataError("top_k: query dimension " + std::to_string(query.dim()) +
                    " does not match index dimension " + std::to_string(dim_));
  }

  std::vector<double> scores(size(), 0.0);
  if (!query.is_zero()) {
    simd::active().dot_rows(data_.data(), size(), dim_, query.values.data(), scores.data());
    // +0.0 folds a negative zero from an all-zero row into the sentinel score.
    for (double& s : scores) s = std::clamp(s, -1.0, 1.0) + 0.0;
  }

  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids_[a] < ids_[b];
  };
  // Max-heap under `before`, so the top is the weakest entry kept so far.
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(before)> heap(before);
  std::size_t keep = std::min(k, size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (heap.size() < keep) {
      heap.push(i);
    } else if (before(i, heap.top())) {
      heap.pop();
      heap.push(i);
    }
  }

  std::vector<ScoredId> out(heap.size());
  for (std::size_t pos = out.size(); pos-- > 0;) {
    out[pos] = ScoredId{ids_[heap.top()], scores[heap.top()]};
    heap.pop();
  }
  return out;
}

std::filesystem::path entries_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p += ".entries.jsonl";
  return p;
}

void save_index(const VectorIndex& index, const std::filesystem::path& manifest) {
  std::string entries;
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto r = index.row(i);
    json line = {{"id", index.ids()[i]}, {"values", std::vector<double>(r.begin(), r.end())}};
    entries += line.dump();
    entries += '\n';
  }
  json head = {{"format", kFormatTag},
               {"version", kFormatVersion},
               {"dim", index.dim()},
               {"count", index.size()},
               {"checksum", hex64(fnv1a64(entries))}};
  write_file(entries_path(manifest), entries);
  write_file(manifest, head.dump(2) + "\n");
}

VectorIndex load_index(const std::filesystem::path& manifest) {
  json head;
  try {
    head = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw DataError(manifest.string() + ": malformed index manifest: " + e.what());
  }
  if (!head.is_object() || head.value("format", std::string()) != kFormatTag ||
      !head.contains("version") || !head["version"].is_number_integer() ||
      head["version"].get<int>() != kFormatVersion) {
    throw DataError(manifest.string() + ": version mismatch (expected " + kFormatTag + " version " +
                    std::to_string(kFormatVersion) + ")");
  }
  std::size_t dim = 0;
  std::size_t count = 0;
  std::string checksum;
  try {
    dim = head.at("dim").get<std::size_t>();
    count = head.at("count").get<std::size_t>();
    checksum = head.at("checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(manifest.string() + ": malformed index manifest: " + e.what());
  }

  auto entries_file = entries_path(manifest);
  auto entries = read_file(entries_file);
  if (hex64(fnv1a64(entries)) != checksum) {
    throw DataError(entries_file.string() + ": checksum mismatch");
  }

  std::vector<std::pair<std::string, Embedding>> items;
  items.reserve(count);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < entries.size()) {
    auto end = entries.find('\n', pos);
    if (end == std::string::npos) end = entries.size();
    ++line_no;
    std::string_view line(entries.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      auto record = json::parse(line);
      Embedding emb{record.at("values").get<std::vector<double>>()};
      if (emb.dim() != dim) {
        throw DataError(entries_file.string() + ":" + std::to_string(line_no) +
                        ": dimension mismatch");
      }
      items.emplace_back(record.at("id").get<std::string>(), std::move(emb));
    } catch (const json::exception& e) {
      throw DataError(entries_file.string() + ":" + std::to_string(line_no) +
                      ": malformed entry: " + e.what());
    }
  }
  if (items.size() != count) {
    throw DataError(manifest.string() + ": count mismatch (manifest " + std::to_string(count) +
                    ", entries " + std::to_string(items.size()) + ")");
  }
  auto index = VectorIndex::build(items);
  if (!index.empty() && index.dim() != dim) {
    throw DataError(manifest.string() + ": dimension mismatch");
  }
  return index;
}

}  // namespace tablehop
