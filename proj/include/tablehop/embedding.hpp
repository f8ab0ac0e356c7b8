#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablehop/http.hpp"

namespace tablehop {

/// Dense vector with unit L2 norm, or all zeros for text with no tokens.
struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool is_zero() const;

  bool operator==(const Embedding&) const = default;
};

struct EmbedderConfig {
  enum class Kind { hashing, remote };

  Kind kind = Kind::hashing;
  std::size_t dim = 256;  // required for hashing; for remote, 0 skips the dimension check
  std::string endpoint;   // remote only
  double timeout_seconds = 30.0;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;

  bool operator==(const EmbedderConfig&) const = default;
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dim() const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;
};

/// Bag-of-words feature hashing. Tokens are maximal runs of ASCII letters,
/// digits or non-ASCII bytes, lowercased. Each token adds +1 or -1 to slot
/// fnv1a(token) mod dim, signed by bit 0 of a second FNV-1a pass seeded with
/// kSignSeed (bit clear means +1). The result is L2-normalized.
///
/// If signed contributions cancel to an all-zero vector while tokens exist,
/// the unsigned counts are used instead so that only token-free text maps to
/// the zero sentinel.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
  static constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
  static constexpr std::uint64_t kSignSeed = 0x9E3779B97F4A7C15ULL;

  explicit HashingEmbedder(std::size_t dim);

  std::size_t dim() const override { return dim_; }
  Embedding embed_text(std::string_view text) const override;

 private:
  std::size_t dim_;
};

/// Client for a batch embedding service:
///   POST endpoint  {"input": [str, ...]}  ->  {"embeddings": [[number, ...], ...]}
/// Requests are chunked by batch_size and at most max_in_flight run at once.
/// Returned vectors are re-normalized locally.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(EmbedderConfig config, std::shared_ptr<HttpTransport> transport);

  std::size_t dim() const override { return config_.dim; }
  Embedding embed_text(std::string_view text) const override;
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<Embedding> call(std::span<const std::string> chunk) const;

  EmbedderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::counting_semaphore<> in_flight_;
};

/// A null transport selects the real network client.
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<HttpTransport> transport = nullptr);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = HashingEmbedder::kFnvOffsetBasis);

/// The hashing embedder's tokenizer.
std::vector<std::string> tokenize(std::string_view text);

/// Scales `values` to unit L2 norm in place; leaves an all-zero vector alone.
void l2_normalize(std::vector<double>& values);

/// Dot product of two normalized embeddings, clamped to [-1, 1]. Zero if
/// either side is the zero sentinel. Throws DataError on dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

}  // namespace tablehop
