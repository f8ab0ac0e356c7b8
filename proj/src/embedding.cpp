#include "tablehop/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tablehop/error.hpp"
#include "tablehop/simd/kernels.hpp"
#include "slot_guard.hpp"

namespace tablehop {

using json = nlohmann::json;

namespace {

bool is_token_byte(unsigned char ch) {
  return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
         ch >= 0x80;
}

char ascii_lower(char ch) { return (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch; }

}  // namespace

bool Embedding::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= HashingEmbedder::kFnvPrime;
  }
  return hash;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (is_token_byte(static_cast<unsigned char>(ch))) {
      current += ascii_lower(ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void l2_normalize(std::vector<double>& values) {
  double norm = std::sqrt(simd::dot(values, values));
  if (norm == 0.0) return;
  for (double& v : values) v /= norm;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw DataError("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()) + ")");
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  return std::clamp(simd::dot(a.values, b.values), -1.0, 1.0);
}

std::vector<Embedding> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed_text(text));
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw UsageError("hashing embedder: dim must be positive");
}

Embedding HashingEmbedder::embed_text(std::string_view text) const {
  Embedding out;
  out.values.assign(dim_, 0.0);
  auto tokens = tokenize(text);
  if (tokens.empty()) return out;

  for (const auto& token : tokens) {
    std::size_t slot = static_cast<std::size_t>(fnv1a64(token) % dim_);
    bool negative = (fnv1a64(token, kSignSeed) & 1U) != 0;
    out.values[slot] += negative ? -1.0 : 1.0;
  }
  if (out.is_zero()) {
    for (const auto& token : tokens) out.values[fnv1a64(token) % dim_] += 1.0;
  }
  l2_normalize(out.values);
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (config_.endpoint.empty()) throw UsageError("remote embedder: endpoint must be set");
  if (config_.batch_size == 0) throw UsageError("remote embedder: batch_size must be positive");
  if (!transport_) throw std::invalid_argument("remote embedder: null transport");
}

Embedding RemoteEmbedder::embed_text(std::string_view text) const {
  std::string owned(text);
  return call(std::span<const std::string>(&owned, 1)).front();
}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    auto chunk = texts.subspan(start, std::min(config_.batch_size, texts.size() - start));
    auto part = call(chunk);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Embedding> RemoteEmbedder::call(std::span<const std::string> chunk) const {
  const auto& endpoint = config_.endpoint;
  HttpRequest request;
  request.url = endpoint;
  request.body = json{{"input", std::vector<std::string>(chunk.begin(), chunk.end())}}.dump();
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
      throw BackendError("embedding endpoint " + endpoint + ": " + e.what());
    }
  }
  if (response.status < 200 || response.status >= 300) {
    throw BackendError("embedding endpoint " + endpoint + " returned HTTP " +
                       std::to_string(response.status));
  }

  json body;
  try {
    body = json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw BackendError("embedding endpoint " + endpoint + ": malformed response: " + e.what());
  }
  auto it = body.find("embeddings");
  if (!body.is_object() || it == body.end() || !it->is_array()) {
    throw BackendError("embedding endpoint " + endpoint + ": response lacks \"embeddings\" list");
  }
  if (it->size() != chunk.size()) {
    throw BackendError("embedding endpoint " + endpoint + ": expected " +
                       std::to_string(chunk.size()) + " embeddings, got " +
                       std::to_string(it->size()));
  }

  std::vector<Embedding> out;
  out.reserve(chunk.size());
  for (const auto& row : *it) {
    if (!row.is_array()) {
      throw BackendError("embedding endpoint " + endpoint + ": embedding is not a list");
    }
    Embedding emb;
    emb.values.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) {
        throw BackendError("embedding endpoint " + endpoint + ": non-numeric embedding value");
      }
      emb.values.push_back(v.get<double>());
    }
    if (config_.dim != 0 && emb.dim() != config_.dim) {
      throw BackendError("embedding endpoint " + endpoint + ": dimension mismatch (configured " +
                         std::to_string(config_.dim) + ", got " + std::to_string(emb.dim()) + ")");
    }
    l2_normalize(emb.values);
    out.push_back(std::move(emb));
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<HttpTransport> transport) {
  switch (config.kind) {
    case EmbedderConfig::Kind::hashing:
      return std::make_unique<HashingEmbedder>(config.dim);
    case EmbedderConfig::Kind::remote:
      if (!transport) transport = make_http_transport();
      return std::make_unique<RemoteEmbedder>(config, std::move(transport));
  }
  throw UsageError("unknown embedder kind");
}

}  // namespace tablehop
