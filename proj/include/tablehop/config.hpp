#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "tablehop/embedding.hpp"
#include "tablehop/generation.hpp"
#include "tablehop/orchestrator.hpp"

namespace tablehop {

struct RunConfig {
  std::filesystem::path tables_path;
  std::filesystem::path passages_path;
  std::filesystem::path train_path;
  std::filesystem::path eval_path;
  std::filesystem::path table_index_path;     // defaults to <output_dir>/tables.index.json
  std::filesystem::path exemplar_index_path;  // defaults to <output_dir>/exemplars.index.json
  EmbedderConfig embedder;
  GeneratorConfig generator;
  PipelineConfig pipeline;  // budgets live in pipeline.budgets
  std::filesystem::path output_dir = "out";
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;  // reserved; offline backends are deterministic

  bool operator==(const RunConfig&) const = default;
};

/// Overrides keyed by dotted config key, e.g. {"pipeline.max_hops", "3"}.
using ConfigOverrides = std::map<std::string, std::string>;

/// Config document layout (JSON, every key optional):
///
///   corpus:    tables, passages
///   splits:    train, eval
///   index:     tables, exemplars
///   embedder:  kind (hashing|remote), dim, endpoint, timeout_seconds, batch_size, max_in_flight
///   generator: kind (scripted|remote), endpoint, model_name, temperature,
///              max_output_chars, script, timeout_seconds, max_in_flight
///   pipeline:  mode, k_tables, k_passages, shots, max_hops, strict_parsing
///   budgets:   table_chars, passage_chars
///   output_dir, parallelism, seed
///
/// Relative paths resolve against the config file's directory (the working
/// directory for overrides or when there is no file). Unknown keys, type
/// mismatches and out-of-range values throw UsageError naming the key.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const ConfigOverrides& overrides = {});

RunConfig parse_config(std::string_view json_text, std::string_view source,
                       const std::filesystem::path& base_dir, const ConfigOverrides& overrides = {});

/// The fully resolved config in the same layout; loading it back yields an
/// equal RunConfig.
std::string resolved_config_text(const RunConfig& config);

/// Writes resolved_config_text to <output_dir>/resolved_config.json and returns that path.
std::filesystem::path echo_config(const RunConfig& config);

}  // namespace tablehop
