#include "tablehop/config.hpp"

#include <charconv>
#include <set>

#include <json.hpp>

#include "tablehop/error.hpp"

namespace tablehop {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::set<std::string> kPathKeys = {
    "corpus.tables", "corpus.passages", "splits.train", "splits.eval",
    "index.tables",  "index.exemplars", "generator.script", "output_dir",
};

std::string_view embedder_kind_name(EmbedderConfig::Kind kind) {
  return kind == EmbedderConfig::Kind::remote ? "remote" : "hashing";
}

std::string_view generator_kind_name(GeneratorConfig::Kind kind) {
  return kind == GeneratorConfig::Kind::remote ? "remote" : "scripted";
}

ojson to_document(const RunConfig& c) {
  ojson doc;
  doc["corpus"] = {{"tables", c.tables_path.string()}, {"passages", c.passages_path.string()}};
  doc["splits"] = {{"train", c.train_path.string()}, {"eval", c.eval_path.string()}};
  doc["index"] = {{"tables", c.table_index_path.string()},
                  {"exemplars", c.exemplar_index_path.string()}};
  doc["embedder"] = {{"kind", embedder_kind_name(c.embedder.kind)},
                     {"dim", c.embedder.dim},
                     {"endpoint", c.embedder.endpoint},
                     {"timeout_seconds", c.embedder.timeout_seconds},
                     {"batch_size", c.embedder.batch_size},
                     {"max_in_flight", c.embedder.max_in_flight}};
  doc["generator"] = {{"kind", generator_kind_name(c.generator.kind)},
                      {"endpoint", c.generator.endpoint},
                      {"model_name", c.generator.model_name},
                      {"temperature", c.generator.temperature},
                      {"max_output_chars", c.generator.max_output_chars},
                      {"script", c.generator.script_path.string()},
                      {"timeout_seconds", c.generator.timeout_seconds},
                      {"max_in_flight", c.generator.max_in_flight}};
  doc["pipeline"] = {{"mode", to_string(c.pipeline.mode)},
                     {"k_tables", c.pipeline.retrieval.k_tables},
                     {"k_passages", c.pipeline.retrieval.k_passages},
                     {"shots", c.pipeline.shots},
                     {"max_hops", c.pipeline.max_hops},
                     {"strict_parsing", c.pipeline.strict_parsing}};
  doc["budgets"] = {{"table_chars", c.pipeline.budgets.table_chars},
                    {"passage_chars", c.pipeline.budgets.passage_chars}};
  doc["output_dir"] = c.output_dir.string();
  doc["parallelism"] = c.parallelism;
  doc["seed"] = c.seed;
  return doc;
}

std::string expected_type(const ojson& def) {
  if (def.is_string()) return "a string";
  if (def.is_boolean()) return "a boolean";
  if (def.is_number_unsigned()) return "a non-negative integer";
  return "a number";
}

bool type_matches(const ojson& def, const ojson& value) {
  if (def.is_string()) return value.is_string();
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_number_unsigned()) return value.is_number_unsigned();
  return value.is_number();
}

std::string resolve_path(const std::string& value, const fs::path& base) {
  if (value.empty()) return value;
  fs::path p(value);
  if (p.is_relative()) p = base / p;
  return fs::absolute(p).lexically_normal().string();
}

/// Looks up the default slot for a dotted key; null when the key is unknown.
ojson* slot_for(ojson& doc, const std::string& key) {
  auto dot = key.find('.');
  if (dot == std::string::npos) {
    auto it = doc.find(key);
    return (it == doc.end() || it->is_object()) ? nullptr : &*it;
  }
  auto section = doc.find(key.substr(0, dot));
  if (section == doc.end() || !section->is_object()) return nullptr;
  auto it = section->find(key.substr(dot + 1));
  return it == section->end() ? nullptr : &*it;
}

void assign(ojson& doc, const std::string& key, const ojson& value, const fs::path& base,
            std::string_view source) {
  ojson* slot = slot_for(doc, key);
  if (slot == nullptr) {
    throw UsageError(std::string(source) + ": unknown config key \"" + key + "\"");
  }
  if (!type_matches(*slot, value)) {
    throw UsageError(std::string(source) + ": config key \"" + key + "\" expects " +
                     expected_type(*slot));
  }
  if (kPathKeys.count(key)) {
    *slot = resolve_path(value.get<std::string>(), base);
  } else if (slot->is_number_float()) {
    *slot = value.get<double>();
  } else {
    *slot = value;
  }
}

ojson parse_override(const ojson& def, const std::string& key, const std::string& text) {
  auto fail = [&] {
    return UsageError("flag for \"" + key + "\": \"" + text + "\" is not " + expected_type(def));
  };
  if (def.is_string()) return text;
  if (def.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw fail();
  }
  if (def.is_number_unsigned()) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw fail();
    return v;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw fail();
  return v;
}

void require_positive(std::size_t value, std::string_view key) {
  if (value == 0) throw UsageError("config key \"" + std::string(key) + "\" must be at least 1");
}

RunConfig from_document(const ojson& doc) {
  RunConfig c;
  c.tables_path = doc["corpus"]["tables"].get<std::string>();
  c.passages_path = doc["corpus"]["passages"].get<std::string>();
  c.train_path = doc["splits"]["train"].get<std::string>();
  c.eval_path = doc["splits"]["eval"].get<std::string>();
  c.table_index_path = doc["index"]["tables"].get<std::string>();
  c.exemplar_index_path = doc["index"]["exemplars"].get<std::string>();

  const auto& e = doc["embedder"];
  auto embedder_kind = e["kind"].get<std::string>();
  if (embedder_kind == "hashing") {
    c.embedder.kind = EmbedderConfig::Kind::hashing;
  } else if (embedder_kind == "remote") {
    c.embedder.kind = EmbedderConfig::Kind::remote;
  } else {
    throw UsageError("config key \"embedder.kind\": unknown kind \"" + embedder_kind +
                     "\" (expected hashing or remote)");
  }
  c.embedder.dim = e["dim"].get<std::size_t>();
  c.embedder.endpoint = e["endpoint"].get<std::string>();
  c.embedder.timeout_seconds = e["timeout_seconds"].get<double>();
  c.embedder.batch_size = e["batch_size"].get<std::size_t>();
  c.embedder.max_in_flight = e["max_in_flight"].get<std::size_t>();

  const auto& g = doc["generator"];
  auto generator_kind = g["kind"].get<std::string>();
  if (generator_kind == "scripted") {
    c.generator.kind = GeneratorConfig::Kind::scripted;
  } else if (generator_kind == "remote") {
    c.generator.kind = GeneratorConfig::Kind::remote;
  } else {
    throw UsageError("config key \"generator.kind\": unknown kind \"" + generator_kind +
                     "\" (expected scripted or remote)");
  }
  c.generator.endpoint = g["endpoint"].get<std::string>();
  c.generator.model_name = g["model_name"].get<std::string>();
  c.generator.temperature = g["temperature"].get<double>();
  c.generator.max_output_chars = g["max_output_chars"].get<std::size_t>();
  c.generator.script_path = g["script"].get<std::string>();
  c.generator.timeout_seconds = g["timeout_seconds"].get<double>();
  c.generator.max_in_flight = g["max_in_flight"].get<std::size_t>();

  const auto& p = doc["pipeline"];
  c.pipeline.mode = parse_mode(p["mode"].get<std::string>());
  c.pipeline.retrieval.k_tables = p["k_tables"].get<std::size_t>();
  c.pipeline.retrieval.k_passages = p["k_passages"].get<std::size_t>();
  c.pipeline.shots = p["shots"].get<std::size_t>();
  c.pipeline.max_hops = p["max_hops"].get<std::size_t>();
  c.pipeline.strict_parsing = p["strict_parsing"].get<bool>();
  c.generator.strict_parsing = c.pipeline.strict_parsing;

  c.pipeline.budgets.table_chars = doc["budgets"]["table_chars"].get<std::size_t>();
  c.pipeline.budgets.passage_chars = doc["budgets"]["passage_chars"].get<std::size_t>();

  c.output_dir = doc["output_dir"].get<std::string>();
  c.parallelism = doc["parallelism"].get<std::size_t>();
  c.seed = doc["seed"].get<std::uint64_t>();

  if (c.table_index_path.empty()) c.table_index_path = c.output_dir / "tables.index.json";
  if (c.exemplar_index_path.empty()) c.exemplar_index_path = c.output_dir / "exemplars.index.json";

  require_positive(c.parallelism, "parallelism");
  require_positive(c.pipeline.max_hops, "pipeline.max_hops");
  require_positive(c.pipeline.retrieval.k_tables, "pipeline.k_tables");
  require_positive(c.pipeline.budgets.table_chars, "budgets.table_chars");
  require_positive(c.embedder.batch_size, "embedder.batch_size");
  require_positive(c.embedder.max_in_flight, "embedder.max_in_flight");
  require_positive(c.generator.max_in_flight, "generator.max_in_flight");
  require_positive(c.generator.max_output_chars, "generator.max_output_chars");
  if (c.embedder.kind == EmbedderConfig::Kind::hashing) require_positive(c.embedder.dim, "embedder.dim");
  return c;
}

}  // namespace

RunConfig parse_config(std::string_view json_text, std::string_view source, const fs::path& base_dir,
                       const ConfigOverrides& overrides) {
  ojson doc = to_document(RunConfig{});
  doc["output_dir"] = "";  // filled in below so a relative default follows the cwd

  if (!json_text.empty()) {
    ojson file;
    try {
      file = ojson::parse(json_text);
    } catch (const ojson::parse_error& e) {
      throw UsageError(std::string(source) + ": malformed config: " + e.what());
    }
    if (!file.is_object()) throw UsageError(std::string(source) + ": config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      auto it = doc.find(key);
      if (it != doc.end() && it->is_object()) {
        if (!value.is_object()) {
          throw UsageError(std::string(source) + ": config key \"" + key + "\" expects a section");
        }
        for (const auto& [sub, sub_value] : value.items()) {
          assign(doc, key + "." + sub, sub_value, base_dir, source);
        }
      } else {
        assign(doc, key, value, base_dir, source);
      }
    }
  }

  const fs::path cwd = fs::current_path();
  for (const auto& [key, text] : overrides) {
    ojson* slot = slot_for(doc, key);
    if (slot == nullptr) throw UsageError("unknown config key \"" + key + "\"");
    assign(doc, key, parse_override(*slot, key, text), cwd, "command line");
  }
  if (doc["output_dir"].get<std::string>().empty()) doc["output_dir"] = resolve_path("out", cwd);

  return from_document(doc);
}

RunConfig load_config(const std::optional<fs::path>& path, const ConfigOverrides& overrides) {
  if (!path) return parse_config("", "defaults", fs::current_path(), overrides);
  std::string text;
  try {
    text = read_file(*path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw UsageError(path->string() + ": config file is empty");
  }
  auto base = fs::absolute(*path).parent_path();
  return parse_config(text, path->string(), base, overrides);
}

std::string resolved_config_text(const RunConfig& config) {
  return to_document(config).dump(2) + "\n";
}

fs::path echo_config(const RunConfig& config) {
  auto path = config.output_dir / "resolved_config.json";
  write_file(path, resolved_config_text(config));
  return path;
}

}  // namespace tablehop
