#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tablehop {

struct Passage {
  std::string id;
  std::string title;
  std::string text;

  bool operator==(const Passage&) const = default;
};

struct Cell {
  std::string text;
  std::vector<std::string> links;  // passage ids

  bool operator==(const Cell&) const = default;
};

struct Table {
  std::string id;
  std::string page_title;
  std::string section_title;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  /// Distinct passage ids linked from any cell, in row-major first-seen order.
  std::vector<std::string> linked_passage_ids() const;

  bool operator==(const Table&) const = default;
};

/// Tables and passages keyed by id. Ordered maps keep every downstream
/// iteration independent of input line order.
struct Corpus {
  std::map<std::string, Table> tables;
  std::map<std::string, Passage> passages;

  const Table& table(const std::string& id) const;
  const Passage* find_passage(const std::string& id) const;

  bool operator==(const Corpus&) const = default;
};

enum class Split { train, dev, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct QAExample {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::optional<std::string> gold_table_id;
  std::optional<std::vector<std::string>> gold_passage_ids;
  Split split = Split::dev;

  bool operator==(const QAExample&) const = default;
};

struct ValidationReport {
  std::size_t error_count = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;

  bool ok() const { return error_count == 0; }
  void add_error(std::string message);
};

/// Loads tables.jsonl and passages.jsonl. Throws DataError on IO failure,
/// malformed lines (message carries file and line number), duplicate ids and
/// row-length mismatches. Unknown fields are reported through `warnings`.
Corpus load_corpus(const std::filesystem::path& tables_path,
                   const std::filesystem::path& passages_path,
                   std::vector<std::string>* warnings = nullptr);

/// Parses corpus records from in-memory JSONL text. `source` names the origin
/// in error messages.
void parse_tables_jsonl(std::string_view text, std::string_view source, Corpus& into,
                        std::vector<std::string>* warnings = nullptr);
void parse_passages_jsonl(std::string_view text, std::string_view source, Corpus& into,
                          std::vector<std::string>* warnings = nullptr);

std::string serialize_tables_jsonl(const Corpus& corpus);
std::string serialize_passages_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& tables_path,
                 const std::filesystem::path& passages_path);

ValidationReport validate_corpus(const Corpus& corpus);

std::vector<QAExample> load_qa_set(const std::filesystem::path& path, Split split,
                                   std::vector<std::string>* warnings = nullptr);
std::vector<QAExample> parse_qa_jsonl(std::string_view text, std::string_view source, Split split,
                                      std::vector<std::string>* warnings = nullptr);
std::string serialize_qa_jsonl(const std::vector<QAExample>& examples);

/// Reads a whole file; throws DataError naming the path when it cannot.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace tablehop
