#include "tablehop/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tablehop/error.hpp"

namespace tablehop {

using json = nlohmann::json;

namespace {

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

// Calls fn(record, line_number) for each non-blank line.
template <typename Fn>
void for_each_record(std::string_view text, std::string_view source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where(source, line_no) + ": malformed JSON: " + e.what());
    }
    if (!record.is_object()) {
      throw DataError(where(source, line_no) + ": malformed record: expected a JSON object");
    }
    fn(record, line_no);
  }
}

void warn_unknown(const json& record, std::initializer_list<std::string_view> known,
                  std::string_view source, std::size_t line, std::vector<std::string>* warnings) {
  if (warnings == nullptr) return;
  for (const auto& [key, _] : record.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) warnings->push_back(where(source, line) + ": ignoring unknown field \"" + key + "\"");
  }
}

std::string get_string(const json& record, const char* key, std::string_view source,
                       std::size_t line, bool required = true) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    if (required) throw DataError(where(source, line) + ": missing required field \"" + key + "\"");
    return {};
  }
  if (!it->is_string()) {
    throw DataError(where(source, line) + ": field \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> get_string_list(const json& value, const char* key,
                                         std::string_view source, std::size_t line) {
  if (!value.is_array()) {
    throw DataError(where(source, line) + ": field \"" + key + "\" must be a list of strings");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw DataError(where(source, line) + ": field \"" + key + "\" must be a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

Cell parse_cell(const json& value, std::string_view source, std::size_t line) {
  if (!value.is_object()) {
    throw DataError(where(source, line) + ": each cell must be an object with \"text\" and \"links\"");
  }
  Cell cell;
  cell.text = get_string(value, "text", source, line);
  if (auto it = value.find("links"); it != value.end() && !it->is_null()) {
    cell.links = get_string_list(*it, "links", source, line);
  }
  return cell;
}

}  // namespace

std::vector<std::string> Table::linked_passage_ids() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& row : rows) {
    for (const auto& cell : row) {
      for (const auto& link : cell.links) {
        if (seen.insert(link).second) out.push_back(link);
      }
    }
  }
  return out;
}

const Table& Corpus::table(const std::string& id) const {
  auto it = tables.find(id);
  if (it == tables.end()) throw DataError("unknown table id \"" + id + "\"");
  return it->second;
}

const Passage* Corpus::find_passage(const std::string& id) const {
  auto it = passages.find(id);
  return it == passages.end() ? nullptr : &it->second;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
  }
  return "dev";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "dev") return Split::dev;
  if (text == "test") return Split::test;
  throw UsageError("unknown split \"" + std::string(text) + "\" (expected train, dev or test)");
}

void ValidationReport::add_error(std::string message) {
  errors.push_back(std::move(message));
  error_count = errors.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("failed reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

void parse_tables_jsonl(std::string_view text, std::string_view source, Corpus& into,
                        std::vector<std::string>* warnings) {
  for_each_record(text, source, [&](const json& record, std::size_t line) {
    warn_unknown(record, {"id", "page_title", "section_title", "header", "rows"}, source, line,
                 warnings);
    Table table;
    table.id = get_string(record, "id", source, line);
    if (table.id.empty()) throw DataError(where(source, line) + ": table id must be non-empty");
    table.page_title = get_string(record, "page_title", source, line);
    table.section_title = get_string(record, "section_title", source, line, false);
    auto header = record.find("header");
    if (header == record.end()) {
      throw DataError(where(source, line) + ": missing required field \"header\"");
    }
    table.header = get_string_list(*header, "header", source, line);

    auto rows = record.find("rows");
    if (rows == record.end()) {
      throw DataError(where(source, line) + ": missing required field \"rows\"");
    }
    if (!rows->is_array()) throw DataError(where(source, line) + ": field \"rows\" must be a list");
    for (const auto& row_json : *rows) {
      if (!row_json.is_array()) {
        throw DataError(where(source, line) + ": each row must be a list of cells");
      }
      std::vector<Cell> row;
      row.reserve(row_json.size());
      for (const auto& cell : row_json) row.push_back(parse_cell(cell, source, line));
      if (row.size() != table.header.size()) {
        throw DataError(where(source, line) + ": table \"" + table.id + "\": row-length mismatch (row " +
                        std::to_string(table.rows.size() + 1) + " has " + std::to_string(row.size()) +
                        " cells, header has " + std::to_string(table.header.size()) + ")");
      }
      table.rows.push_back(std::move(row));
    }

    auto id = table.id;
    if (!into.tables.emplace(id, std::move(table)).second) {
      throw DataError(where(source, line) + ": duplicate table id \"" + id + "\"");
    }
  });
}

void parse_passages_jsonl(std::string_view text, std::string_view source, Corpus& into,
                          std::vector<std::string>* warnings) {
  for_each_record(text, source, [&](const json& record, std::size_t line) {
    warn_unknown(record, {"id", "title", "text"}, source, line, warnings);
    Passage passage;
    passage.id = get_string(record, "id", source, line);
    if (passage.id.empty()) throw DataError(where(source, line) + ": passage id must be non-empty");
    passage.title = get_string(record, "title", source, line);
    passage.text = get_string(record, "text", source, line);
    auto id = passage.id;
    if (!into.passages.emplace(id, std::move(passage)).second) {
      throw DataError(where(source, line) + ": duplicate passage id \"" + id + "\"");
    }
  });
}

Corpus load_corpus(const std::filesystem::path& tables_path,
                   const std::filesystem::path& passages_path, std::vector<std::string>* warnings) {
  Corpus corpus;
  parse_tables_jsonl(read_file(tables_path), tables_path.string(), corpus, warnings);
  parse_passages_jsonl(read_file(passages_path), passages_path.string(), corpus, warnings);
  return corpus;
}

std::string serialize_tables_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& [id, table] : corpus.tables) {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json cells = json::array();
      for (const auto& cell : row) cells.push_back({{"text", cell.text}, {"links", cell.links}});
      rows.push_back(std::move(cells));
    }
    json record = {{"id", table.id},
                   {"page_title", table.page_title},
                   {"section_title", table.section_title},
                   {"header", table.header},
                   {"rows", std::move(rows)}};
    out += record.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_passages_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& [id, passage] : corpus.passages) {
    json record = {{"id", passage.id}, {"title", passage.title}, {"text", passage.text}};
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& tables_path,
                 const std::filesystem::path& passages_path) {
  write_file(tables_path, serialize_tables_jsonl(corpus));
  write_file(passages_path, serialize_passages_jsonl(corpus));
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  for (const auto& [key, table] : corpus.tables) {
    if (table.id.empty()) report.add_error("table with empty id");
    if (key != table.id) {
      report.add_error("table \"" + table.id + "\" stored under key \"" + key + "\"");
    }
    if (table.header.empty()) report.add_error("table \"" + table.id + "\": empty header");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      if (row.size() != table.header.size()) {
        report.add_error("table \"" + table.id + "\": row-length mismatch in row " +
                         std::to_string(r + 1));
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        for (const auto& link : row[c].links) {
          if (corpus.passages.find(link) == corpus.passages.end()) {
            report.add_error("table \"" + table.id + "\" row " + std::to_string(r + 1) +
                             " column " + std::to_string(c + 1) +
                             ": dangling link to passage \"" + link + "\"");
          }
        }
      }
    }
  }
  for (const auto& [key, passage] : corpus.passages) {
    if (passage.id.empty()) report.add_error("passage with empty id");
    if (key != passage.id) {
      report.add_error("passage \"" + passage.id + "\" stored under key \"" + key + "\"");
    }
    if (passage.text.empty()) {
      report.warnings.push_back("passage \"" + passage.id + "\": empty text");
    }
  }
  return report;
}

std::vector<QAExample> parse_qa_jsonl(std::string_view text, std::string_view source, Split split,
                                      std::vector<std::string>* warnings) {
  std::vector<QAExample> out;
  std::set<std::string> seen;
  for_each_record(text, source, [&](const json& record, std::size_t line) {
    warn_unknown(record, {"id", "question", "answers", "gold_table_id", "gold_passage_ids"}, source,
                 line, warnings);
    QAExample ex;
    ex.split = split;
    ex.id = get_string(record, "id", source, line);
    if (ex.id.empty()) throw DataError(where(source, line) + ": question id must be non-empty");
    ex.question = get_string(record, "question", source, line);
    auto answers = record.find("answers");
    if (answers == record.end()) {
      throw DataError(where(source, line) + ": record \"" + ex.id +
                      "\": missing required field \"answers\"");
    }
    ex.answers = get_string_list(*answers, "answers", source, line);
    if (ex.answers.empty()) {
      throw DataError(where(source, line) + ": record \"" + ex.id + "\": answers must be non-empty");
    }
    if (auto it = record.find("gold_table_id"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw DataError(where(source, line) + ": field \"gold_table_id\" must be a string");
      }
      ex.gold_table_id = it->get<std::string>();
    }
    if (auto it = record.find("gold_passage_ids"); it != record.end() && !it->is_null()) {
      ex.gold_passage_ids = get_string_list(*it, "gold_passage_ids", source, line);
    }
    if (split == Split::train && !ex.gold_table_id) {
      throw DataError(where(source, line) + ": train record \"" + ex.id +
                      "\" is missing required field \"gold_table_id\"");
    }
    if (!seen.insert(ex.id).second) {
      throw DataError(where(source, line) + ": duplicate question id \"" + ex.id + "\"");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<QAExample> load_qa_set(const std::filesystem::path& path, Split split,
                                   std::vector<std::string>* warnings) {
  return parse_qa_jsonl(read_file(path), path.string(), split, warnings);
}

std::string serialize_qa_jsonl(const std::vector<QAExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    json record = {{"id", ex.id}, {"question", ex.question}, {"answers", ex.answers}};
    if (ex.gold_table_id) record["gold_table_id"] = *ex.gold_table_id;
    if (ex.gold_passage_ids) record["gold_passage_ids"] = *ex.gold_passage_ids;
    out += record.dump();
    out += '\n';
  }
  return out;
}

}  // namespace tablehop
