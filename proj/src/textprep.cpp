#include "tablehop/textprep.hpp"

#include <stdexcept>

#include "tablehop/utf8.hpp"

namespace tablehop {

namespace {

std::string single_line(std::string_view text) {
  std::string out(text);
  for (char& ch : out) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return out;
}

std::string join_fields(std::string_view label, const std::vector<std::string>& fields) {
  std::string line(label);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += " | ";
    line += sanitize_field(fields[i]);
  }
  return line;
}

}  // namespace

std::string sanitize_field(std::string_view text) {
  std::string out(text);
  for (char& ch : out) {
    if (ch == '|') {
      ch = '/';
    } else if (ch == '\n' || ch == '\r') {
      ch = ' ';
    }
  }
  return out;
}

FlattenedTable flatten_table(const Table& table, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("flatten_table: budget must be positive");

  FlattenedTable flat;
  flat.table_id = table.id;

  std::string text = "title: " + sanitize_field(table.page_title) +
                     " ; section: " + sanitize_field(table.section_title) + "\n" +
                     join_fields("header: ", table.header);
  std::size_t used = utf8::length(text);
  if (used > budget) {
    flat.text = std::string(utf8::prefix(text, budget));
    flat.truncated = true;
    return flat;
  }

  std::vector<std::string> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    cells.clear();
    for (const auto& cell : table.rows[r]) cells.push_back(cell.text);
    std::string line = "\n" + join_fields("row " + std::to_string(r + 1) + ": ", cells);
    std::size_t line_chars = utf8::length(line);
    if (used + line_chars > budget) {
      flat.truncated = true;
      break;
    }
    used += line_chars;
    text += line;
  }
  flat.text = std::move(text);
  return flat;
}

RichContext attach_passages(const FlattenedTable& flat, std::span<const Passage> passages,
                            std::size_t per_passage_budget) {
  RichContext ctx;
  ctx.table_id = flat.table_id;
  ctx.text = flat.text;
  for (const auto& passage : passages) {
    ctx.text += "\npassage (";
    ctx.text += single_line(passage.title);
    ctx.text += "): ";
    ctx.text += utf8::prefix(single_line(passage.text), per_passage_budget);
    ctx.passage_ids.push_back(passage.id);
  }
  return ctx;
}

}  // namespace tablehop
