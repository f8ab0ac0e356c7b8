#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tablehop/corpus.hpp"

namespace tablehop {

/// Character budgets (code points) for table linearizations and for each
/// attached passage body.
struct Budgets {
  std::size_t table_chars = 4000;
  std::size_t passage_chars = 600;

  bool operator==(const Budgets&) const = default;
};

struct FlattenedTable {
  std::string table_id;
  std::string text;
  bool truncated = false;

  bool operator==(const FlattenedTable&) const = default;
};

struct RichContext {
  std::string table_id;
  std::string text;
  std::vector<std::string> passage_ids;

  bool operator==(const RichContext&) const = default;
};

/// Line-oriented linearization:
///
///   title: <page_title> ; section: <section_title>
///   header: h1 | h2 | ... | hn
///   row 1: c1 | c2 | ... | cn
///   ...
///
/// Cell links are dropped. Inside any field '|' becomes '/' and line breaks
/// become spaces. Whole trailing rows are dropped to stay within `budget`
/// code points. If the title and header lines alone exceed the budget they are
/// clipped to it. Both cases set `truncated`.
FlattenedTable flatten_table(const Table& table, std::size_t budget);

/// Appends one line per passage, `passage (<title>): <body>`, with the body
/// clipped to `per_passage_budget` code points. Caller order is preserved.
RichContext attach_passages(const FlattenedTable& flat, std::span<const Passage> passages,
                            std::size_t per_passage_budget);

/// The `|`/newline substitution applied to every flattened field.
std::string sanitize_field(std::string_view text);

}  // namespace tablehop
