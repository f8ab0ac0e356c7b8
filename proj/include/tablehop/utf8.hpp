#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Character budgets throughout the pipeline count Unicode code points, not
// bytes, so truncation never splits a multi-byte sequence.
namespace tablehop::utf8 {

/// Number of code points. Bytes that are not valid lead bytes count as one
/// character each.
std::size_t length(std::string_view text);

/// Longest prefix holding at most `max_chars` code points.
std::string_view prefix(std::string_view text, std::size_t max_chars);

}  // namespace tablehop::utf8
