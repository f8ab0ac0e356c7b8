#include "tablehop/utf8.hpp"

namespace tablehop::utf8 {

namespace {

bool is_continuation(unsigned char byte) { return (byte & 0xC0U) == 0x80U; }

}  // namespace

std::size_t length(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char byte : text) {
    if (!is_continuation(byte)) ++count;
  }
  return count;
}

std::string_view prefix(std::string_view text, std::size_t max_chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(text[i]))) continue;
    if (seen == max_chars) return text.substr(0, i);
    ++seen;
  }
  return text;
}

}  // namespace tablehop::utf8
