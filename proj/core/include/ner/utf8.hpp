#pragma once

#include <string_view>
#include <vector>

namespace ner {

// Splits a UTF-8 string into per-code-point views. Bytes that do not form
// a valid sequence are passed through one byte at a time.
inline std::vector<std::string_view> utf8_chars(std::string_view text) {
  std::vector<std::string_view> chars;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((lead & 0x80) == 0x00) len = 1;
    else if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    if (i + len > text.size()) len = 1;
    chars.push_back(text.substr(i, len));
    i += len;
  }
  return chars;
}

}  // namespace ner
