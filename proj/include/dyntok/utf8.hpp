#pragma once

#include <string>
#include <string_view>

namespace dyntok {

/// Decodes UTF-8 into Unicode scalar values. Rejects overlong forms,
/// surrogates and values above U+10FFFF with an error naming the byte offset.
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view text);
void utf8_append(std::string& out, char32_t cp);

/// Reads a whole file as UTF-8 text.
std::u32string read_text_file(const std::string& path);
std::string read_file_bytes(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view bytes);

/// Printable rendering of one code point for error messages ('a', U+000A).
std::string describe_char(char32_t cp);

}  // namespace dyntok
