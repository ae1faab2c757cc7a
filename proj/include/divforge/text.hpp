#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace divforge::text {

// Strict UTF-8: rejects overlong forms, surrogates and code points above
// U+10FFFF.
bool is_valid_utf8(std::string_view s);

// True when s holds a C0/C1 control or DEL other than tab and newline.
bool has_forbidden_control(std::string_view s);

std::string nfc(std::string_view s);

// Strips Unicode whitespace from both ends.
std::string trim(std::string_view s);

std::string to_lower(std::string_view s);

std::size_t code_point_count(std::string_view s);

// Decodes the code point starting at s[pos] and advances pos. Returns
// U+FFFD for ill-formed sequences (still advancing at least one byte).
char32_t next_code_point(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp);
bool is_letter(char32_t cp);
bool is_number(char32_t cp);
// Punctuation or symbol general category.
bool is_punct_or_symbol(char32_t cp);
char32_t simple_lower(char32_t cp);

}  // namespace divforge::text
