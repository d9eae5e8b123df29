#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace irx::text {

std::string trim(std::string_view s);

// ASCII lowercase. Non-ASCII bytes are left untouched.
std::string lower(std::string_view s);
std::string upper(std::string_view s);

// Collapses runs of whitespace into a single space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Normalization used by exact match and label agreement:
// trim, casefold, collapse internal whitespace.
std::string normalize_for_match(std::string_view s);

// Splits on whitespace; used for word counts.
std::vector<std::string> split_whitespace(std::string_view s);

// Lowercased word tokens: maximal runs of alphanumeric bytes (bytes >= 0x80
// count as word characters so UTF-8 words stay intact). Punctuation and
// whitespace separate tokens.
std::vector<std::string> word_tokens(std::string_view s);

std::size_t count_words(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool iequals(std::string_view a, std::string_view b);

bool starts_with(std::string_view s, std::string_view prefix);

std::string read_file(const std::string& path);

// RFC 4180 field quoting: quoted only when it holds a comma, quote or newline.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);
// Parses CSV with quoted fields; a trailing newline does not add a row.
// Throws Error on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace irx::text
