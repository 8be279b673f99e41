#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sacl::text {

/// ASCII lowercasing; bytes >= 0x80 (UTF-8 continuation/lead bytes) pass through.
std::string lowercase(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on ASCII whitespace and emits every ASCII punctuation character as
/// its own token. Multi-byte UTF-8 sequences stay inside their word.
/// The output is lowercased. Shared by lexicon matching, prefix budgeting and
/// the hashing tokenizer so all three agree on token boundaries.
std::vector<std::string> segment(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Splits a line on '\t' (no quoting).
std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace sacl::text
