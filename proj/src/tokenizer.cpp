// SPDX-License-Identifier: Apache-2.0
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <string_view>

#include "aspectforge/corpus.hpp"

namespace aspectforge {
namespace {

// ASCII punctuation (apostrophe excluded) plus Arabic-script marks used in
// Persian text: comma, semicolon, question mark, guillemets.
constexpr std::u32string_view filtered = U"!\"#$%&()*+,-./:;<=>?@[\\]^_`{|}~،؛؟«»";

bool is_separator(UChar32 c) {
  return u_isUWhiteSpace(c) || filtered.find(static_cast<char32_t>(c)) != std::u32string_view::npos;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  icu::UnicodeString folded =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  folded.foldCase(U_FOLD_CASE_DEFAULT);

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string word;
    current.toUTF8String(word);
    tokens.push_back(std::move(word));
    current.remove();
  };
  for (int32_t i = 0; i < folded.length();) {
    const UChar32 c = folded.char32At(i);
    i += U16_LENGTH(c);
    if (is_separator(c))
      flush();
    else
      current.append(c);
  }
  flush();
  return tokens;
}

}  // namespace aspectforge
