//===-- lexer.hpp - Tokenizer for the textual IR ----------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/ir.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace splitsec::ir::detail {

enum class Tok : std::uint8_t { Word, Reg, Global, Meta, Punct, Ellipsis, Invalid, End };

struct Token {
  Tok kind = Tok::End;
  std::string text; // without sigil for Reg/Global/Meta
  SourceLoc loc;

  bool is_punct(char c) const { return kind == Tok::Punct && text.size() == 1 && text[0] == c; }
  bool is_word(std::string_view w) const { return kind == Tok::Word && text == w; }
};

/// Newlines carry no meaning; comments run from ';' to end of line.
std::vector<Token> tokenize(std::string_view text);

} // namespace splitsec::ir::detail
