//===-- lexer.cpp - Tokenizer for the textual IR --------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "ir/lexer.hpp"

namespace splitsec::ir::detail {

static bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.' || c == '-' || c == '$';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  unsigned line = 1, col = 1;
  size_t i = 0;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == ';') {
      while (i < text.size() && text[i] != '\n')
        advance(1);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }

    Token tok;
    tok.loc = {line, col};
    if (text.substr(i, 3) == "...") {
      tok.kind = Tok::Ellipsis;
      tok.text = "...";
      advance(3);
    } else if (c == '%' || c == '@' || c == '!') {
      tok.kind = c == '%' ? Tok::Reg : c == '@' ? Tok::Global : Tok::Meta;
      advance(1);
      size_t start = i;
      while (i < text.size() && is_word_char(text[i]))
        advance(1);
      tok.text = std::string(text.substr(start, i - start));
      if (tok.text.empty())
        tok.kind = Tok::Invalid;
    } else if (is_word_char(c)) {
      tok.kind = Tok::Word;
      size_t start = i;
      while (i < text.size() && is_word_char(text[i]))
        advance(1);
      tok.text = std::string(text.substr(start, i - start));
    } else if (c == '(' || c == ')' || c == '{' || c == '}' || c == ',' || c == ':' || c == '=') {
      tok.kind = Tok::Punct;
      tok.text = std::string(1, c);
      advance(1);
    } else {
      tok.kind = Tok::Invalid;
      tok.text = std::string(1, c);
      advance(1);
    }
    out.push_back(std::move(tok));
  }

  Token end;
  end.kind = Tok::End;
  end.loc = {line, col};
  out.push_back(std::move(end));
  return out;
}

} // namespace splitsec::ir::detail
