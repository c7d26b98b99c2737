//===-- parser.cpp - Recursive-descent parser for the textual IR ----------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "ir/lexer.hpp"

#include <cctype>

namespace splitsec::ir {

using detail::Tok;
using detail::Token;

namespace {

struct Bail {};

std::optional<u128> parse_integer(std::string_view w) {
  bool neg = false;
  if (!w.empty() && w.front() == '-') {
    neg = true;
    w.remove_prefix(1);
  }
  if (w.empty())
    return std::nullopt;
  u128 v = 0;
  if (w.size() > 2 && w[0] == '0' && (w[1] == 'x' || w[1] == 'X')) {
    w.remove_prefix(2);
    if (w.size() > 32)
      return std::nullopt;
    for (char c : w) {
      int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
              : (c >= 'a' && c <= 'f')                     ? c - 'a' + 10
              : (c >= 'A' && c <= 'F')                     ? c - 'A' + 10
                                                           : -1;
      if (d < 0)
        return std::nullopt;
      v = (v << 4) | u128(d);
    }
  } else {
    const u128 limit = ~u128(0) / 10;
    for (char c : w) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        return std::nullopt;
      if (v > limit)
        return std::nullopt;
      v = v * 10 + u128(c - '0');
    }
  }
  return neg ? u128(0) - v : v;
}

bool looks_numeric(const Token &t) {
  if (t.kind != Tok::Word || t.text.empty())
    return false;
  char c = t.text[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-';
}

class Parser {
public:
  explicit Parser(std::string_view text) : toks_(detail::tokenize(text)) {}

  Program run() {
    Program p;
    while (!at(Tok::End)) {
      try {
        parse_item(p);
      } catch (Bail &) {
        recover_top_level();
      }
    }
    return p;
  }

  std::vector<Diagnostic> take_diags() { return std::move(diags_); }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<Diagnostic> diags_;
  std::string cur_fn_;
  std::string cur_block_;

  const Token &peek(size_t k = 0) const {
    size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok k) const { return peek().kind == k; }
  const Token &next() {
    const Token &t = peek();
    if (pos_ < toks_.size() - 1)
      ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token &t, std::string msg) {
    Diagnostic d;
    d.kind = DiagKind::SyntaxError;
    d.message = std::move(msg);
    d.loc = t.loc;
    d.function = cur_fn_;
    d.block = cur_block_;
    diags_.push_back(std::move(d));
    throw Bail{};
  }

  static std::string describe(const Token &t) {
    switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Reg: return "'%" + t.text + "'";
    case Tok::Global: return "'@" + t.text + "'";
    case Tok::Meta: return "'!" + t.text + "'";
    default: return "'" + t.text + "'";
    }
  }

  void expect_punct(char c) {
    if (!peek().is_punct(c))
      fail(peek(), std::string("expected '") + c + "', found " + describe(peek()));
    next();
  }

  void expect_word(std::string_view w) {
    if (!peek().is_word(w))
      fail(peek(), "expected '" + std::string(w) + "', found " + describe(peek()));
    next();
  }

  bool accept_punct(char c) {
    if (peek().is_punct(c)) {
      next();
      return true;
    }
    return false;
  }

  std::string expect_name() {
    const Token &t = peek();
    if (t.kind == Tok::Word || t.kind == Tok::Global) {
      next();
      return t.text;
    }
    fail(t, "expected a name, found " + describe(t));
  }

  std::string expect_reg() {
    if (!at(Tok::Reg))
      fail(peek(), "expected a register, found " + describe(peek()));
    return next().text;
  }

  Type expect_type(bool allow_void = false) {
    const Token &t = peek();
    if (t.kind == Tok::Word) {
      if (t.text == "f32" || t.text == "f64" || t.text == "float" || t.text == "double")
        fail(t, "floating-point types are not supported");
      if (auto ty = parse_type(t.text); ty && (allow_void || *ty != Type::Void)) {
        next();
        return *ty;
      }
    }
    fail(t, "expected a type, found " + describe(t));
  }

  u128 expect_integer() {
    const Token &t = peek();
    if (looks_numeric(t))
      if (auto v = parse_integer(t.text)) {
        next();
        return *v;
      }
    fail(t, "expected an integer, found " + describe(t));
  }

  Operand parse_value(Type ty) {
    const Token &t = peek();
    if (t.kind == Tok::Reg) {
      next();
      return Operand::reg(ty, t.text);
    }
    if (t.kind == Tok::Global) {
      if (ty != Type::Ptr)
        fail(t, "global '@" + t.text + "' used as " + std::string(type_name(ty)));
      next();
      return Operand::global(t.text);
    }
    if (looks_numeric(t)) {
      if (auto v = parse_integer(t.text)) {
        next();
        return Operand::constant(ty, *v);
      }
    }
    fail(t, "expected a value, found " + describe(t));
  }

  void recover_top_level() {
    while (!at(Tok::End) && !peek().is_word("fn") && !peek().is_word("global") &&
           !at(Tok::Meta) && !peek().is_word("entry"))
      next();
  }

  void parse_item(Program &p) {
    cur_fn_.clear();
    cur_block_.clear();
    const Token &t = peek();
    if (t.kind == Tok::Meta) {
      next();
      const Token &v = peek();
      if (v.kind != Tok::Word)
        fail(v, "expected a metadata value, found " + describe(v));
      next();
      p.metadata[t.text] = v.text;
    } else if (t.is_word("entry")) {
      next();
      p.entry = expect_name();
    } else if (t.is_word("global")) {
      parse_global(p);
    } else if (t.is_word("fn")) {
      parse_function(p);
    } else {
      next();
      fail(t, "expected 'fn', 'global', 'entry' or metadata, found " + describe(t));
    }
  }

  void parse_global(Program &p) {
    GlobalDef g;
    g.loc = next().loc;
    g.name = expect_name();
    expect_punct(':');
    u128 size = expect_integer();
    if (size == 0 || size > (u128(1) << 32))
      fail(peek(), "global size out of range");
    g.size = static_cast<std::uint64_t>(size);
    expect_punct('=');
    const Token &init = peek();
    if (init.is_word("zeroinit")) {
      next();
      g.init.assign(g.size, 0);
    } else if (init.kind == Tok::Word) {
      next();
      const std::string &hex = init.text;
      if (hex.size() % 2 != 0)
        fail(init, "initializer must have an even number of hex digits");
      for (size_t i = 0; i < hex.size(); i += 2) {
        auto b = parse_integer("0x" + hex.substr(i, 2));
        if (!b)
          fail(init, "bad hex byte in initializer");
        g.init.push_back(static_cast<std::uint8_t>(*b));
      }
      if (g.init.size() != g.size)
        fail(init, "initializer has " + std::to_string(g.init.size()) + " bytes, expected " +
                       std::to_string(g.size));
    } else {
      fail(init, "expected hex bytes or 'zeroinit', found " + describe(init));
    }
    if (peek().is_word("secret")) {
      next();
      g.secret = true;
    }
    p.globals.push_back(std::move(g));
  }

  void parse_function(Program &p) {
    FunctionDef f;
    f.loc = next().loc;
    f.name = expect_name();
    cur_fn_ = f.name;
    expect_punct('(');
    if (!peek().is_punct(')')) {
      do {
        Param prm;
        prm.type = expect_type();
        prm.name = expect_reg();
        f.params.push_back(std::move(prm));
      } while (accept_punct(','));
    }
    expect_punct(')');
    expect_punct('{');

    while (!peek().is_punct('}')) {
      if (at(Tok::End))
        fail(peek(), "unterminated function '" + f.name + "'");
      try {
        parse_body_element(f);
      } catch (Bail &) {
        recover_in_body();
      }
    }
    next(); // '}'
    p.functions.push_back(std::move(f));
  }

  // Skip to the first token on a later line that can begin an instruction.
  void recover_in_body() {
    unsigned line = peek().loc.line;
    while (!at(Tok::End) && !peek().is_punct('}')) {
      const Token &t = peek();
      if (t.loc.line != line &&
          (t.kind == Tok::Reg || t.is_word("store") || t.is_word("call") || t.is_word("br") ||
           t.is_word("condbr") || t.is_word("ret") ||
           (t.kind == Tok::Word && peek(1).is_punct(':'))))
        return;
      next();
    }
  }

  BasicBlock &current_block(FunctionDef &f, const Token &at_tok) {
    if (f.blocks.empty()) {
      BasicBlock bb;
      bb.label = "entry";
      bb.loc = at_tok.loc;
      f.blocks.push_back(std::move(bb));
      cur_block_ = "entry";
    }
    return f.blocks.back();
  }

  void parse_body_element(FunctionDef &f) {
    const Token &t = peek();
    if (t.kind == Tok::Word && peek(1).is_punct(':')) {
      BasicBlock bb;
      bb.label = t.text;
      bb.loc = t.loc;
      next();
      next();
      cur_block_ = bb.label;
      f.blocks.push_back(std::move(bb));
      return;
    }
    Instruction ins = parse_instruction();
    current_block(f, t).insts.push_back(std::move(ins));
  }

  unsigned parse_align_suffix(Type ty) {
    unsigned align = std::min(byte_size(ty), 8u);
    if (accept_punct(',')) {
      expect_word("align");
      u128 a = expect_integer();
      if (a != 1 && a != 2 && a != 4 && a != 8)
        fail(peek(), "alignment must be 1, 2, 4 or 8");
      align = static_cast<unsigned>(a);
    }
    return align;
  }

  void parse_call_tail(Instruction &ins) {
    const Token &callee = peek();
    if (callee.kind != Tok::Global && callee.kind != Tok::Word)
      fail(callee, "expected a callee, found " + describe(callee));
    next();
    ins.callee = callee.text;
    expect_punct('(');
    if (!peek().is_punct(')')) {
      do {
        if (at(Tok::Ellipsis)) {
          next();
          ins.varargs = true;
          break;
        }
        Type ty = expect_type();
        ins.operands.push_back(parse_value(ty));
      } while (accept_punct(','));
    }
    expect_punct(')');
  }

  Instruction parse_instruction() {
    Instruction ins;
    const Token &first = peek();
    ins.loc = first.loc;

    if (first.kind == Tok::Reg) {
      next();
      ins.result = first.text;
      expect_punct('=');
      const Token &opTok = peek();
      auto op = opTok.kind == Tok::Word ? parse_opcode(opTok.text) : std::nullopt;
      if (!op)
        fail(opTok, "unknown opcode " + describe(opTok));
      next();
      ins.op = *op;
      switch (*op) {
      case Opcode::Alloca:
      case Opcode::SecretAlloca: {
        ins.type = Type::Ptr;
        u128 size = expect_integer();
        if (size == 0 || size > (u128(1) << 32))
          fail(opTok, "allocation size out of range");
        ins.alloc_size = static_cast<std::uint64_t>(size);
        if (*op == Opcode::Alloca && peek().is_word("secret")) {
          next();
          ins.secret = true;
        }
        break;
      }
      case Opcode::Load: {
        ins.type = expect_type();
        expect_punct(',');
        expect_word("ptr");
        ins.operands.push_back(parse_value(Type::Ptr));
        ins.align = parse_align_suffix(ins.type);
        break;
      }
      case Opcode::Gep: {
        ins.type = Type::Ptr;
        expect_word("ptr");
        ins.operands.push_back(parse_value(Type::Ptr));
        expect_punct(',');
        Type off = expect_type();
        ins.operands.push_back(parse_value(off));
        break;
      }
      case Opcode::Icmp: {
        const Token &pt = peek();
        auto pred = pt.kind == Tok::Word ? parse_pred(pt.text) : std::nullopt;
        if (!pred)
          fail(pt, "unknown comparison predicate " + describe(pt));
        next();
        ins.pred = *pred;
        ins.type = Type::I8;
        Type ty = expect_type();
        ins.operands.push_back(parse_value(ty));
        expect_punct(',');
        ins.operands.push_back(parse_value(ty));
        break;
      }
      case Opcode::Select: {
        Type condTy = expect_type();
        ins.operands.push_back(parse_value(condTy));
        expect_punct(',');
        ins.type = expect_type();
        ins.operands.push_back(parse_value(ins.type));
        expect_punct(',');
        ins.operands.push_back(parse_value(ins.type));
        break;
      }
      case Opcode::Const: {
        ins.type = expect_type();
        if (!is_integer(ins.type))
          fail(peek(), "const requires an integer type");
        ins.operands.push_back(Operand::constant(ins.type, expect_integer()));
        break;
      }
      case Opcode::Call: {
        ins.type = expect_type();
        if (ins.type == Type::Void)
          fail(opTok, "void call cannot define a register");
        parse_call_tail(ins);
        break;
      }
      default:
        if (is_binary(*op)) {
          ins.type = expect_type();
          ins.operands.push_back(parse_value(ins.type));
          expect_punct(',');
          ins.operands.push_back(parse_value(ins.type));
          break;
        }
        fail(opTok, "'" + opTok.text + "' does not define a register");
      }
      return ins;
    }

    if (first.is_word("store")) {
      next();
      ins.op = Opcode::Store;
      ins.type = expect_type();
      ins.operands.push_back(parse_value(ins.type));
      expect_punct(',');
      expect_word("ptr");
      ins.operands.push_back(parse_value(Type::Ptr));
      ins.align = parse_align_suffix(ins.type);
      return ins;
    }
    if (first.is_word("call")) {
      next();
      ins.op = Opcode::Call;
      ins.type = expect_type(true);
      if (ins.type != Type::Void)
        fail(first, "result of non-void call must be assigned to a register");
      parse_call_tail(ins);
      return ins;
    }
    if (first.is_word("br")) {
      next();
      ins.op = Opcode::Br;
      ins.targets.push_back(expect_name());
      return ins;
    }
    if (first.is_word("condbr")) {
      next();
      ins.op = Opcode::CondBr;
      Type ty = expect_type();
      ins.operands.push_back(parse_value(ty));
      expect_punct(',');
      ins.targets.push_back(expect_name());
      expect_punct(',');
      ins.targets.push_back(expect_name());
      return ins;
    }
    if (first.is_word("ret")) {
      next();
      ins.op = Opcode::Ret;
      ins.type = expect_type(true);
      if (ins.type != Type::Void)
        ins.operands.push_back(parse_value(ins.type));
      return ins;
    }
    next();
    fail(first, "expected an instruction, found " + describe(first));
  }
};

} // namespace

Program parse_program(std::string_view text) {
  Parser parser(text);
  Program p = parser.run();
  std::vector<Diagnostic> diags = parser.take_diags();
  if (diags.empty()) {
    for (Diagnostic &d : check_names(p)) {
      if (d.kind == DiagKind::UndefinedName)
        d.kind = DiagKind::SyntaxError;
      diags.push_back(std::move(d));
    }
  }
  if (!diags.empty())
    throw ParseError(std::move(diags));
  return p;
}

} // namespace splitsec::ir
