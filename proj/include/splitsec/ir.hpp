//===-- ir.hpp - Textual SSA IR: types, parser, printer, verifier ---------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A deliberately small SSA IR. Every value carries an explicit type, there is
// no phi node (loop state lives in memory), and there is no floating point.
// Programs are plain values: once parsed they are never mutated in place, so
// they can be shared freely between threads.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace splitsec::ir {

using u128 = unsigned __int128;

enum class Type : std::uint8_t { Void, I8, I16, I32, I64, I128, Ptr };

/// Size in bytes of a value of type `t` in memory (0 for void).
unsigned byte_size(Type t);
unsigned bit_width(Type t);
bool is_integer(Type t);
std::string_view type_name(Type t);
std::optional<Type> parse_type(std::string_view word);
/// Truncates `v` to the width of `t`.
u128 mask_to(Type t, u128 v);

enum class Opcode : std::uint8_t {
  Alloca,
  SecretAlloca,
  Load,
  Store,
  Gep,
  Add,
  Sub,
  Xor,
  And,
  Or,
  Shl,
  Lshr,
  Mul,
  Icmp,
  Select,
  Br,
  CondBr,
  Call,
  Ret,
  Const,
};

std::string_view opcode_name(Opcode op);
std::optional<Opcode> parse_opcode(std::string_view word);
bool is_terminator(Opcode op);
bool is_binary(Opcode op);

enum class CmpPred : std::uint8_t { Eq, Ne, Ult, Ule, Ugt, Uge, Slt, Sle, Sgt, Sge };
std::string_view pred_name(CmpPred p);
std::optional<CmpPred> parse_pred(std::string_view word);

/// Source position. Positions never take part in structural equality.
struct SourceLoc {
  unsigned line = 0;
  unsigned col = 0;
  friend bool operator==(const SourceLoc &, const SourceLoc &) { return true; }
};

struct Operand {
  enum class Kind : std::uint8_t { Reg, Imm, Global };
  Kind kind = Kind::Imm;
  Type type = Type::I64;
  std::string name; // register or global name, without sigil
  u128 imm = 0;

  static Operand reg(Type t, std::string n) { return {Kind::Reg, t, std::move(n), 0}; }
  static Operand constant(Type t, u128 v) { return {Kind::Imm, t, {}, mask_to(t, v)}; }
  static Operand global(std::string n) { return {Kind::Global, Type::Ptr, std::move(n), 0}; }

  bool operator==(const Operand &) const = default;
};

struct Instruction {
  Opcode op = Opcode::Const;
  std::string result; // empty when the instruction defines nothing
  Type type = Type::Void;
  std::vector<Operand> operands;

  CmpPred pred = CmpPred::Eq;    // icmp
  std::uint64_t alloc_size = 0;  // alloca / secret_alloca
  bool secret = false;           // alloca annotation
  unsigned align = 0;            // load / store
  std::string callee;            // call
  bool varargs = false;          // call
  std::vector<std::string> targets; // br / condbr
  SourceLoc loc;

  bool operator==(const Instruction &) const = default;
};

struct BasicBlock {
  std::string label;
  std::vector<Instruction> insts;
  SourceLoc loc;
  bool operator==(const BasicBlock &) const = default;
};

struct Param {
  Type type = Type::I64;
  std::string name;
  bool operator==(const Param &) const = default;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  std::vector<BasicBlock> blocks;
  SourceLoc loc;

  /// Return type inferred from the first `ret`; Void when there is none.
  Type return_type() const;
  bool operator==(const FunctionDef &) const = default;
};

struct GlobalDef {
  std::string name;
  std::uint64_t size = 0;
  std::vector<std::uint8_t> init;
  bool secret = false;
  SourceLoc loc;
  bool operator==(const GlobalDef &) const = default;
};

struct Program {
  std::map<std::string, std::string> metadata;
  std::vector<GlobalDef> globals;
  std::vector<FunctionDef> functions;
  std::string entry = "main";

  const FunctionDef *find_function(std::string_view name) const;
  const GlobalDef *find_global(std::string_view name) const;
  bool operator==(const Program &) const = default;
};

//===----------------------------------------------------------------------===//
// Diagnostics
//===----------------------------------------------------------------------===//

enum class DiagKind : std::uint8_t {
  SyntaxError,
  DuplicateDefinition,
  UndefinedName,
  MalformedBlock,
  TypeMismatch,
  DominanceViolation,
  InvalidOperand,
  MissingEntry,
};

std::string_view diag_kind_name(DiagKind k);

struct Diagnostic {
  DiagKind kind = DiagKind::SyntaxError;
  std::string message;
  SourceLoc loc;
  std::string function;
  std::string block;
  int index = -1; // instruction index within the block

  std::string to_string() const;
};

/// Thrown by parse_program. Carries every error found, in source order.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic> &diagnostics() const { return diags_; }

private:
  std::vector<Diagnostic> diags_;
};

Program parse_program(std::string_view text);
std::string print_program(const Program &p);
std::vector<Diagnostic> validate(const Program &p);

/// Name-resolution subset of validate(): duplicates and undefined references.
std::vector<Diagnostic> check_names(const Program &p);

//===----------------------------------------------------------------------===//
// Intrinsics
//===----------------------------------------------------------------------===//

/// Calls to names that are not functions of the program resolve to one of
/// these. The `ss_` family is the runtime ABI that the transform emits.
enum class Intrinsic : std::uint8_t {
  Malloc,
  Free,
  SecretMalloc,
  SecretFree,
  Memcpy,
  Memset,
  Memcmp,
  WriteOut,
  SsLoad8,
  SsLoad16,
  SsLoad32,
  SsLoad64,
  SsLoad128,
  SsStore8,
  SsStore16,
  SsStore32,
  SsStore64,
  SsStore128,
  SsSecretMalloc,
  SsSecretFree,
  SsDeclassify,
  SsClassify,
  SsFramePush,
  SsFramePop,
  SsMemcpy,
  SsMemset,
  SsMemcmp,
  SsIsSecret,
  SsBindGlobal,
};

std::optional<Intrinsic> lookup_intrinsic(std::string_view name);
std::string_view intrinsic_name(Intrinsic i);
bool is_runtime_intrinsic(Intrinsic i); // the ss_ family

/// Access width in bytes of an ss_load / ss_store intrinsic, 0 otherwise.
unsigned intrinsic_access_size(Intrinsic i);
std::string_view ss_load_name(unsigned bytes);
std::string_view ss_store_name(unsigned bytes);

/// Name of the constructor the transform emits for secret globals; the vm
/// runs it before the entry function.
inline constexpr std::string_view kGlobalCtorName = "__ss_global_ctor";

} // namespace splitsec::ir
