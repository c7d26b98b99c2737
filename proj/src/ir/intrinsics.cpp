//===-- intrinsics.cpp - Type, opcode and intrinsic tables ----------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "ir/signatures.hpp"

#include <array>
#include <sstream>

namespace splitsec::ir {

unsigned byte_size(Type t) {
  switch (t) {
  case Type::Void: return 0;
  case Type::I8: return 1;
  case Type::I16: return 2;
  case Type::I32: return 4;
  case Type::I64: return 8;
  case Type::I128: return 16;
  case Type::Ptr: return 8;
  }
  return 0;
}

unsigned bit_width(Type t) { return byte_size(t) * 8; }

bool is_integer(Type t) { return t != Type::Void && t != Type::Ptr; }

std::string_view type_name(Type t) {
  switch (t) {
  case Type::Void: return "void";
  case Type::I8: return "i8";
  case Type::I16: return "i16";
  case Type::I32: return "i32";
  case Type::I64: return "i64";
  case Type::I128: return "i128";
  case Type::Ptr: return "ptr";
  }
  return "?";
}

std::optional<Type> parse_type(std::string_view w) {
  for (Type t : {Type::Void, Type::I8, Type::I16, Type::I32, Type::I64, Type::I128, Type::Ptr})
    if (type_name(t) == w)
      return t;
  return std::nullopt;
}

u128 mask_to(Type t, u128 v) {
  unsigned bits = bit_width(t);
  if (bits == 0)
    return 0;
  if (bits >= 128)
    return v;
  return v & ((u128(1) << bits) - 1);
}

namespace {
constexpr std::array<std::string_view, 20> kOpcodeNames = {
    "alloca", "secret_alloca", "load", "store", "gep",    "add", "sub",
    "xor",    "and",           "or",   "shl",   "lshr",   "mul", "icmp",
    "select", "br",            "condbr", "call", "ret",   "const"};

constexpr std::array<std::string_view, 10> kPredNames = {"eq",  "ne",  "ult", "ule", "ugt",
                                                         "uge", "slt", "sle", "sgt", "sge"};
} // namespace

std::string_view opcode_name(Opcode op) { return kOpcodeNames[static_cast<size_t>(op)]; }

std::optional<Opcode> parse_opcode(std::string_view w) {
  for (size_t i = 0; i < kOpcodeNames.size(); ++i)
    if (kOpcodeNames[i] == w)
      return static_cast<Opcode>(i);
  return std::nullopt;
}

bool is_terminator(Opcode op) {
  return op == Opcode::Br || op == Opcode::CondBr || op == Opcode::Ret;
}

bool is_binary(Opcode op) {
  switch (op) {
  case Opcode::Add:
  case Opcode::Sub:
  case Opcode::Xor:
  case Opcode::And:
  case Opcode::Or:
  case Opcode::Shl:
  case Opcode::Lshr:
  case Opcode::Mul:
    return true;
  default:
    return false;
  }
}

std::string_view pred_name(CmpPred p) { return kPredNames[static_cast<size_t>(p)]; }

std::optional<CmpPred> parse_pred(std::string_view w) {
  for (size_t i = 0; i < kPredNames.size(); ++i)
    if (kPredNames[i] == w)
      return static_cast<CmpPred>(i);
  return std::nullopt;
}

Type FunctionDef::return_type() const {
  for (const auto &bb : blocks)
    for (const auto &ins : bb.insts)
      if (ins.op == Opcode::Ret)
        return ins.type;
  return Type::Void;
}

const FunctionDef *Program::find_function(std::string_view n) const {
  for (const auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

const GlobalDef *Program::find_global(std::string_view n) const {
  for (const auto &g : globals)
    if (g.name == n)
      return &g;
  return nullptr;
}

std::string_view diag_kind_name(DiagKind k) {
  switch (k) {
  case DiagKind::SyntaxError: return "SyntaxError";
  case DiagKind::DuplicateDefinition: return "DuplicateDefinition";
  case DiagKind::UndefinedName: return "UndefinedName";
  case DiagKind::MalformedBlock: return "MalformedBlock";
  case DiagKind::TypeMismatch: return "TypeMismatch";
  case DiagKind::DominanceViolation: return "DominanceViolation";
  case DiagKind::InvalidOperand: return "InvalidOperand";
  case DiagKind::MissingEntry: return "MissingEntry";
  }
  return "?";
}

std::string Diagnostic::to_string() const {
  std::ostringstream os;
  os << loc.line << ":" << loc.col << ": " << diag_kind_name(kind) << ": " << message;
  if (!function.empty()) {
    os << " (in " << function;
    if (!block.empty())
      os << "/" << block;
    if (index >= 0)
      os << "#" << index;
    os << ")";
  }
  return os.str();
}

static std::string join_diags(const std::vector<Diagnostic> &diags) {
  std::string out;
  for (const auto &d : diags) {
    if (!out.empty())
      out += "\n";
    out += d.to_string();
  }
  return out;
}

ParseError::ParseError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diags(diags)), diags_(std::move(diags)) {}

//===----------------------------------------------------------------------===//
// Intrinsic table
//===----------------------------------------------------------------------===//

namespace {

struct IntrinsicInfo {
  std::string_view name;
  Intrinsic id;
  detail::Signature sig;
};

const std::vector<IntrinsicInfo> &table() {
  using T = Type;
  static const std::vector<IntrinsicInfo> kTable = {
      {"malloc", Intrinsic::Malloc, {T::Ptr, {T::I64}}},
      {"free", Intrinsic::Free, {T::Void, {T::Ptr}}},
      {"secret_malloc", Intrinsic::SecretMalloc, {T::Ptr, {T::I64}}},
      {"secret_free", Intrinsic::SecretFree, {T::Void, {T::Ptr}}},
      {"memcpy", Intrinsic::Memcpy, {T::Void, {T::Ptr, T::Ptr, T::I64}}},
      {"memset", Intrinsic::Memset, {T::Void, {T::Ptr, T::I8, T::I64}}},
      {"memcmp", Intrinsic::Memcmp, {T::I32, {T::Ptr, T::Ptr, T::I64}}},
      {"write_out", Intrinsic::WriteOut, {T::Void, {T::Ptr, T::I64}}},
      {"ss_load8", Intrinsic::SsLoad8, {T::I8, {T::Ptr}}},
      {"ss_load16", Intrinsic::SsLoad16, {T::I16, {T::Ptr}}},
      {"ss_load32", Intrinsic::SsLoad32, {T::I32, {T::Ptr}}},
      {"ss_load64", Intrinsic::SsLoad64, {T::I64, {T::Ptr}, true}},
      {"ss_load128", Intrinsic::SsLoad128, {T::I128, {T::Ptr}}},
      {"ss_store8", Intrinsic::SsStore8, {T::Void, {T::Ptr, T::I8}}},
      {"ss_store16", Intrinsic::SsStore16, {T::Void, {T::Ptr, T::I16}}},
      {"ss_store32", Intrinsic::SsStore32, {T::Void, {T::Ptr, T::I32}}},
      {"ss_store64", Intrinsic::SsStore64, {T::Void, {T::Ptr, T::I64}, true}},
      {"ss_store128", Intrinsic::SsStore128, {T::Void, {T::Ptr, T::I128}}},
      {"ss_secret_malloc", Intrinsic::SsSecretMalloc, {T::Ptr, {T::I64}}},
      {"ss_secret_free", Intrinsic::SsSecretFree, {T::Void, {T::Ptr}}},
      {"ss_declassify", Intrinsic::SsDeclassify, {T::Ptr, {T::Ptr, T::I64}}},
      {"ss_classify", Intrinsic::SsClassify, {T::Void, {T::Ptr, T::Ptr, T::I64}}},
      {"ss_frame_push", Intrinsic::SsFramePush, {T::Void, {}}},
      {"ss_frame_pop", Intrinsic::SsFramePop, {T::Void, {}}},
      {"ss_memcpy", Intrinsic::SsMemcpy, {T::Void, {T::Ptr, T::Ptr, T::I64}}},
      {"ss_memset", Intrinsic::SsMemset, {T::Void, {T::Ptr, T::I8, T::I64}}},
      {"ss_memcmp", Intrinsic::SsMemcmp, {T::I32, {T::Ptr, T::Ptr, T::I64}}},
      {"ss_is_secret", Intrinsic::SsIsSecret, {T::I8, {T::Ptr}}},
      {"ss_bind_global", Intrinsic::SsBindGlobal, {T::Void, {T::Ptr, T::I64}}},
  };
  return kTable;
}

} // namespace

std::optional<Intrinsic> lookup_intrinsic(std::string_view name) {
  for (const auto &e : table())
    if (e.name == name)
      return e.id;
  return std::nullopt;
}

std::string_view intrinsic_name(Intrinsic i) {
  for (const auto &e : table())
    if (e.id == i)
      return e.name;
  return "?";
}

bool is_runtime_intrinsic(Intrinsic i) { return intrinsic_name(i).starts_with("ss_"); }

unsigned intrinsic_access_size(Intrinsic i) {
  switch (i) {
  case Intrinsic::SsLoad8:
  case Intrinsic::SsStore8: return 1;
  case Intrinsic::SsLoad16:
  case Intrinsic::SsStore16: return 2;
  case Intrinsic::SsLoad32:
  case Intrinsic::SsStore32: return 4;
  case Intrinsic::SsLoad64:
  case Intrinsic::SsStore64: return 8;
  case Intrinsic::SsLoad128:
  case Intrinsic::SsStore128: return 16;
  default: return 0;
  }
}

std::string_view ss_load_name(unsigned bytes) {
  switch (bytes) {
  case 1: return "ss_load8";
  case 2: return "ss_load16";
  case 4: return "ss_load32";
  case 8: return "ss_load64";
  case 16: return "ss_load128";
  }
  return {};
}

std::string_view ss_store_name(unsigned bytes) {
  switch (bytes) {
  case 1: return "ss_store8";
  case 2: return "ss_store16";
  case 4: return "ss_store32";
  case 8: return "ss_store64";
  case 16: return "ss_store128";
  }
  return {};
}

namespace detail {
const Signature &signature_of(Intrinsic i) {
  for (const auto &e : table())
    if (e.id == i)
      return e.sig;
  static const Signature kNone{Type::Void, {}};
  return kNone;
}
} // namespace detail

} // namespace splitsec::ir
