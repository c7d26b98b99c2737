//===-- printer.cpp - Canonical textual form of a Program -----------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/ir.hpp"

#include <sstream>

namespace splitsec::ir {

namespace {

std::string u128_to_hex(u128 v) {
  static const char *kDigits = "0123456789abcdef";
  if (v == 0)
    return "0x0";
  std::string s;
  while (v) {
    s.insert(s.begin(), kDigits[static_cast<unsigned>(v & 0xf)]);
    v >>= 4;
  }
  return "0x" + s;
}

std::string format_imm(Type t, u128 v) {
  if (t == Type::Ptr)
    return u128_to_hex(v);
  unsigned bits = bit_width(t);
  if (bits <= 64) {
    std::uint64_t raw = static_cast<std::uint64_t>(v);
    bool neg = bits > 0 && ((raw >> (bits - 1)) & 1);
    if (neg) {
      // Two's complement magnitude within the type width.
      std::uint64_t mag = bits == 64 ? ~raw + 1 : ((std::uint64_t(1) << bits) - raw);
      return "-" + std::to_string(mag);
    }
    return std::to_string(raw);
  }
  if (v >> 64)
    return u128_to_hex(v);
  return std::to_string(static_cast<std::uint64_t>(v));
}

std::string format_value(const Operand &o) {
  switch (o.kind) {
  case Operand::Kind::Reg: return "%" + o.name;
  case Operand::Kind::Global: return "@" + o.name;
  case Operand::Kind::Imm: return format_imm(o.type, o.imm);
  }
  return "?";
}

std::string typed(const Operand &o) { return std::string(type_name(o.type)) + " " + format_value(o); }

void print_instruction(std::ostream &os, const Instruction &ins) {
  os << "  ";
  if (!ins.result.empty())
    os << "%" << ins.result << " = ";
  const auto &ops = ins.operands;
  switch (ins.op) {
  case Opcode::Alloca:
  case Opcode::SecretAlloca:
    os << opcode_name(ins.op) << " " << ins.alloc_size;
    if (ins.secret)
      os << " secret";
    break;
  case Opcode::Load:
    os << "load " << type_name(ins.type) << ", " << typed(ops.at(0)) << ", align " << ins.align;
    break;
  case Opcode::Store:
    os << "store " << typed(ops.at(0)) << ", " << typed(ops.at(1)) << ", align " << ins.align;
    break;
  case Opcode::Gep:
    os << "gep " << typed(ops.at(0)) << ", " << typed(ops.at(1));
    break;
  case Opcode::Icmp:
    os << "icmp " << pred_name(ins.pred) << " " << typed(ops.at(0)) << ", "
       << format_value(ops.at(1));
    break;
  case Opcode::Select:
    os << "select " << typed(ops.at(0)) << ", " << typed(ops.at(1)) << ", "
       << format_value(ops.at(2));
    break;
  case Opcode::Const:
    os << "const " << typed(ops.at(0));
    break;
  case Opcode::Call: {
    os << "call " << type_name(ins.type) << " @" << ins.callee << "(";
    for (size_t i = 0; i < ops.size(); ++i)
      os << (i ? ", " : "") << typed(ops[i]);
    if (ins.varargs)
      os << (ops.empty() ? "..." : ", ...");
    os << ")";
    break;
  }
  case Opcode::Br:
    os << "br " << ins.targets.at(0);
    break;
  case Opcode::CondBr:
    os << "condbr " << typed(ops.at(0)) << ", " << ins.targets.at(0) << ", " << ins.targets.at(1);
    break;
  case Opcode::Ret:
    if (ops.empty())
      os << "ret void";
    else
      os << "ret " << typed(ops[0]);
    break;
  default:
    os << opcode_name(ins.op) << " " << type_name(ins.type) << " " << format_value(ops.at(0))
       << ", " << format_value(ops.at(1));
    break;
  }
  os << "\n";
}

} // namespace

std::string print_program(const Program &p) {
  std::ostringstream os;
  os << "; splitsec IR\n";
  for (const auto &[k, v] : p.metadata)
    os << "!" << k << " " << v << "\n";
  if (p.entry != "main")
    os << "entry " << p.entry << "\n";

  for (const auto &g : p.globals) {
    os << "global " << g.name << " : " << g.size << " = ";
    bool zero = true;
    for (auto b : g.init)
      zero = zero && b == 0;
    if (zero) {
      os << "zeroinit";
    } else {
      static const char *kDigits = "0123456789abcdef";
      for (auto b : g.init)
        os << kDigits[b >> 4] << kDigits[b & 0xf];
    }
    if (g.secret)
      os << " secret";
    os << "\n";
  }

  for (const auto &f : p.functions) {
    os << "\nfn " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i)
      os << (i ? ", " : "") << type_name(f.params[i].type) << " %" << f.params[i].name;
    os << ") {\n";
    for (const auto &bb : f.blocks) {
      os << bb.label << ":\n";
      for (const auto &ins : bb.insts)
        print_instruction(os, ins);
    }
    os << "}\n";
  }
  return os.str();
}

} // namespace splitsec::ir
