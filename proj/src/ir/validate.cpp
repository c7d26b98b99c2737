//===-- validate.cpp - Structural, type and SSA checks --------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "ir/signatures.hpp"

#include <set>
#include <unordered_map>

namespace splitsec::ir {

namespace {

struct DefSite {
  Type type;
  int block; // -1 for parameters
  int index;
};

class FunctionChecker {
public:
  FunctionChecker(const Program &p, const FunctionDef &f, std::vector<Diagnostic> &out,
                  bool names_only)
      : prog_(p), fn_(f), out_(out), names_only_(names_only) {}

  void run() {
    collect_definitions();
    check_references();
    if (names_only_)
      return;
    check_blocks();
    check_types();
    check_dominance();
  }

private:
  const Program &prog_;
  const FunctionDef &fn_;
  std::vector<Diagnostic> &out_;
  bool names_only_;
  std::unordered_map<std::string, DefSite> defs_;
  std::unordered_map<std::string, int> labels_;

  void report(DiagKind k, std::string msg, SourceLoc loc, int block = -1, int index = -1) {
    Diagnostic d;
    d.kind = k;
    d.message = std::move(msg);
    d.loc = loc;
    d.function = fn_.name;
    if (block >= 0)
      d.block = fn_.blocks[block].label;
    d.index = index;
    out_.push_back(std::move(d));
  }

  void collect_definitions() {
    for (const auto &prm : fn_.params) {
      if (!defs_.emplace(prm.name, DefSite{prm.type, -1, -1}).second)
        report(DiagKind::DuplicateDefinition, "parameter %" + prm.name + " defined twice", fn_.loc);
    }
    for (int b = 0; b < int(fn_.blocks.size()); ++b) {
      const auto &bb = fn_.blocks[b];
      if (!labels_.emplace(bb.label, b).second)
        report(DiagKind::DuplicateDefinition, "label '" + bb.label + "' defined twice", bb.loc, b);
      for (int i = 0; i < int(bb.insts.size()); ++i) {
        const auto &ins = bb.insts[i];
        if (ins.result.empty())
          continue;
        if (!defs_.emplace(ins.result, DefSite{ins.type, b, i}).second)
          report(DiagKind::DuplicateDefinition, "register %" + ins.result + " defined twice",
                 ins.loc, b, i);
      }
    }
  }

  void check_references() {
    for (int b = 0; b < int(fn_.blocks.size()); ++b) {
      const auto &bb = fn_.blocks[b];
      for (int i = 0; i < int(bb.insts.size()); ++i) {
        const auto &ins = bb.insts[i];
        for (const auto &o : ins.operands) {
          if (o.kind == Operand::Kind::Reg && !defs_.count(o.name))
            report(DiagKind::UndefinedName, "undefined register %" + o.name, ins.loc, b, i);
          if (o.kind == Operand::Kind::Global && !prog_.find_global(o.name))
            report(DiagKind::UndefinedName, "undefined global @" + o.name, ins.loc, b, i);
        }
        for (const auto &t : ins.targets)
          if (!labels_.count(t))
            report(DiagKind::UndefinedName, "undefined label '" + t + "'", ins.loc, b, i);
        if (ins.op == Opcode::Call && !prog_.find_function(ins.callee) &&
            !lookup_intrinsic(ins.callee))
          report(DiagKind::UndefinedName, "undefined function @" + ins.callee, ins.loc, b, i);
      }
    }
  }

  void check_blocks() {
    if (fn_.blocks.empty()) {
      report(DiagKind::MalformedBlock, "function has no blocks", fn_.loc);
      return;
    }
    for (int b = 0; b < int(fn_.blocks.size()); ++b) {
      const auto &bb = fn_.blocks[b];
      int terms = 0;
      for (const auto &ins : bb.insts)
        terms += is_terminator(ins.op) ? 1 : 0;
      if (bb.insts.empty() || !is_terminator(bb.insts.back().op))
        report(DiagKind::MalformedBlock, "block '" + bb.label + "' does not end in a terminator",
               bb.loc, b);
      else if (terms > 1)
        report(DiagKind::MalformedBlock,
               "block '" + bb.label + "' has " + std::to_string(terms) + " terminators", bb.loc, b);
      for (const auto &t : bb.insts.empty() ? std::vector<std::string>{} : bb.insts.back().targets)
        if (t == fn_.blocks.front().label)
          report(DiagKind::MalformedBlock, "branch to the entry block", bb.insts.back().loc, b);
    }
  }

  std::optional<Type> reg_type(const std::string &name) const {
    auto it = defs_.find(name);
    return it == defs_.end() ? std::nullopt : std::optional<Type>(it->second.type);
  }

  void check_types() {
    std::optional<Type> ret_type;
    for (int b = 0; b < int(fn_.blocks.size()); ++b) {
      const auto &bb = fn_.blocks[b];
      for (int i = 0; i < int(bb.insts.size()); ++i) {
        const auto &ins = bb.insts[i];
        auto mismatch = [&](const std::string &msg) {
          report(DiagKind::TypeMismatch, msg, ins.loc, b, i);
        };
        // Declared operand types must agree with the defining instruction.
        for (const auto &o : ins.operands) {
          if (o.kind == Operand::Kind::Reg)
            if (auto t = reg_type(o.name); t && *t != o.type)
              mismatch("%" + o.name + " is " + std::string(type_name(*t)) + " but used as " +
                       std::string(type_name(o.type)));
          if (o.kind == Operand::Kind::Global && o.type != Type::Ptr)
            mismatch("global @" + o.name + " used as non-pointer");
        }
        auto want_ops = [&](size_t n) {
          if (ins.operands.size() != n) {
            report(DiagKind::InvalidOperand,
                   std::string(opcode_name(ins.op)) + " expects " + std::to_string(n) +
                       " operands",
                   ins.loc, b, i);
            return false;
          }
          return true;
        };
        auto want_result = [&](bool yes) {
          if (yes == ins.result.empty())
            report(DiagKind::InvalidOperand,
                   std::string(opcode_name(ins.op)) +
                       (yes ? " must define a register" : " cannot define a register"),
                   ins.loc, b, i);
        };

        switch (ins.op) {
        case Opcode::Alloca:
        case Opcode::SecretAlloca:
          want_result(true);
          want_ops(0);
          if (ins.type != Type::Ptr)
            mismatch("alloca yields ptr");
          if (ins.alloc_size == 0)
            report(DiagKind::InvalidOperand, "zero-sized alloca", ins.loc, b, i);
          break;
        case Opcode::Load:
          want_result(true);
          if (!want_ops(1))
            break;
          if (ins.type == Type::Void)
            mismatch("load of void");
          if (ins.operands[0].type != Type::Ptr)
            mismatch("load address must be ptr");
          if (ins.align != 1 && ins.align != 2 && ins.align != 4 && ins.align != 8)
            report(DiagKind::InvalidOperand, "bad alignment", ins.loc, b, i);
          break;
        case Opcode::Store:
          want_result(false);
          if (!want_ops(2))
            break;
          if (ins.type == Type::Void || ins.operands[0].type != ins.type)
            mismatch("stored value type does not match store type");
          if (ins.operands[1].type != Type::Ptr)
            mismatch("store address must be ptr");
          if (ins.align != 1 && ins.align != 2 && ins.align != 4 && ins.align != 8)
            report(DiagKind::InvalidOperand, "bad alignment", ins.loc, b, i);
          break;
        case Opcode::Gep:
          want_result(true);
          if (!want_ops(2))
            break;
          if (ins.type != Type::Ptr || ins.operands[0].type != Type::Ptr)
            mismatch("gep base must be ptr");
          if (ins.operands[1].type != Type::I64)
            mismatch("gep offset must be i64");
          break;
        case Opcode::Icmp:
          want_result(true);
          if (!want_ops(2))
            break;
          if (ins.type != Type::I8)
            mismatch("icmp yields i8");
          if (ins.operands[0].type != ins.operands[1].type || ins.operands[0].type == Type::Void)
            mismatch("icmp operands differ in type");
          break;
        case Opcode::Select:
          want_result(true);
          if (!want_ops(3))
            break;
          if (!is_integer(ins.operands[0].type))
            mismatch("select condition must be an integer");
          if (ins.operands[1].type != ins.type || ins.operands[2].type != ins.type ||
              ins.type == Type::Void)
            mismatch("select arms must match the result type");
          break;
        case Opcode::Const:
          want_result(true);
          if (!want_ops(1))
            break;
          if (!is_integer(ins.type) || ins.operands[0].type != ins.type ||
              ins.operands[0].kind != Operand::Kind::Imm)
            mismatch("const takes an integer immediate of its own type");
          break;
        case Opcode::Br:
          want_result(false);
          want_ops(0);
          if (ins.targets.size() != 1)
            report(DiagKind::InvalidOperand, "br takes one label", ins.loc, b, i);
          break;
        case Opcode::CondBr:
          want_result(false);
          if (!want_ops(1))
            break;
          if (!is_integer(ins.operands[0].type))
            mismatch("condbr condition must be an integer");
          if (ins.targets.size() != 2)
            report(DiagKind::InvalidOperand, "condbr takes two labels", ins.loc, b, i);
          break;
        case Opcode::Ret:
          want_result(false);
          if (ins.type == Type::Void ? !want_ops(0) : !want_ops(1))
            break;
          if (ins.type != Type::Void && ins.operands[0].type != ins.type)
            mismatch("returned value type differs from ret type");
          if (!ret_type)
            ret_type = ins.type;
          else if (*ret_type != ins.type)
            mismatch("function returns both " + std::string(type_name(*ret_type)) + " and " +
                     std::string(type_name(ins.type)));
          break;
        case Opcode::Call:
          check_call(ins, b, i);
          break;
        default:
          if (is_binary(ins.op)) {
            want_result(true);
            if (!want_ops(2))
              break;
            if (!is_integer(ins.type))
              mismatch(std::string(opcode_name(ins.op)) + " requires integer operands");
            for (const auto &o : ins.operands)
              if (o.type != ins.type)
                mismatch(std::string(type_name(o.type)) + " operand fed to " +
                         std::string(type_name(ins.type)) + " " +
                         std::string(opcode_name(ins.op)));
          }
          break;
        }
      }
    }
  }

  void check_call(const Instruction &ins, int b, int i) {
    auto mismatch = [&](const std::string &msg) {
      report(DiagKind::TypeMismatch, msg, ins.loc, b, i);
    };
    if (ins.type == Type::Void && !ins.result.empty())
      mismatch("void call cannot define a register");
    if (ins.type != Type::Void && ins.result.empty())
      mismatch("non-void call result must be named");

    std::vector<Type> params;
    Type ret = Type::Void;
    bool word_or_ptr = false;
    if (const FunctionDef *callee = prog_.find_function(ins.callee)) {
      for (const auto &prm : callee->params)
        params.push_back(prm.type);
      ret = callee->return_type();
    } else if (auto intr = lookup_intrinsic(ins.callee)) {
      const auto &sig = detail::signature_of(*intr);
      params = sig.params;
      ret = sig.ret;
      word_or_ptr = sig.word_or_ptr;
    } else {
      return; // reported by check_references
    }

    size_t nargs = ins.operands.size();
    if (nargs < params.size() || (nargs > params.size() && !ins.varargs)) {
      report(DiagKind::InvalidOperand,
             "@" + ins.callee + " expects " + std::to_string(params.size()) + " arguments, got " +
                 std::to_string(nargs),
             ins.loc, b, i);
      return;
    }
    auto compatible = [&](Type want, Type got) {
      return want == got || (word_or_ptr && want == Type::I64 && got == Type::Ptr);
    };
    for (size_t k = 0; k < params.size(); ++k)
      if (!compatible(params[k], ins.operands[k].type))
        mismatch("argument " + std::to_string(k) + " of @" + ins.callee + " is " +
                 std::string(type_name(ins.operands[k].type)) + ", expected " +
                 std::string(type_name(params[k])));
    if (!compatible(ret, ins.type))
      mismatch("@" + ins.callee + " returns " + std::string(type_name(ret)) + ", call expects " +
               std::string(type_name(ins.type)));
  }

  // Iterative dominator sets over blocks; unreachable blocks keep the full
  // set, which makes every definition dominate them.
  void check_dominance() {
    const int n = int(fn_.blocks.size());
    if (n == 0)
      return;
    std::vector<std::vector<int>> preds(n);
    for (int b = 0; b < n; ++b) {
      const auto &bb = fn_.blocks[b];
      if (bb.insts.empty())
        continue;
      for (const auto &t : bb.insts.back().targets)
        if (auto it = labels_.find(t); it != labels_.end())
          preds[it->second].push_back(b);
    }
    std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, true));
    dom[0].assign(n, false);
    dom[0][0] = true;
    for (bool changed = true; changed;) {
      changed = false;
      for (int b = 1; b < n; ++b) {
        std::vector<bool> next(n, true);
        if (preds[b].empty())
          continue;
        for (int pb : preds[b])
          for (int k = 0; k < n; ++k)
            next[k] = next[k] && dom[pb][k];
        next[b] = true;
        if (next != dom[b]) {
          dom[b] = std::move(next);
          changed = true;
        }
      }
    }

    for (int b = 0; b < n; ++b) {
      const auto &bb = fn_.blocks[b];
      for (int i = 0; i < int(bb.insts.size()); ++i) {
        for (const auto &o : bb.insts[i].operands) {
          if (o.kind != Operand::Kind::Reg)
            continue;
          auto it = defs_.find(o.name);
          if (it == defs_.end() || it->second.block < 0)
            continue;
          const DefSite &d = it->second;
          bool ok = d.block == b ? d.index < i : dom[b][d.block];
          if (!ok)
            report(DiagKind::DominanceViolation,
                   "use of %" + o.name + " is not dominated by its definition", bb.insts[i].loc, b,
                   i);
        }
      }
    }
  }
};

void check_program_names(const Program &p, std::vector<Diagnostic> &out) {
  std::set<std::string> seen;
  for (const auto &g : p.globals) {
    if (!seen.insert(g.name).second) {
      Diagnostic d;
      d.kind = DiagKind::DuplicateDefinition;
      d.message = "global @" + g.name + " defined twice";
      d.loc = g.loc;
      out.push_back(std::move(d));
    }
  }
  seen.clear();
  for (const auto &f : p.functions) {
    if (!seen.insert(f.name).second || lookup_intrinsic(f.name)) {
      Diagnostic d;
      d.kind = DiagKind::DuplicateDefinition;
      d.message = "function @" + f.name + " defined twice";
      d.loc = f.loc;
      out.push_back(std::move(d));
    }
  }
}

} // namespace

std::vector<Diagnostic> check_names(const Program &p) {
  std::vector<Diagnostic> out;
  check_program_names(p, out);
  for (const auto &f : p.functions)
    FunctionChecker(p, f, out, /*names_only=*/true).run();
  return out;
}

std::vector<Diagnostic> validate(const Program &p) {
  std::vector<Diagnostic> out;
  check_program_names(p, out);

  for (const auto &g : p.globals) {
    if (g.init.size() != g.size || g.size == 0) {
      Diagnostic d;
      d.kind = DiagKind::InvalidOperand;
      d.message = "global @" + g.name + " initializer length differs from its size";
      d.loc = g.loc;
      out.push_back(std::move(d));
    }
  }

  for (const auto &f : p.functions)
    FunctionChecker(p, f, out, /*names_only=*/false).run();

  if (!p.functions.empty()) {
    const FunctionDef *entry = p.find_function(p.entry);
    Diagnostic d;
    d.kind = DiagKind::MissingEntry;
    if (!entry) {
      d.message = "entry function @" + p.entry + " is not defined";
      out.push_back(d);
    } else {
      for (const auto &prm : entry->params)
        if (!is_integer(prm.type)) {
          d.message = "entry parameters must be integers";
          d.loc = entry->loc;
          out.push_back(d);
          break;
        }
    }
  }
  if (const FunctionDef *ctor = p.find_function(kGlobalCtorName); ctor && !ctor->params.empty()) {
    Diagnostic d;
    d.kind = DiagKind::InvalidOperand;
    d.message = "global constructor takes no parameters";
    d.loc = ctor->loc;
    out.push_back(d);
  }
  return out;
}

} // namespace splitsec::ir
