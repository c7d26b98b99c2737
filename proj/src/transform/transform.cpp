//===-- transform.cpp - Split-and-prefix instrumentation pass -------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/transform.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace splitsec::transform {

using ir::Instruction;
using ir::Intrinsic;
using ir::Opcode;
using ir::Operand;
using ir::Type;

std::string_view mode_name(Mode m) {
  switch (m) {
  case Mode::None: return "none";
  case Mode::Annotated: return "annotated";
  case Mode::AllSecret: return "all_secret";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::None, Mode::Annotated, Mode::AllSecret})
    if (mode_name(m) == s)
      return m;
  return std::nullopt;
}

TransformError::TransformError(ErrorKind k, const std::string &msg)
    : std::runtime_error(msg), kind_(k) {}

namespace {

Instruction make_call(std::string callee, Type ret, std::vector<Operand> args,
                      std::string result = {}) {
  Instruction c;
  c.op = Opcode::Call;
  c.type = ret;
  c.callee = std::move(callee);
  c.operands = std::move(args);
  c.result = std::move(result);
  return c;
}

bool is_libc_memory_call(Intrinsic i) {
  return i == Intrinsic::Memcpy || i == Intrinsic::Memset || i == Intrinsic::Memcmp ||
         i == Intrinsic::WriteOut;
}

/// Produces the replacement sequence for one libc-style call. `fresh` names
/// a new register when one is needed.
std::vector<Instruction> redirect_call(const Instruction &ins, Intrinsic which,
                                       const std::function<std::string()> &fresh) {
  Instruction c = ins;
  switch (which) {
  case Intrinsic::Memcpy: c.callee = "ss_memcpy"; return {c};
  case Intrinsic::Memset: c.callee = "ss_memset"; return {c};
  case Intrinsic::Memcmp: c.callee = "ss_memcmp"; return {c};
  case Intrinsic::WriteOut: {
    std::string plain = fresh();
    Instruction d = make_call("ss_declassify", Type::Ptr, {ins.operands.at(0), ins.operands.at(1)},
                              plain);
    d.loc = ins.loc;
    c.operands[0] = Operand::reg(Type::Ptr, plain);
    return {d, c};
  }
  default: return {ins};
  }
}

class FreshNames {
public:
  explicit FreshNames(const ir::FunctionDef &f) {
    for (const auto &p : f.params)
      used_.insert(p.name);
    for (const auto &bb : f.blocks)
      for (const auto &ins : bb.insts)
        if (!ins.result.empty())
          used_.insert(ins.result);
  }
  std::string operator()() {
    std::string n;
    do
      n = "ss." + std::to_string(counter_++);
    while (used_.count(n));
    used_.insert(n);
    return n;
  }

private:
  std::set<std::string> used_;
  unsigned counter_ = 0;
};

void reject_unsupported(const ir::Program &p) {
  if (p.metadata.count(kMetaTransformed))
    throw TransformError(ErrorKind::AlreadyTransformed,
                         "program is already transformed (policy " +
                             p.metadata.at(kMetaTransformed) + ")");
  if (p.find_function(ir::kGlobalCtorName))
    throw TransformError(ErrorKind::AlreadyTransformed, "program already has a global constructor");
  for (const auto &f : p.functions)
    for (const auto &bb : f.blocks)
      for (const auto &ins : bb.insts) {
        std::string where = " in @" + f.name + "/" + bb.label;
        if (ins.op == Opcode::SecretAlloca)
          throw TransformError(ErrorKind::UnsupportedInstruction,
                               "input already contains secret_alloca" + where);
        if (ins.op != Opcode::Call)
          continue;
        if (ins.varargs)
          throw TransformError(ErrorKind::UnsupportedInstruction,
                               "varargs call to @" + ins.callee + where);
        if (p.find_function(ins.callee))
          continue;
        auto intr = ir::lookup_intrinsic(ins.callee);
        if (!intr)
          throw TransformError(ErrorKind::UnknownIntrinsic, "unknown callee @" + ins.callee + where);
        if (ir::is_runtime_intrinsic(*intr))
          throw TransformError(ErrorKind::UnsupportedInstruction,
                               "input already calls runtime entry @" + ins.callee + where);
      }
}

class FunctionRewriter {
public:
  FunctionRewriter(const ir::Program &prog, const ir::FunctionDef &f, const Policy &policy,
                   TransformReport *report)
      : prog_(prog), fn_(f), policy_(policy), report_(report), fresh_(f) {
    if (policy_.mode == Mode::Annotated)
      collect_plain_pointers();
  }

  ir::FunctionDef run() {
    ir::FunctionDef out = fn_;
    bool has_secret_alloca = false;
    for (auto &bb : out.blocks) {
      std::vector<Instruction> insts;
      for (std::size_t i = 0; i < bb.insts.size(); ++i) {
        const Instruction &ins = bb.insts[i];
        std::vector<Instruction> repl = rewrite(ins, bb.label, i);
        for (const auto &r : repl)
          has_secret_alloca = has_secret_alloca || r.op == Opcode::SecretAlloca;
        insts.insert(insts.end(), repl.begin(), repl.end());
      }
      bb.insts = std::move(insts);
    }
    if (has_secret_alloca)
      add_frame_markers(out);
    return out;
  }

private:
  const ir::Program &prog_;
  const ir::FunctionDef &fn_;
  const Policy &policy_;
  TransformReport *report_;
  FreshNames fresh_;
  std::set<std::string> plain_regs_;

  // Registers that can only ever hold an untagged address: results of
  // non-secret allocas and geps based on them.
  void collect_plain_pointers() {
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto &bb : fn_.blocks)
        for (const auto &ins : bb.insts) {
          if (ins.result.empty() || plain_regs_.count(ins.result))
            continue;
          bool plain = (ins.op == Opcode::Alloca && !ins.secret) ||
                       (ins.op == Opcode::Gep && is_plain(ins.operands.at(0)));
          if (plain) {
            plain_regs_.insert(ins.result);
            changed = true;
          }
        }
    }
  }

  bool is_plain(const Operand &o) const {
    if (policy_.mode != Mode::Annotated)
      return false;
    switch (o.kind) {
    case Operand::Kind::Reg: return plain_regs_.count(o.name) != 0;
    case Operand::Kind::Global: return !policy_.effective_globals_secret();
    case Operand::Kind::Imm: return false;
    }
    return false;
  }

  void note_memory_op(const std::string &block, std::size_t index) {
    if (report_)
      report_->memory_ops.push_back({fn_.name, block, index});
  }

  std::vector<Instruction> rewrite(const Instruction &ins, const std::string &block,
                                   std::size_t index) {
    switch (ins.op) {
    case Opcode::Alloca: {
      auto out = instrument_alloca(ins, policy_);
      if (report_ && out.front().op == Opcode::SecretAlloca)
        ++report_->secret_allocas;
      return out;
    }
    case Opcode::Store:
      if (is_plain(ins.operands.at(1)))
        return {ins};
      note_memory_op(block, index);
      return rewrite_store(ins, policy_);
    case Opcode::Load:
      if (is_plain(ins.operands.at(0)))
        return {ins};
      note_memory_op(block, index);
      return rewrite_load(ins, policy_);
    case Opcode::Call:
      return rewrite_call(ins);
    default:
      return {ins};
    }
  }

  std::vector<Instruction> rewrite_call(const Instruction &ins) {
    if (prog_.find_function(ins.callee))
      return {ins};
    auto intr = ir::lookup_intrinsic(ins.callee);
    if (!intr)
      throw TransformError(ErrorKind::UnknownIntrinsic, "unknown callee @" + ins.callee);

    Instruction c = ins;
    switch (*intr) {
    case Intrinsic::SecretMalloc: c.callee = "ss_secret_malloc"; return {c};
    case Intrinsic::SecretFree: c.callee = "ss_secret_free"; return {c};
    case Intrinsic::Malloc:
      if (policy_.mode == Mode::AllSecret)
        c.callee = "ss_secret_malloc";
      return {c};
    case Intrinsic::Free:
      if (policy_.mode == Mode::AllSecret)
        c.callee = "ss_secret_free";
      return {c};
    default: break;
    }

    if (!is_libc_memory_call(*intr))
      return {ins};
    bool all_plain = true;
    for (const auto &o : ins.operands)
      if (o.type == Type::Ptr)
        all_plain = all_plain && is_plain(o);
    if (all_plain)
      return {ins};
    if (report_)
      ++report_->intercepted_calls;
    return redirect_call(ins, *intr, [this] { return fresh_(); });
  }

  static void add_frame_markers(ir::FunctionDef &f) {
    auto &entry = f.blocks.front().insts;
    entry.insert(entry.begin(), make_call("ss_frame_push", Type::Void, {}));
    for (auto &bb : f.blocks) {
      std::vector<Instruction> insts;
      for (auto &ins : bb.insts) {
        if (ins.op == Opcode::Ret)
          insts.push_back(make_call("ss_frame_pop", Type::Void, {}));
        insts.push_back(std::move(ins));
      }
      bb.insts = std::move(insts);
    }
  }
};

std::string prefix_text(const runtime::Prefix &p) {
  std::ostringstream os;
  os << "0x" << std::hex << p.value();
  return os.str();
}

} // namespace

std::vector<Instruction> rewrite_store(const Instruction &ins, const Policy &policy) {
  if (policy.mode == Mode::None || ins.op != Opcode::Store)
    return {ins};
  Instruction c = make_call(std::string(ir::ss_store_name(ir::byte_size(ins.type))), Type::Void,
                            {ins.operands.at(1), ins.operands.at(0)});
  c.loc = ins.loc;
  return {c};
}

std::vector<Instruction> rewrite_load(const Instruction &ins, const Policy &policy) {
  if (policy.mode == Mode::None || ins.op != Opcode::Load)
    return {ins};
  Instruction c = make_call(std::string(ir::ss_load_name(ir::byte_size(ins.type))), ins.type,
                            {ins.operands.at(0)}, ins.result);
  c.loc = ins.loc;
  return {c};
}

std::vector<Instruction> instrument_alloca(const Instruction &ins, const Policy &policy) {
  if (ins.op != Opcode::Alloca)
    return {ins};
  bool secret = (policy.mode == Mode::Annotated && ins.secret) || policy.mode == Mode::AllSecret;
  if (!secret)
    return {ins};
  Instruction s = ins;
  s.op = Opcode::SecretAlloca;
  s.secret = false;
  return {s};
}

ir::Program emit_global_ctor(const ir::Program &p, const Policy &policy) {
  if (!policy.effective_globals_secret() || p.globals.empty() || policy.mode == Mode::None)
    return p;
  ir::Program out = p;
  ir::FunctionDef ctor;
  ctor.name = std::string(ir::kGlobalCtorName);
  ir::BasicBlock bb;
  bb.label = "entry";
  for (auto &g : out.globals) {
    g.secret = true;
    bb.insts.push_back(make_call("ss_bind_global", Type::Void,
                                 {Operand::global(g.name), Operand::constant(Type::I64, g.size)}));
  }
  Instruction ret;
  ret.op = Opcode::Ret;
  ret.type = Type::Void;
  bb.insts.push_back(ret);
  ctor.blocks.push_back(std::move(bb));
  out.functions.insert(out.functions.begin(), std::move(ctor));
  return out;
}

ir::Program intercept_intrinsics(const ir::Program &p) {
  ir::Program out = p;
  for (auto &f : out.functions) {
    FreshNames fresh(f);
    for (auto &bb : f.blocks) {
      std::vector<Instruction> insts;
      for (const auto &ins : bb.insts) {
        if (ins.op != Opcode::Call || p.find_function(ins.callee)) {
          insts.push_back(ins);
          continue;
        }
        auto intr = ir::lookup_intrinsic(ins.callee);
        if (!intr)
          throw TransformError(ErrorKind::UnknownIntrinsic, "unknown callee @" + ins.callee);
        if (!is_libc_memory_call(*intr)) {
          insts.push_back(ins);
          continue;
        }
        auto repl = redirect_call(ins, *intr, [&] { return fresh(); });
        insts.insert(insts.end(), repl.begin(), repl.end());
      }
      bb.insts = std::move(insts);
    }
  }
  return out;
}

ir::Program transform_program(const ir::Program &p, const Policy &policy,
                              TransformReport *report) {
  if (auto diags = ir::validate(p); !diags.empty())
    throw TransformError(ErrorKind::InvalidInput, "input does not validate: " +
                                                      diags.front().to_string());
  reject_unsupported(p);
  if (policy.mode == Mode::None)
    return p;

  // Globals are split all-or-nothing: one secret global makes them all secret.
  Policy pol = policy;
  if (std::any_of(p.globals.begin(), p.globals.end(), [](const ir::GlobalDef &g) { return g.secret; }))
    pol.globals_secret = true;

  ir::Program out = p;
  for (auto &f : out.functions)
    f = FunctionRewriter(p, f, pol, report).run();

  out = emit_global_ctor(out, pol);
  if (report)
    report->global_ctor = out.find_function(ir::kGlobalCtorName) != nullptr;

  out.metadata[kMetaTransformed] = std::string(mode_name(pol.mode));
  out.metadata[kMetaPrefix] = prefix_text(pol.prefix);
  out.metadata[kMetaGlobalsSecret] = pol.effective_globals_secret() ? "1" : "0";

  if (auto diags = ir::validate(out); !diags.empty())
    throw std::logic_error("transform produced an invalid program: " + diags.front().to_string());
  return out;
}

} // namespace splitsec::transform
