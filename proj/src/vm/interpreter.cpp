//===-- interpreter.cpp - Deterministic IR interpreter --------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Every register value carries one taint bit; arithmetic ORs the taint of
// its inputs. Memory carries a taint bit per byte. Runtime entry points are
// charged a modelled instruction cost (the "rt." counters) so that icount
// reflects the work a native runtime would do, not just the call.
//
//===----------------------------------------------------------------------===//

#include "splitsec/vm.hpp"
#include "splitsec/transform.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_map>

namespace splitsec::vm {

using ir::Intrinsic;
using ir::Opcode;
using ir::Type;
using ir::u128;

std::string_view fault_kind_name(FaultKind k) {
  switch (k) {
  case FaultKind::NonCanonicalAccess: return "NonCanonicalAccess";
  case FaultKind::Unmapped: return "Unmapped";
  case FaultKind::StepLimit: return "StepLimit";
  case FaultKind::RuntimeError: return "RuntimeError";
  case FaultKind::OutOfMemory: return "OutOfMemory";
  }
  return "?";
}

std::size_t entry_arg_bytes(const ir::Program &p) {
  const ir::FunctionDef *entry = p.find_function(p.entry);
  if (!entry)
    return 0;
  std::size_t n = 0;
  for (const auto &prm : entry->params)
    n += ir::byte_size(prm.type);
  return n;
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

struct Value {
  u128 bits = 0;
  bool taint = false;
};

struct ROperand {
  ir::Operand::Kind kind = ir::Operand::Kind::Imm;
  std::uint32_t index = 0;
  u128 imm = 0;
};

struct RInst {
  const ir::Instruction *src = nullptr;
  std::vector<ROperand> ops;
  int result = -1;
  int target0 = -1;
  int target1 = -1;
  int callee_fn = -1;
  std::optional<Intrinsic> intrinsic;
};

struct RFunction {
  const ir::FunctionDef *src = nullptr;
  std::vector<std::vector<RInst>> blocks;
  std::size_t nregs = 0;
};

struct Frame {
  int fn = 0;
  std::vector<Value> regs;
  int block = 0;
  std::size_t ip = 0;
  std::uint64_t stack_mark = 0;
  int ret_slot = -1;
};

struct FaultException {
  FaultKind kind;
  std::string message;
};

[[noreturn]] void fault(FaultKind k, std::string msg) { throw FaultException{k, std::move(msg)}; }

std::vector<std::uint8_t> to_bytes(u128 v, unsigned n) {
  std::vector<std::uint8_t> out(n);
  for (unsigned i = 0; i < n; ++i)
    out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

u128 from_bytes(std::span<const std::uint8_t> b) {
  u128 v = 0;
  for (std::size_t i = b.size(); i-- > 0;)
    v = (v << 8) | b[i];
  return v;
}

__int128 as_signed(u128 v, unsigned bits) {
  if (bits < 128 && ((v >> (bits - 1)) & 1))
    v |= ~u128(0) << bits;
  return static_cast<__int128>(v);
}

std::uint64_t words(std::uint64_t n) { return (n + 7) / 8; }

std::uint64_t segments(std::uint64_t addr, std::uint64_t n) {
  if (n == 0)
    return 0;
  return (addr + n - 1) / 4 - addr / 4 + 1;
}

constexpr std::size_t kOpcodeCount = static_cast<std::size_t>(Opcode::Const) + 1;

class Interpreter {
public:
  Interpreter(const ir::Program &p, const RunOptions &opts, runtime::Prefix prefix)
      : prog_(p), opts_(opts), rt_(space_, prefix) {
    trace_.prefix = prefix.value();
  }

  ExecTrace execute(std::span<const std::uint8_t> args);

private:
  const ir::Program &prog_;
  const RunOptions &opts_;
  AddressSpace space_;
  runtime::Runtime rt_;
  ExecTrace trace_;

  std::vector<RFunction> fns_;
  std::vector<std::uint64_t> global_addr_;
  std::vector<Frame> frames_;
  std::array<std::uint64_t, kOpcodeCount> op_counts_{};
  std::map<std::string, std::uint64_t> rt_counts_;
  std::optional<Value> last_ret_;
  std::optional<std::uint64_t> staging_;

  void resolve();
  void map_globals();
  void call(int fn, std::vector<Value> args, int ret_slot);
  void run_to_completion();
  void step();
  void exec_call(Frame &f, const RInst &ri);
  std::optional<Value> exec_intrinsic(Intrinsic in, const RInst &ri, const std::vector<Value> &a);

  Value eval(const ROperand &o, const Frame &f) const {
    switch (o.kind) {
    case ir::Operand::Kind::Reg: return f.regs[o.index];
    case ir::Operand::Kind::Imm: return {o.imm, false};
    case ir::Operand::Kind::Global: return {global_addr_[o.index], false};
    }
    return {};
  }

  void cost(std::string_view name, std::uint64_t n) {
    rt_counts_[std::string("rt.") + std::string(name)] += n;
  }

  void audit(std::string reason);
  void after_split_write(std::string reason) {
    if (opts_.audit.mode == AuditMode::EveryStore)
      audit(std::move(reason));
  }

  void check_plain(std::uint64_t addr, std::uint64_t len) const;
  bool secret_target(std::uint64_t addr) const;
  Value plain_load(std::uint64_t addr, unsigned n);
  void plain_write(std::string origin, std::uint64_t addr, std::span<const std::uint8_t> bytes,
                   const std::vector<bool> &taint, WriteSource src);
  void plain_write_uniform(std::string origin, std::uint64_t addr,
                           std::span<const std::uint8_t> bytes, bool taint, WriteSource src);
  void split_write(std::string origin, std::uint64_t addr, std::span<const std::uint8_t> bytes);
  /// Reads n logical bytes from a plain or tagged address, per-byte taint.
  void read_any(std::uint64_t addr, std::span<std::uint8_t> out, std::vector<bool> &taint);
  void write_any(std::string origin, std::uint64_t addr, std::span<const std::uint8_t> bytes,
                 const std::vector<bool> &taint);
  void note_shadow() { trace_.shadow_trace.push_back(rt_.shadow_map().size()); }
};

void Interpreter::resolve() {
  std::unordered_map<std::string, int> fn_index;
  for (std::size_t i = 0; i < prog_.functions.size(); ++i)
    fn_index[prog_.functions[i].name] = int(i);
  std::unordered_map<std::string, std::uint32_t> global_index;
  for (std::size_t i = 0; i < prog_.globals.size(); ++i)
    global_index[prog_.globals[i].name] = std::uint32_t(i);

  fns_.resize(prog_.functions.size());
  for (std::size_t fi = 0; fi < prog_.functions.size(); ++fi) {
    const ir::FunctionDef &fd = prog_.functions[fi];
    RFunction &rf = fns_[fi];
    rf.src = &fd;
    std::unordered_map<std::string, int> regs;
    for (const auto &prm : fd.params)
      regs.emplace(prm.name, int(regs.size()));
    std::unordered_map<std::string, int> blocks;
    for (std::size_t b = 0; b < fd.blocks.size(); ++b) {
      blocks.emplace(fd.blocks[b].label, int(b));
      for (const auto &ins : fd.blocks[b].insts)
        if (!ins.result.empty())
          regs.emplace(ins.result, int(regs.size()));
    }
    rf.nregs = regs.size();
    rf.blocks.resize(fd.blocks.size());
    for (std::size_t b = 0; b < fd.blocks.size(); ++b) {
      for (const auto &ins : fd.blocks[b].insts) {
        RInst ri;
        ri.src = &ins;
        if (!ins.result.empty())
          ri.result = regs.at(ins.result);
        for (const auto &op : ins.operands) {
          ROperand ro;
          ro.kind = op.kind;
          if (op.kind == ir::Operand::Kind::Reg)
            ro.index = std::uint32_t(regs.at(op.name));
          else if (op.kind == ir::Operand::Kind::Global)
            ro.index = global_index.at(op.name);
          else
            ro.imm = op.imm;
          ri.ops.push_back(ro);
        }
        if (!ins.targets.empty())
          ri.target0 = blocks.at(ins.targets[0]);
        if (ins.targets.size() > 1)
          ri.target1 = blocks.at(ins.targets[1]);
        if (ins.op == Opcode::Call) {
          auto it = fn_index.find(ins.callee);
          if (it != fn_index.end())
            ri.callee_fn = it->second;
          else
            ri.intrinsic = ir::lookup_intrinsic(ins.callee);
        }
        rf.blocks[b].push_back(std::move(ri));
      }
    }
  }
}

void Interpreter::map_globals() {
  for (const auto &g : prog_.globals) {
    std::uint64_t base = space_.globals.allocate(space_.mem, std::max<std::uint64_t>(g.size, 1));
    std::vector<std::uint8_t> init = g.init;
    init.resize(g.size, 0);
    space_.mem.write(base, init, g.secret);
    global_addr_.push_back(base);
  }
}

void Interpreter::audit(std::string reason) {
  AuditPoint pt;
  pt.step = trace_.steps;
  pt.reason = std::move(reason);
  if (opts_.keep_snapshots)
    pt.snapshot = std::make_shared<MemoryImage>(space_.mem);
  if (opts_.on_audit)
    opts_.on_audit(space_.mem, pt);
  trace_.audit_points.push_back(std::move(pt));
}

void Interpreter::check_plain(std::uint64_t addr, std::uint64_t len) const {
  if (len == 0)
    return;
  std::uint64_t last = addr + len - 1;
  if (!is_canonical(addr) || !is_canonical(last) || last < addr)
    fault(FaultKind::NonCanonicalAccess,
          "access of " + std::to_string(len) + " bytes at non-canonical address " + hex(addr));
  if (!space_.mem.is_mapped(addr, len))
    fault(FaultKind::Unmapped,
          "access of " + std::to_string(len) + " bytes at unmapped address " + hex(addr));
}

bool Interpreter::secret_target(std::uint64_t addr) const {
  if (const Region *r = space_.mem.region_containing(addr); r && r->kind == RegionKind::Shadow)
    return true;
  return rt_.shadow_map().find(addr).has_value();
}

Value Interpreter::plain_load(std::uint64_t addr, unsigned n) {
  check_plain(addr, n);
  std::vector<std::uint8_t> buf(n);
  space_.mem.read(addr, buf);
  Value v{from_bytes(buf), space_.mem.any_tainted(addr, n)};
  if (!space_.mem.all_initialized(addr, n)) {
    ++trace_.uninit_reads;
    if (trace_.warnings.size() < 64)
      trace_.warnings.push_back("read of uninitialized memory at " + hex(addr));
  }
  return v;
}

void Interpreter::plain_write(std::string origin, std::uint64_t addr,
                              std::span<const std::uint8_t> bytes, const std::vector<bool> &taint,
                              WriteSource src) {
  if (bytes.empty())
    return;
  check_plain(addr, bytes.size());
  bool any = false;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bool t = written_taint(src, taint[i]);
    any = any || t;
    space_.mem.write_byte(addr + i, bytes[i], t);
  }
  if (opts_.record_stores) {
    StoreEvent ev;
    ev.kind = StoreKind::Plain;
    ev.origin = std::move(origin);
    ev.addr = addr;
    ev.size = bytes.size();
    ev.tainted = any;
    ev.secret_target = secret_target(addr) || secret_target(addr + bytes.size() - 1);
    trace_.stores.push_back(std::move(ev));
  }
}

void Interpreter::plain_write_uniform(std::string origin, std::uint64_t addr,
                                      std::span<const std::uint8_t> bytes, bool taint,
                                      WriteSource src) {
  plain_write(std::move(origin), addr, bytes, std::vector<bool>(bytes.size(), taint), src);
}

void Interpreter::split_write(std::string origin, std::uint64_t addr,
                              std::span<const std::uint8_t> bytes) {
  if (bytes.empty())
    return;
  auto slots = rt_.store(runtime::TaggedAddress(addr), bytes,
                         written_taint(WriteSource::SplitData, true));
  if (opts_.record_stores) {
    StoreEvent ev;
    ev.kind = StoreKind::Split;
    ev.origin = origin;
    ev.addr = addr;
    ev.size = bytes.size();
    ev.tainted = true;
    ev.secret_target = true;
    for (std::uint64_t s : slots)
      ev.slots.emplace_back(s, space_.mem.read_word(s));
    trace_.stores.push_back(std::move(ev));
  }
  after_split_write(std::move(origin));
}

void Interpreter::read_any(std::uint64_t addr, std::span<std::uint8_t> out,
                           std::vector<bool> &taint) {
  taint.assign(out.size(), false);
  if (out.empty())
    return;
  if (runtime::is_secret(addr)) {
    bool t = rt_.load(runtime::TaggedAddress(addr), out);
    taint.assign(out.size(), t);
    return;
  }
  check_plain(addr, out.size());
  space_.mem.read(addr, out);
  for (std::size_t i = 0; i < out.size(); ++i)
    taint[i] = space_.mem.is_tainted(addr + i);
}

void Interpreter::write_any(std::string origin, std::uint64_t addr,
                            std::span<const std::uint8_t> bytes, const std::vector<bool> &taint) {
  if (runtime::is_secret(addr)) {
    split_write(std::move(origin), addr, bytes);
    return;
  }
  plain_write(std::move(origin), addr, bytes, taint, WriteSource::PlainStore);
}

void Interpreter::call(int fn, std::vector<Value> args, int ret_slot) {
  Frame f;
  f.fn = fn;
  f.regs.assign(fns_[fn].nregs, Value{});
  for (std::size_t i = 0; i < args.size() && i < f.regs.size(); ++i)
    f.regs[i] = args[i];
  f.stack_mark = space_.stack.mark();
  f.ret_slot = ret_slot;
  frames_.push_back(std::move(f));
}

void Interpreter::run_to_completion() {
  while (!frames_.empty())
    step();
}

void Interpreter::step() {
  Frame &f = frames_.back();
  const RFunction &rf = fns_[f.fn];
  const auto &block = rf.blocks[f.block];
  if (f.ip >= block.size())
    fault(FaultKind::RuntimeError, "fell off the end of block " + rf.src->blocks[f.block].label);
  const RInst &ri = block[f.ip];
  const ir::Instruction &ins = *ri.src;

  if (trace_.steps >= opts_.step_limit)
    fault(FaultKind::StepLimit, "step limit of " + std::to_string(opts_.step_limit) + " reached");
  ++trace_.steps;
  ++op_counts_[static_cast<std::size_t>(ins.op)];
  if (opts_.audit.mode == AuditMode::EveryN && opts_.audit.every_n > 0 &&
      trace_.steps % opts_.audit.every_n == 0)
    audit("step");

  auto set = [&](Value v) {
    if (ri.result >= 0)
      f.regs[ri.result] = Value{ir::mask_to(ins.type, v.bits), v.taint};
  };

  switch (ins.op) {
  case Opcode::Alloca:
  case Opcode::SecretAlloca: {
    std::uint64_t addr;
    try {
      addr = space_.stack.push(space_.mem, ins.alloc_size);
    } catch (const MemoryError &e) {
      fault(FaultKind::OutOfMemory, e.what());
    }
    if (ins.op == Opcode::SecretAlloca) {
      addr = rt_.secret_alloca(addr, ins.alloc_size).raw();
      cost("secret_alloca", 6 + 2 * words(ins.alloc_size));
      note_shadow();
    }
    set({addr, false});
    break;
  }
  case Opcode::Load: {
    Value p = eval(ri.ops[0], f);
    set(plain_load(static_cast<std::uint64_t>(p.bits), ir::byte_size(ins.type)));
    break;
  }
  case Opcode::Store: {
    Value v = eval(ri.ops[0], f);
    Value p = eval(ri.ops[1], f);
    auto bytes = to_bytes(v.bits, ir::byte_size(ins.type));
    plain_write_uniform("store", static_cast<std::uint64_t>(p.bits), bytes, v.taint,
                        WriteSource::PlainStore);
    break;
  }
  case Opcode::Gep: {
    Value b = eval(ri.ops[0], f);
    Value o = eval(ri.ops[1], f);
    unsigned w = ir::bit_width(ins.operands[1].type);
    auto off = static_cast<std::uint64_t>(as_signed(o.bits, w));
    set({static_cast<std::uint64_t>(b.bits) + off, b.taint || o.taint});
    break;
  }
  case Opcode::Add:
  case Opcode::Sub:
  case Opcode::Xor:
  case Opcode::And:
  case Opcode::Or:
  case Opcode::Shl:
  case Opcode::Lshr:
  case Opcode::Mul: {
    Value a = eval(ri.ops[0], f);
    Value b = eval(ri.ops[1], f);
    unsigned w = ir::bit_width(ins.type);
    u128 r = 0;
    switch (ins.op) {
    case Opcode::Add: r = a.bits + b.bits; break;
    case Opcode::Sub: r = a.bits - b.bits; break;
    case Opcode::Xor: r = a.bits ^ b.bits; break;
    case Opcode::And: r = a.bits & b.bits; break;
    case Opcode::Or: r = a.bits | b.bits; break;
    case Opcode::Mul: r = a.bits * b.bits; break;
    case Opcode::Shl: r = b.bits >= w ? 0 : a.bits << static_cast<unsigned>(b.bits); break;
    case Opcode::Lshr:
      r = b.bits >= w ? 0 : ir::mask_to(ins.type, a.bits) >> static_cast<unsigned>(b.bits);
      break;
    default: break;
    }
    set({r, a.taint || b.taint});
    break;
  }
  case Opcode::Icmp: {
    Value a = eval(ri.ops[0], f);
    Value b = eval(ri.ops[1], f);
    Type ty = ins.operands[0].type;
    unsigned w = ir::bit_width(ty);
    u128 ua = ir::mask_to(ty, a.bits), ub = ir::mask_to(ty, b.bits);
    __int128 sa = as_signed(ua, w), sb = as_signed(ub, w);
    bool r = false;
    switch (ins.pred) {
    case ir::CmpPred::Eq: r = ua == ub; break;
    case ir::CmpPred::Ne: r = ua != ub; break;
    case ir::CmpPred::Ult: r = ua < ub; break;
    case ir::CmpPred::Ule: r = ua <= ub; break;
    case ir::CmpPred::Ugt: r = ua > ub; break;
    case ir::CmpPred::Uge: r = ua >= ub; break;
    case ir::CmpPred::Slt: r = sa < sb; break;
    case ir::CmpPred::Sle: r = sa <= sb; break;
    case ir::CmpPred::Sgt: r = sa > sb; break;
    case ir::CmpPred::Sge: r = sa >= sb; break;
    }
    set({r ? 1u : 0u, a.taint || b.taint});
    break;
  }
  case Opcode::Select: {
    Value c = eval(ri.ops[0], f);
    Value a = eval(ri.ops[1], f);
    Value b = eval(ri.ops[2], f);
    Value r = c.bits != 0 ? a : b;
    set({r.bits, c.taint || a.taint || b.taint});
    break;
  }
  case Opcode::Const:
    set(eval(ri.ops[0], f));
    break;
  case Opcode::Br:
    f.block = ri.target0;
    f.ip = 0;
    return;
  case Opcode::CondBr: {
    Value c = eval(ri.ops[0], f);
    f.block = c.bits != 0 ? ri.target0 : ri.target1;
    f.ip = 0;
    return;
  }
  case Opcode::Ret: {
    std::optional<Value> rv;
    if (!ri.ops.empty())
      rv = Value{ir::mask_to(ins.type, eval(ri.ops[0], f).bits), eval(ri.ops[0], f).taint};
    int slot = f.ret_slot;
    space_.stack.reset(f.stack_mark);
    frames_.pop_back();
    if (frames_.empty()) {
      last_ret_ = rv;
    } else {
      Frame &caller = frames_.back();
      if (slot >= 0 && rv)
        caller.regs[slot] = *rv;
      ++caller.ip;
    }
    return;
  }
  case Opcode::Call:
    exec_call(f, ri);
    return;
  }
  ++f.ip;
}

void Interpreter::exec_call(Frame &f, const RInst &ri) {
  std::vector<Value> args;
  args.reserve(ri.ops.size());
  for (const auto &o : ri.ops)
    args.push_back(eval(o, f));
  if (ri.callee_fn >= 0) {
    // The callee's ret advances our ip.
    call(ri.callee_fn, std::move(args), ri.result);
    return;
  }
  if (!ri.intrinsic)
    fault(FaultKind::RuntimeError, "call to unknown function @" + ri.src->callee);
  std::optional<Value> r = exec_intrinsic(*ri.intrinsic, ri, args);
  Frame &cur = frames_.back();
  if (ri.result >= 0 && r)
    cur.regs[ri.result] = Value{ir::mask_to(ri.src->type, r->bits), r->taint};
  ++cur.ip;
}

std::optional<Value> Interpreter::exec_intrinsic(Intrinsic in, const RInst &ri,
                                                 const std::vector<Value> &a) {
  auto u64 = [&](std::size_t i) { return static_cast<std::uint64_t>(a.at(i).bits); };
  std::string name(ir::intrinsic_name(in));

  if (unsigned n = ir::intrinsic_access_size(in)) {
    bool is_store = in >= Intrinsic::SsStore8 && in <= Intrinsic::SsStore128;
    std::uint64_t addr = u64(0);
    if (!runtime::is_secret(addr)) {
      cost(name, 2);
      if (is_store) {
        auto bytes = to_bytes(a.at(1).bits, n);
        plain_write_uniform(name, addr, bytes, a.at(1).taint, WriteSource::PlainStore);
        return std::nullopt;
      }
      return plain_load(addr, n);
    }
    cost(name, 4 + 3 * segments(runtime::clear_tag(addr), n));
    if (is_store) {
      auto bytes = to_bytes(a.at(1).bits, n);
      split_write(name, addr, bytes);
      return std::nullopt;
    }
    std::vector<std::uint8_t> buf(n);
    bool t = rt_.load(runtime::TaggedAddress(addr), buf);
    return Value{from_bytes(buf), t};
  }

  switch (in) {
  // Without the transform a secret annotation changes nothing: secret_malloc
  // and secret_free behave like their plain counterparts.
  case Intrinsic::Malloc:
  case Intrinsic::SecretMalloc: {
    cost(name, 4);
    try {
      return Value{space_.heap.allocate(space_.mem, std::max<std::uint64_t>(u64(0), 1)), false};
    } catch (const MemoryError &e) {
      fault(FaultKind::OutOfMemory, e.what());
    }
  }
  case Intrinsic::Free:
  case Intrinsic::SecretFree: {
    cost(name, 2);
    std::uint64_t p = u64(0);
    if (p == 0)
      return std::nullopt;
    if (!is_canonical(p))
      fault(FaultKind::NonCanonicalAccess, "free of non-canonical address " + hex(p));
    const Region *r = space_.mem.region_containing(p);
    if (!r || r->base != p || r->kind != RegionKind::Heap)
      fault(FaultKind::RuntimeError, "free of " + hex(p) + " which is not a heap block");
    space_.heap.release(space_.mem, p);
    return std::nullopt;
  }
  case Intrinsic::SsSecretMalloc: {
    std::uint64_t n = u64(0);
    auto t = rt_.secret_malloc(n);
    cost(name, 8 + 2 * words(n));
    note_shadow();
    return Value{t.raw(), false};
  }
  case Intrinsic::SsSecretFree:
    cost(name, 6);
    rt_.secret_free(runtime::TaggedAddress(u64(0)));
    note_shadow();
    return std::nullopt;
  case Intrinsic::Memcpy:
  case Intrinsic::SsMemcpy: {
    std::uint64_t dst = u64(0), src = u64(1), n = u64(2);
    bool secret = runtime::is_secret(dst) || runtime::is_secret(src);
    if (in == Intrinsic::SsMemcpy && secret)
      cost(name, 3 + 3 * n);
    else
      cost(name, 1 + words(n));
    std::vector<std::uint8_t> buf(n);
    std::vector<bool> taint;
    if (in == Intrinsic::Memcpy) {
      check_plain(src, n);
      check_plain(dst, n);
    }
    read_any(src, buf, taint);
    write_any(name, dst, buf, taint);
    return std::nullopt;
  }
  case Intrinsic::Memset:
  case Intrinsic::SsMemset: {
    std::uint64_t dst = u64(0), n = u64(2);
    bool secret = runtime::is_secret(dst);
    if (in == Intrinsic::SsMemset && secret)
      cost(name, 3 + 3 * n);
    else
      cost(name, 1 + words(n));
    if (in == Intrinsic::Memset)
      check_plain(dst, n);
    std::vector<std::uint8_t> buf(n, static_cast<std::uint8_t>(a.at(1).bits));
    std::vector<bool> taint(n, a.at(1).taint);
    write_any(name, dst, buf, taint);
    return std::nullopt;
  }
  case Intrinsic::Memcmp:
  case Intrinsic::SsMemcmp: {
    std::uint64_t x = u64(0), y = u64(1), n = u64(2);
    bool secret = runtime::is_secret(x) || runtime::is_secret(y);
    if (in == Intrinsic::SsMemcmp && secret)
      cost(name, 3 + 3 * n);
    else
      cost(name, 1 + words(n));
    if (in == Intrinsic::Memcmp) {
      check_plain(x, n);
      check_plain(y, n);
    }
    std::vector<std::uint8_t> bx(n), by(n);
    std::vector<bool> tx, ty;
    read_any(x, bx, tx);
    read_any(y, by, ty);
    int r = 0;
    for (std::size_t i = 0; i < n && r == 0; ++i)
      r = bx[i] < by[i] ? -1 : (bx[i] > by[i] ? 1 : 0);
    bool t = std::find(tx.begin(), tx.end(), true) != tx.end() ||
             std::find(ty.begin(), ty.end(), true) != ty.end();
    return Value{static_cast<u128>(static_cast<std::uint32_t>(r)), t};
  }
  case Intrinsic::WriteOut: {
    std::uint64_t p = u64(0), n = u64(1);
    cost(name, 1 + words(n));
    check_plain(p, n);
    std::vector<std::uint8_t> buf(n);
    space_.mem.read(p, buf);
    trace_.out.insert(trace_.out.end(), buf.begin(), buf.end());
    return std::nullopt;
  }
  case Intrinsic::SsDeclassify: {
    std::uint64_t p = u64(0), n = u64(1);
    if (!runtime::is_secret(p)) {
      cost(name, 2);
      return Value{p, a.at(0).taint};
    }
    cost(name, 3 + n);
    auto bytes = rt_.declassify_region(runtime::TaggedAddress(p), n);
    if (staging_)
      space_.heap.release(space_.mem, *staging_);
    staging_.reset();
    std::uint64_t buf;
    try {
      buf = space_.heap.allocate(space_.mem, std::max<std::uint64_t>(n, 1));
    } catch (const MemoryError &e) {
      fault(FaultKind::OutOfMemory, e.what());
    }
    staging_ = buf;
    plain_write_uniform(name, buf, bytes, false, WriteSource::Declassified);
    return Value{buf, false};
  }
  case Intrinsic::SsClassify: {
    std::uint64_t dst = u64(0), src = u64(1), n = u64(2);
    cost(name, 3 + 3 * n);
    std::vector<std::uint8_t> buf(n);
    std::vector<bool> taint;
    read_any(src, buf, taint);
    write_any(name, dst, buf, taint);
    return std::nullopt;
  }
  case Intrinsic::SsFramePush:
    cost(name, 2);
    rt_.frame_push();
    note_shadow();
    return std::nullopt;
  case Intrinsic::SsFramePop: {
    std::size_t before = rt_.shadow_map().size();
    rt_.frame_pop();
    cost(name, 2 + 4 * (before - rt_.shadow_map().size()));
    note_shadow();
    return std::nullopt;
  }
  case Intrinsic::SsIsSecret:
    cost(name, 1);
    return Value{runtime::is_secret(u64(0)) ? 1u : 0u, a.at(0).taint};
  case Intrinsic::SsBindGlobal: {
    std::uint64_t p = u64(0), n = u64(1);
    if (runtime::is_secret(p))
      return std::nullopt;
    cost(name, 4 + 2 * words(n) + n);
    auto tagged = rt_.bind_global(p, n);
    for (std::size_t i = 0; i < global_addr_.size(); ++i)
      if (global_addr_[i] == p)
        global_addr_[i] = tagged.raw();
    if (opts_.record_stores) {
      StoreEvent ev;
      ev.kind = StoreKind::Split;
      ev.origin = name;
      ev.addr = tagged.raw();
      ev.size = n;
      ev.tainted = true;
      ev.secret_target = true;
      auto l = rt_.layout_of(p);
      for (std::uint64_t off = 0; off < l.region_size(); off += 4) {
        std::uint64_t s = l.slot_of(off);
        if (std::none_of(ev.slots.begin(), ev.slots.end(), [&](auto &x) { return x.first == s; }))
          ev.slots.emplace_back(s, space_.mem.read_word(s));
      }
      trace_.stores.push_back(std::move(ev));
    }
    note_shadow();
    after_split_write(name);
    return std::nullopt;
  }
  default:
    break;
  }
  (void)ri;
  fault(FaultKind::RuntimeError, "unsupported intrinsic @" + name);
}

ExecTrace Interpreter::execute(std::span<const std::uint8_t> args) {
  resolve();
  const ir::FunctionDef *entry = prog_.find_function(prog_.entry);
  int entry_idx = -1;
  for (std::size_t i = 0; i < prog_.functions.size(); ++i)
    if (&prog_.functions[i] == entry)
      entry_idx = int(i);
  if (!entry && !prog_.functions.empty())
    throw ArgumentError("entry function @" + prog_.entry + " is not defined");
  std::size_t need = entry_arg_bytes(prog_);
  if (args.size() != need)
    throw ArgumentError("entry @" + prog_.entry + " takes " + std::to_string(need) +
                        " argument bytes, got " + std::to_string(args.size()));

  try {
    map_globals();
    for (std::size_t i = 0; i < prog_.functions.size(); ++i)
      if (prog_.functions[i].name == ir::kGlobalCtorName && int(i) != entry_idx) {
        call(int(i), {}, -1);
        run_to_completion();
      }
    if (entry) {
      std::vector<Value> vals;
      std::size_t pos = 0;
      for (const auto &prm : entry->params) {
        unsigned n = ir::byte_size(prm.type);
        vals.push_back(Value{from_bytes(args.subspan(pos, n)), true});
        pos += n;
      }
      call(entry_idx, std::move(vals), -1);
      run_to_completion();
      if (last_ret_)
        trace_.exit = last_ret_->bits;
    }
  } catch (const FaultException &e) {
    Fault flt;
    flt.kind = e.kind;
    flt.message = e.message;
    if (!frames_.empty()) {
      const Frame &f = frames_.back();
      flt.function = fns_[f.fn].src->name;
      flt.block = fns_[f.fn].src->blocks[f.block].label;
      flt.index = int(f.ip);
    }
    trace_.fault = std::move(flt);
  } catch (const runtime::RuntimeError &e) {
    Fault flt;
    flt.kind = e.kind() == runtime::ErrorKind::OutOfSimulatedMemory ? FaultKind::OutOfMemory
                                                                    : FaultKind::RuntimeError;
    flt.message = e.what();
    if (!frames_.empty()) {
      const Frame &f = frames_.back();
      flt.function = fns_[f.fn].src->name;
      flt.block = fns_[f.fn].src->blocks[f.block].label;
      flt.index = int(f.ip);
    }
    trace_.fault = std::move(flt);
  } catch (const MemoryError &e) {
    Fault flt;
    flt.kind = e.kind() == MemoryError::Kind::OutOfMemory ? FaultKind::OutOfMemory
                                                          : FaultKind::Unmapped;
    flt.message = e.what();
    trace_.fault = std::move(flt);
  }

  if (opts_.audit.mode != AuditMode::None)
    audit("end");

  for (std::size_t i = 0; i < kOpcodeCount; ++i)
    if (op_counts_[i]) {
      trace_.icount_by_opcode[std::string(ir::opcode_name(static_cast<Opcode>(i)))] = op_counts_[i];
      trace_.icount += op_counts_[i];
    }
  for (const auto &[k, v] : rt_counts_) {
    trace_.icount_by_opcode[k] = v;
    trace_.icount += v;
  }
  for (std::size_t i = 0; i < prog_.globals.size() && i < global_addr_.size(); ++i)
    trace_.global_addresses[prog_.globals[i].name] = global_addr_[i];
  trace_.peak_mapped_bytes = space_.mem.peak_mapped_bytes();
  trace_.peak_secret_logical_bytes = rt_.peak_secret_logical_bytes();
  trace_.peak_secret_physical_bytes = rt_.peak_secret_physical_bytes();
  trace_.final_memory = std::make_shared<MemoryImage>(space_.mem);
  return std::move(trace_);
}

} // namespace

ExecTrace run(const ir::Program &p, std::span<const std::uint8_t> args, const RunOptions &opts) {
  if (auto diags = ir::validate(p); !diags.empty())
    throw ArgumentError("program does not validate: " + diags.front().to_string());
  runtime::Prefix prefix;
  if (opts.prefix) {
    prefix = *opts.prefix;
  } else if (auto it = p.metadata.find(transform::kMetaPrefix); it != p.metadata.end()) {
    try {
      prefix = runtime::Prefix::parse(it->second);
    } catch (const std::invalid_argument &e) {
      throw ArgumentError(std::string("bad !") + transform::kMetaPrefix + ": " + e.what());
    }
  }
  Interpreter interp(p, opts, prefix);
  return interp.execute(args);
}

} // namespace splitsec::vm
