//===-- test_vm.cpp - Interpreter semantics, faults and taint -------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/runtime.hpp"
#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <cstring>
#include <iomanip>
#include <json.hpp>

using namespace splitsec;
using transform::Mode;
using vm::FaultKind;

namespace {

vm::ExecTrace run(const ir::Program &p, std::span<const std::uint8_t> args,
                  vm::AuditMode audit = vm::AuditMode::None) {
  vm::RunOptions o;
  o.audit.mode = audit;
  return vm::run(p, args, o);
}

std::uint64_t rd64(const std::uint8_t *p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}
void wr64(std::uint8_t *p, std::uint64_t v) { std::memcpy(p, &v, 8); }
void put(std::vector<std::uint8_t> &out, const void *p, std::size_t n) {
  auto b = static_cast<const std::uint8_t *>(p);
  out.insert(out.end(), b, b + n);
}

struct Expect {
  std::vector<std::uint8_t> out;
  ir::u128 exit = 0;
};

//===----------------------------------------------------------------------===//
// Native reference implementations of the corpus kernels
//===----------------------------------------------------------------------===//

Expect ref_ctswap(std::span<const std::uint8_t> in) {
  std::uint64_t cond = rd64(&in[0]) & 1, a = rd64(&in[8]), b = rd64(&in[16]);
  for (int r = 0; r < 3; ++r) {
    std::uint64_t mask = ~(cond - 1);
    std::uint64_t x = (a ^ b) & mask;
    a ^= x;
    b ^= x;
  }
  Expect e;
  put(e.out, &a, 8);
  put(e.out, &b, 8);
  e.exit = a ^ b;
  return e;
}

Expect ref_block256(std::span<const std::uint8_t> in) {
  std::uint8_t blk[32];
  std::memcpy(blk, in.data(), 32);
  std::uint64_t acc = 0x9e3779b97f4a7c15ull;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t a2 = (acc ^ rd64(blk + 8 * i)) * 1099511628211ull;
    acc = a2 ^ (a2 >> 29);
  }
  wr64(blk + 8, rd64(blk + 8) ^ acc);
  Expect e;
  put(e.out, blk, 32);
  put(e.out, &acc, 8);
  e.exit = (ir::u128(rd64(blk + 8)) << 64) | rd64(blk);
  return e;
}

std::uint32_t rotl32(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

Expect ref_arx(std::span<const std::uint8_t> in) {
  const char *sigma = "expand 32-byte k";
  std::uint8_t st[16];
  wr64(st, rd64(reinterpret_cast<const std::uint8_t *>(sigma)) ^ rd64(&in[0]));
  wr64(st + 8, rd64(reinterpret_cast<const std::uint8_t *>(sigma) + 8) ^ rd64(&in[8]));
  std::uint32_t w[4];
  std::memcpy(w, st, 16);
  for (int r = 0; r < 8; ++r) {
    std::uint32_t &a = w[0], &b = w[1], &c = w[2], &d = w[3];
    a += b; d ^= a; d = rotl32(d, 16);
    c += d; b ^= c; b = rotl32(b, 12);
    a += b; d ^= a; d = rotl32(d, 8);
    c += d; b ^= c; b = rotl32(b, 7);
  }
  Expect e;
  put(e.out, w, 16);
  e.exit = w[0];
  return e;
}

Expect ref_hmac(std::span<const std::uint8_t> in) {
  const std::uint8_t key[16] = {0x0f, 0x1e, 0x2d, 0x3c, 0x4b, 0x5a, 0x69, 0x78,
                                0x87, 0x96, 0xa5, 0xb4, 0xc3, 0xd2, 0xe1, 0xf0};
  auto compress = [](std::uint64_t s, std::uint64_t b0, std::uint64_t b1) {
    std::uint64_t t2 = (s ^ b0) * 0x9ddfea08eb382d69ull + b1;
    return t2 ^ (t2 >> 31);
  };
  auto pad = [&](std::uint64_t byte, std::uint64_t &x0, std::uint64_t &x1) {
    std::uint64_t m = byte * 0x0101010101010101ull;
    x0 = rd64(key) ^ m;
    x1 = rd64(key + 8) ^ m;
  };
  std::uint64_t st = 7640891576956012809ull, x0, x1;
  pad(54, x0, x1);
  st = compress(st, x0, x1);
  for (int i = 0; i < 4; ++i)
    st = compress(st, rd64(&in[0]), rd64(&in[8]));
  pad(92, x0, x1);
  st = compress(st, x0, x1);
  Expect e;
  put(e.out, &st, 8);
  e.exit = st;
  return e;
}

Expect ref_nested(std::span<const std::uint8_t> in) {
  std::uint64_t seed = rd64(&in[0]), acc = 0;
  for (std::uint64_t d = 2;; --d) {
    std::uint64_t x = (seed * 6364136223846793005ull + 1442695040888963407ull) ^ d;
    acc += x;
    seed = x;
    if (d == 0)
      break;
  }
  Expect e;
  put(e.out, &acc, 8);
  e.exit = acc;
  return e;
}

Expect ref_memops(std::span<const std::uint8_t> in) {
  std::uint8_t key[32], tmp[32], pub[24];
  std::memcpy(key, in.data(), 32);
  std::memcpy(tmp, key, 32);
  std::memset(tmp + 5, 0xa5, 11);
  int c = std::memcmp(key, tmp, 32);
  c = c < 0 ? -1 : (c > 0 ? 1 : 0);
  std::memset(pub, 0x5a, 24);
  std::memset(pub + 3, 0x11, 7);
  Expect e;
  put(e.out, pub, 24);
  put(e.out, tmp, 32);
  std::memcpy(key, tmp + 13, 19);
  put(e.out, key, 32);
  e.exit = static_cast<std::uint32_t>(c);
  return e;
}

Expect ref_bytemix(std::span<const std::uint8_t> in) {
  std::uint8_t buf[24] = {}, pub[16] = {};
  std::memcpy(buf, &in[0], 8);      // a
  std::memcpy(buf + 3, &in[8], 8);  // b
  std::memcpy(buf + 6, &in[20], 2); // h
  std::memcpy(buf + 11, &in[16], 4); // c
  buf[15] = in[22];                 // g
  std::uint8_t v17[4];
  std::memcpy(v17, buf + 17, 4);
  std::uint16_t v2;
  std::memcpy(&v2, buf + 6, 2);
  std::uint64_t w = rd64(buf + 1) ^ 0x5555555555555555ull;
  std::memcpy(buf + 9, &w, 8);
  std::memcpy(buf + 20, v17, 4);
  buf[23] = std::uint8_t(buf[15] + 1);
  pub[0] = 1;
  pub[5] = 0x04;
  pub[6] = 0x03;
  Expect e;
  put(e.out, buf, 24);
  put(e.out, pub, 16);
  e.exit = v2;
  return e;
}

Expect reference(const std::string &name, std::span<const std::uint8_t> in) {
  if (name == "ctswap") return ref_ctswap(in);
  if (name == "block256") return ref_block256(in);
  if (name == "arx") return ref_arx(in);
  if (name == "hmac") return ref_hmac(in);
  if (name == "nested") return ref_nested(in);
  if (name == "memops") return ref_memops(in);
  if (name == "bytemix") return ref_bytemix(in);
  throw std::logic_error("no reference for " + name);
}

} // namespace

TEST_CASE("original ctswap swaps when the condition is set") {
  ir::Program p = ir::parse_program(R"(
fn ctswap(i64 %condition, ptr %a, ptr %b) {
entry:
  %va = load i64, ptr %a
  %vb = load i64, ptr %b
  %x = xor i64 %va, %vb
  %c1 = sub i64 %condition, 1
  %mask = xor i64 %c1, -1
  %xm = and i64 %x, %mask
  %na = xor i64 %va, %xm
  store i64 %na, ptr %a
  %nb = xor i64 %vb, %xm
  store i64 %nb, ptr %b
  ret void
}
fn main(i64 %cond, i64 %a, i64 %b) {
entry:
  %pa = alloca 8 secret
  %pb = alloca 8 secret
  store i64 %a, ptr %pa
  store i64 %b, ptr %pb
  call void @ctswap(i64 %cond, ptr %pa, ptr %pb)
  call void @write_out(ptr %pa, i64 8)
  call void @write_out(ptr %pb, i64 8)
  ret void
})");
  auto swap = testutil::le64({9, 7});
  auto keep = testutil::le64({7, 9});
  for (Mode m : testutil::kModes) {
    INFO(transform::mode_name(m));
    ir::Program t = testutil::transformed(p, m);
    CHECK(run(t, testutil::le64({1, 7, 9})).out == swap);
    CHECK(run(t, testutil::le64({0, 7, 9})).out == keep);
  }

  vm::RunOptions o;
  o.audit.mode = vm::AuditMode::EveryStore;
  o.keep_snapshots = true;
  auto tr = vm::run(testutil::transformed(p, Mode::Annotated), testutil::le64({1, 7, 9}), o);
  REQUIRE(!tr.fault);
  for (const auto &ev : tr.stores)
    if (ev.kind == vm::StoreKind::Split)
      for (const auto &[slot, word] : ev.slots)
        CHECK((word >> 32) == 0xdeadceef);
}

TEST_CASE("corpus kernels agree with native reference implementations") {
  std::mt19937_64 rng(2024);
  for (const auto &name : testutil::kernels()) {
    ir::Program p = testutil::corpus(name);
    for (int i = 0; i < 10; ++i) {
      auto args = testutil::random_args(p, rng);
      Expect want = reference(name, args);
      for (Mode m : testutil::kModes) {
        INFO(name << " " << transform::mode_name(m) << " input " << i);
        auto tr = run(testutil::transformed(p, m), args);
        REQUIRE(!tr.fault);
        CHECK(tr.out == want.out);
        REQUIRE(tr.exit);
        CHECK(*tr.exit == want.exit);
      }
    }
  }
}

TEST_CASE("plain and split memory agree with a byte-array model") {
  std::mt19937_64 rng(99);
  const unsigned sizes[] = {1, 2, 4, 8, 16};
  const char *tnames[] = {"i8", "i16", "i32", "i64", "i128"};
  for (int trial = 0; trial < 20; ++trial) {
    std::ostringstream ir;
    ir << "fn main() {\nentry:\n  %buf = alloca 64 secret\n  %out = alloca 256\n";
    std::vector<std::uint8_t> model(64, 0), out(256, 0);
    unsigned out_pos = 0;
    for (int i = 0; i < 24; ++i) {
      unsigned k = unsigned(rng() % 5), sz = sizes[k];
      unsigned off = unsigned(rng() % (64 - sz + 1));
      ir << "  %p" << i << " = gep ptr %buf, i64 " << off << "\n";
      if (rng() % 2 == 0 || out_pos + sz > 256) {
        std::uint64_t lo = rng(), hi = rng();
        ir::u128 v = (ir::u128(hi) << 64) | lo;
        ir::u128 masked = ir::mask_to(*ir::parse_type(tnames[k]), v);
        std::uint64_t mlo = std::uint64_t(masked), mhi = std::uint64_t(masked >> 64);
        if (sz == 16)
          ir << "  %v" << i << " = const i128 0x" << std::hex << mhi << std::setw(16)
             << std::setfill('0') << mlo << std::dec << std::setfill(' ') << "\n";
        else
          ir << "  %v" << i << " = const " << tnames[k] << " " << mlo << "\n";
        ir << "  store " << tnames[k] << " %v" << i << ", ptr %p" << i << "\n";
        for (unsigned b = 0; b < sz; ++b)
          model[off + b] = std::uint8_t(masked >> (8 * b));
      } else {
        ir << "  %l" << i << " = load " << tnames[k] << ", ptr %p" << i << "\n";
        ir << "  %o" << i << " = gep ptr %out, i64 " << out_pos << "\n";
        ir << "  store " << tnames[k] << " %l" << i << ", ptr %o" << i << "\n";
        std::copy(model.begin() + off, model.begin() + off + sz, out.begin() + out_pos);
        out_pos += sz;
      }
    }
    ir << "  call void @write_out(ptr %buf, i64 64)\n";
    ir << "  call void @write_out(ptr %out, i64 256)\n  ret void\n}\n";
    ir::Program p = ir::parse_program(ir.str());
    std::vector<std::uint8_t> want = model;
    want.insert(want.end(), out.begin(), out.end());
    for (Mode m : testutil::kModes) {
      INFO("trial " << trial << " " << transform::mode_name(m) << "\n" << ir.str());
      auto tr = run(testutil::transformed(p, m), {});
      REQUIRE(!tr.fault);
      CHECK(tr.out == want);
    }
  }
}

TEST_CASE("raw load of a tagged address faults as non-canonical") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %s = call ptr @ss_secret_malloc(i64 8)
  %v = load i64, ptr %s
  ret i64 %v
})");
  auto tr = run(p, {});
  REQUIRE(tr.fault);
  CHECK(tr.fault->kind == FaultKind::NonCanonicalAccess);
  CHECK(tr.fault->function == "main");
  CHECK(tr.fault->index == 1);
  CHECK(!tr.exit);
}

TEST_CASE("raw store to a tagged address faults as non-canonical") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %b = alloca 8
  %p = gep ptr %b, i64 0x8000000000000000
  store i8 1, ptr %p
  ret void
})");
  auto tr = run(p, {});
  REQUIRE(tr.fault);
  CHECK(tr.fault->kind == FaultKind::NonCanonicalAccess);
}

TEST_CASE("unmapped access and step limit faults") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %b = alloca 8
  %p = gep ptr %b, i64 0x100000000
  %v = load i64, ptr %p
  ret i64 %v
})");
  auto tr = run(p, {});
  REQUIRE(tr.fault);
  CHECK(tr.fault->kind == FaultKind::Unmapped);

  ir::Program loop = ir::parse_program("fn main() {\nentry:\n  br entry2\nentry2:\n  br entry2\n}");
  vm::RunOptions o;
  o.step_limit = 1000;
  auto t2 = vm::run(loop, {}, o);
  REQUIRE(t2.fault);
  CHECK(t2.fault->kind == FaultKind::StepLimit);
  CHECK(t2.steps == 1000);
}

TEST_CASE("use after secret_free is a runtime fault") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %s = call ptr @secret_malloc(i64 8)
  call void @secret_free(ptr %s)
  store i64 1, ptr %s
  ret void
})");
  auto none = run(p, {});
  REQUIRE(none.fault);
  CHECK(none.fault->kind == FaultKind::Unmapped);
  auto t = run(testutil::transformed(p, Mode::Annotated), {});
  REQUIRE(t.fault);
  CHECK(t.fault->kind == FaultKind::RuntimeError);
}

TEST_CASE("transformed corpus never raises a non-canonical fault") {
  std::mt19937_64 rng(5);
  for (const auto &name : testutil::kernels())
    for (Mode m : {Mode::Annotated, Mode::AllSecret}) {
      ir::Program t = testutil::transformed(testutil::corpus(name), m);
      for (int i = 0; i < 5; ++i) {
        INFO(name);
        CHECK(!run(t, testutil::random_args(t, rng)).fault);
      }
    }
}

TEST_CASE("entry argument count must match") {
  ir::Program p = testutil::corpus("ctswap");
  std::vector<std::uint8_t> short_args(23);
  CHECK_THROWS_AS(vm::run(p, short_args), vm::ArgumentError);
  CHECK(vm::entry_arg_bytes(p) == 24);
}

TEST_CASE("ss_store64 taints the data halves of two slots only") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %s = call ptr @ss_secret_malloc(i64 8)
  call void @ss_store64(ptr %s, i64 1234605616436508552)
  ret void
})");
  vm::RunOptions o;
  o.audit.mode = vm::AuditMode::EveryStore;
  o.keep_snapshots = true;
  auto tr = vm::run(p, {}, o);
  REQUIRE(!tr.fault);
  REQUIRE(tr.stores.size() == 1);
  const auto &ev = tr.stores[0];
  REQUIRE(ev.slots.size() == 2);
  const auto &mem = *tr.audit_points[0].snapshot;
  for (const auto &[slot, word] : ev.slots) {
    for (int b = 0; b < 4; ++b) {
      CHECK(mem.is_tainted(slot + b));
      CHECK(!mem.is_tainted(slot + 4 + b));
    }
  }
  CHECK(ev.slots[0].second == 0xdeadceef55667788ull);
  CHECK(ev.slots[1].second == 0xdeadceef11223344ull);
}

TEST_CASE("plain store taint follows the stored value") {
  ir::Program p = ir::parse_program(R"(
fn main(i64 %secret) {
entry:
  %buf = alloca 24
  store i64 5, ptr %buf
  %pub = const i64 77
  %mix = xor i64 %secret, %pub
  %b8 = gep ptr %buf, i64 8
  store i64 %mix, ptr %b8
  %b16 = gep ptr %buf, i64 16
  %c = icmp eq i64 %pub, 77
  store i8 %c, ptr %b16
  ret void
})");
  auto tr = run(p, testutil::le64({3}));
  REQUIRE(tr.stores.size() == 3);
  CHECK(!tr.stores[0].tainted);
  CHECK(tr.stores[1].tainted);
  CHECK(!tr.stores[2].tainted);
  const auto &m = *tr.final_memory;
  std::uint64_t base = tr.stores[0].addr;
  CHECK(!m.any_tainted(base, 8));
  CHECK(m.any_tainted(base + 8, 8));
}

TEST_CASE("declassify clears taint on its output buffer only") {
  ir::Program t = testutil::transformed(ir::parse_program(R"(
fn main(i64 %v) {
entry:
  %s = alloca 8 secret
  store i64 %v, ptr %s
  call void @write_out(ptr %s, i64 8)
  ret void
})"),
                                        Mode::Annotated);
  vm::RunOptions o;
  o.audit.mode = vm::AuditMode::EveryStore;
  o.keep_snapshots = true;
  auto tr = vm::run(t, testutil::le64({0xabcdef}), o);
  REQUIRE(!tr.fault);
  auto it = std::find_if(tr.stores.begin(), tr.stores.end(),
                         [](const auto &e) { return e.origin == "ss_declassify"; });
  REQUIRE(it != tr.stores.end());
  CHECK(!it->tainted);
  CHECK(!tr.final_memory->any_tainted(it->addr, 8));
  const auto &split = tr.stores.front();
  CHECK(split.kind == vm::StoreKind::Split);
  CHECK(tr.audit_points.front().snapshot->is_tainted(split.slots[0].first));
}

TEST_CASE("written_taint rules") {
  using vm::WriteSource;
  STATIC_REQUIRE(vm::written_taint(WriteSource::SplitData, false));
  STATIC_REQUIRE(!vm::written_taint(WriteSource::RuntimePrefix, true));
  STATIC_REQUIRE(vm::written_taint(WriteSource::PlainStore, true));
  STATIC_REQUIRE(!vm::written_taint(WriteSource::PlainStore, false));
  STATIC_REQUIRE(!vm::written_taint(WriteSource::Declassified, true));
}

TEST_CASE("secret global initializers are tainted when mapped") {
  ir::Program p = testutil::corpus("hmac");
  auto tr = run(p, testutil::le64({1, 2}));
  REQUIRE(!tr.fault);
  std::uint64_t key = tr.global_addresses.at("key");
  std::uint64_t rounds = tr.global_addresses.at("rounds");
  CHECK(tr.final_memory->any_tainted(key, 16));
  CHECK(!tr.final_memory->any_tainted(rounds, 8));
}

TEST_CASE("instruction counts are exact") {
  auto tr = run(testutil::corpus("ctswap"), testutil::le64({1, 7, 9}));
  // ctswap body 11 x 3 calls, main entry 8, loop 6 x 3, exit block 6.
  CHECK(tr.steps == 33 + 8 + 18 + 6);
  CHECK(tr.icount_by_opcode.at("load") == 2 * 3 + 3 + 2);
  CHECK(tr.icount_by_opcode.at("store") == 2 * 3 + 3 + 3);
  CHECK(tr.icount_by_opcode.at("rt.write_out") == 4);
  std::uint64_t sum = 0;
  for (const auto &[k, v] : tr.icount_by_opcode)
    sum += v;
  CHECK(sum == tr.icount);
}

TEST_CASE("runs are deterministic") {
  for (const auto &name : testutil::kernels()) {
    ir::Program t = testutil::transformed(testutil::corpus(name), Mode::Annotated);
    std::mt19937_64 rng(1);
    auto args = testutil::random_args(t, rng);
    vm::RunOptions o;
    auto a = vm::run(t, args, o);
    auto b = vm::run(t, args, o);
    CHECK(vm::trace_to_json(a) == vm::trace_to_json(b));
    CHECK(a.stores.size() == b.stores.size());
  }
}

TEST_CASE("audit point policies") {
  ir::Program t = testutil::transformed(testutil::corpus("ctswap"), Mode::Annotated);
  auto args = testutil::le64({1, 7, 9});
  vm::RunOptions o;
  o.audit.mode = vm::AuditMode::EndOnly;
  CHECK(vm::run(t, args, o).audit_points.size() == 1);
  o.audit.mode = vm::AuditMode::None;
  CHECK(vm::run(t, args, o).audit_points.empty());
  o.audit.mode = vm::AuditMode::EveryStore;
  auto every = vm::run(t, args, o);
  CHECK(every.audit_points.size() == 8 + 1);
  CHECK(every.audit_points.back().reason == "end");
  o.audit = vm::AuditPolicy{vm::AuditMode::EveryN, 10};
  int hooks = 0;
  o.on_audit = [&](const vm::MemoryImage &, const vm::AuditPoint &pt) {
    ++hooks;
    CHECK((pt.reason == "end" || pt.step % 10 == 0));
  };
  auto n = vm::run(t, args, o);
  CHECK(std::size_t(hooks) == n.audit_points.size());
  CHECK(n.audit_points.size() == n.steps / 10 + 1);
}

TEST_CASE("uninitialized reads return zero and warn") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %b = alloca 8
  %v = load i64, ptr %b
  ret i64 %v
})");
  auto tr = run(p, {});
  CHECK(tr.exit == 0);
  CHECK(tr.uninit_reads == 1);
  CHECK(!tr.warnings.empty());
}

TEST_CASE("arithmetic edge cases") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %a = const i8 200
  %b = add i8 %a, 100
  %s = shl i32 1, 40
  %l = lshr i16 -1, 4
  %m = mul i128 -1, -1
  %lt = icmp slt i8 %a, 0
  %ult = icmp ult i8 %a, 0
  %sel = select i8 %lt, i64 11, 22
  %o = alloca 32
  store i8 %b, ptr %o
  %o1 = gep ptr %o, i64 1
  store i32 %s, ptr %o1
  %o5 = gep ptr %o, i64 5
  store i16 %l, ptr %o5
  %o7 = gep ptr %o, i64 7
  store i8 %lt, ptr %o7
  %o8 = gep ptr %o, i64 8
  store i8 %ult, ptr %o8
  %o9 = gep ptr %o, i64 9
  store i64 %sel, ptr %o9
  %back = gep ptr %o9, i64 -9
  call void @write_out(ptr %back, i64 17)
  ret i128 %m
})");
  auto tr = run(p, {});
  REQUIRE(!tr.fault);
  std::vector<std::uint8_t> want{44, 0, 0, 0, 0, 0xff, 0x0f, 1, 0, 11, 0, 0, 0, 0, 0, 0, 0};
  CHECK(tr.out == want);
  CHECK(tr.exit == 1);
}

TEST_CASE("trace JSON carries the documented fields") {
  auto tr = run(testutil::corpus("ctswap"), testutil::le64({1, 7, 9}));
  auto j = nlohmann::json::parse(vm::trace_to_json(tr));
  CHECK(j.contains("icount_by_opcode"));
  CHECK(j["faults"].is_array());
  CHECK(j["faults"].empty());
  CHECK(j["out_hex"] == "09000000000000000700000000000000");
  CHECK(j["exit"] == "14");

  ir::Program bad = ir::parse_program(
      "fn main() {\nentry:\n  %b = alloca 8\n  %p = gep ptr %b, i64 0x8000000000000000\n"
      "  %v = load i8, ptr %p\n  ret void\n}");
  auto f = nlohmann::json::parse(vm::trace_to_json(run(bad, {})));
  REQUIRE(f["faults"].size() == 1);
  CHECK(f["faults"][0]["kind"] == "NonCanonicalAccess");
  CHECK(f["exit"].is_null());
}
