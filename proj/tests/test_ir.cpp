//===-- test_ir.cpp - Parser, printer and validator -----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "test_util.hpp"

#include <catch_amalgamated.hpp>

using namespace splitsec;
using ir::DiagKind;
using ir::Opcode;
using ir::Type;

namespace {

std::vector<ir::Diagnostic> parse_errors(std::string_view text) {
  try {
    ir::parse_program(text);
  } catch (const ir::ParseError &e) {
    return e.diagnostics();
  }
  return {};
}

bool has_kind(const std::vector<ir::Diagnostic> &ds, DiagKind k) {
  return std::any_of(ds.begin(), ds.end(), [&](const auto &d) { return d.kind == k; });
}

const char *kCtswap = R"(
fn ctswap(i64 %condition, ptr %a, ptr %b) {
entry:
  %val_a = load i64, ptr %a
  %val_b = load i64, ptr %b
  %x = xor i64 %val_a, %val_b
  %c1 = sub i64 %condition, 1
  %mask = xor i64 %c1, -1
  %xm = and i64 %x, %mask
  %na = xor i64 %val_a, %xm
  store i64 %na, ptr %a
  %nb = xor i64 %val_b, %xm
  store i64 %nb, ptr %b
  ret void
}
fn main() {
  ret i64 0
}
)";

} // namespace

TEST_CASE("minimal program parses to one function and no globals") {
  ir::Program p = ir::parse_program("fn main() { ret i64 0 }");
  REQUIRE(p.functions.size() == 1);
  CHECK(p.globals.empty());
  CHECK(p.functions[0].blocks.size() == 1);
  CHECK(p.functions[0].blocks[0].label == "entry");
  CHECK(p.functions[0].return_type() == Type::I64);
  CHECK(ir::validate(p).empty());
}

TEST_CASE("printing the minimal program is canonical and stable") {
  ir::Program p = ir::parse_program("fn main() { ret i64 0 }");
  std::string text = ir::print_program(p);
  CHECK(text == "; splitsec IR\n\nfn main() {\nentry:\n  ret i64 0\n}\n");
  CHECK(ir::print_program(ir::parse_program(text)) == text);
}

TEST_CASE("ctswap kernel has the expected instruction shape") {
  ir::Program p = ir::parse_program(kCtswap);
  CHECK(ir::validate(p).empty());
  const ir::FunctionDef *f = p.find_function("ctswap");
  REQUIRE(f);
  std::vector<Opcode> ops;
  for (const auto &ins : f->blocks[0].insts)
    ops.push_back(ins.op);
  std::vector<Opcode> want{Opcode::Load, Opcode::Load, Opcode::Xor,   Opcode::Sub,
                           Opcode::Xor,  Opcode::And,  Opcode::Xor,   Opcode::Store,
                           Opcode::Xor,  Opcode::Store, Opcode::Ret};
  CHECK(ops == want);
}

TEST_CASE("store to an undefined register is a syntax error naming it") {
  auto ds = parse_errors("fn main() {\nentry:\n  store i64 1, ptr %nowhere\n  ret void\n}\n");
  REQUIRE(!ds.empty());
  CHECK(ds[0].kind == DiagKind::SyntaxError);
  CHECK(ds[0].message.find("%nowhere") != std::string::npos);
  CHECK(ds[0].loc.line == 3);
}

TEST_CASE("syntax errors carry line and column") {
  auto ds = parse_errors("fn main() {\nentry:\n  %x = frobnicate i64 1, 2\n  ret void\n}\n");
  REQUIRE(ds.size() >= 1);
  CHECK(ds[0].kind == DiagKind::SyntaxError);
  CHECK(ds[0].loc.line == 3);
  CHECK(ds[0].loc.col > 0);
}

TEST_CASE("several errors are reported in one pass") {
  auto ds = parse_errors("fn a() {\n  %x = bogus\n  ret void\n}\nfn b() {\n  %y = alsobogus\n  ret void\n}\n");
  CHECK(ds.size() >= 2);
}

TEST_CASE("duplicate definitions are reported") {
  CHECK(has_kind(parse_errors("fn f() { ret void }\nfn f() { ret void }"), DiagKind::DuplicateDefinition));
  CHECK(has_kind(parse_errors("fn f() {\n  %x = const i64 1\n  %x = const i64 2\n  ret void\n}"),
                 DiagKind::DuplicateDefinition));
  CHECK(has_kind(parse_errors("global g : 1 = 00\nglobal g : 1 = 01\nfn main() { ret void }"),
                 DiagKind::DuplicateDefinition));
}

TEST_CASE("floating point types are rejected") {
  auto ds = parse_errors("fn main() {\n  %x = const f32 1\n  ret void\n}");
  REQUIRE(!ds.empty());
  CHECK(ds[0].kind == DiagKind::SyntaxError);
}

TEST_CASE("validate flags a block with two terminators") {
  ir::Program p = ir::parse_program("fn main() {\nentry:\n  ret void\n  ret void\n}");
  auto ds = ir::validate(p);
  CHECK(has_kind(ds, DiagKind::MalformedBlock));
}

TEST_CASE("validate flags a block without a terminator") {
  ir::Program p = ir::parse_program("fn main() {\nentry:\n  %x = const i64 1\n}");
  CHECK(has_kind(ir::validate(p), DiagKind::MalformedBlock));
}

TEST_CASE("validate flags an i32 operand fed to an i64 add") {
  ir::Program p = ir::parse_program(
      "fn main() {\nentry:\n  %a = const i32 1\n  %b = add i64 %a, 2\n  ret void\n}");
  auto ds = ir::validate(p);
  REQUIRE(has_kind(ds, DiagKind::TypeMismatch));
  auto it = std::find_if(ds.begin(), ds.end(), [](auto &d) { return d.kind == DiagKind::TypeMismatch; });
  CHECK(it->loc.line == 4);
  CHECK(it->function == "main");
  CHECK(it->index == 1);
}

TEST_CASE("validate flags uses that are not dominated by their definition") {
  ir::Program p = ir::parse_program(R"(
fn main(i64 %c) {
entry:
  condbr i64 %c, left, right
left:
  %x = const i64 1
  br join
right:
  br join
join:
  %y = add i64 %x, 1
  ret i64 %y
})");
  CHECK(has_kind(ir::validate(p), DiagKind::DominanceViolation));
}

TEST_CASE("validate accepts loops whose values are dominated") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %i = alloca 8
  store i64 0, ptr %i
  br head
head:
  %v = load i64, ptr %i
  %n = add i64 %v, 1
  store i64 %n, ptr %i
  %c = icmp ult i64 %n, 10
  condbr i8 %c, head, out
out:
  ret i64 %n
})");
  CHECK(ir::validate(p).empty());
}

TEST_CASE("validate checks global initializer length") {
  CHECK(!parse_errors("global g : 4 = 0011\nfn main() { ret void }").empty());
  ir::Program p = ir::parse_program("global g : 4 = 00112233\nfn main() { ret void }");
  p.globals[0].init.pop_back();
  CHECK(!ir::validate(p).empty());
}

TEST_CASE("validate checks intrinsic call signatures") {
  ir::Program p = ir::parse_program(
      "fn main() {\nentry:\n  %p = call ptr @malloc(i64 8)\n  call void @memset(ptr %p, i64 0, i64 8)\n  ret void\n}");
  CHECK(has_kind(ir::validate(p), DiagKind::TypeMismatch));
}

TEST_CASE("missing entry function is reported") {
  ir::Program p = ir::parse_program("fn helper() { ret void }");
  CHECK(has_kind(ir::validate(p), DiagKind::MissingEntry));
  ir::Program q = ir::parse_program("entry helper\nfn helper() { ret void }");
  CHECK(ir::validate(q).empty());
}

TEST_CASE("load and store record access size and default alignment") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %p = alloca 16
  store i16 7, ptr %p
  %a = load i128, ptr %p, align 4
  ret void
})");
  const auto &insts = p.functions[0].blocks[0].insts;
  CHECK(ir::byte_size(insts[1].type) == 2);
  CHECK(insts[1].align == 2);
  CHECK(ir::byte_size(insts[2].type) == 16);
  CHECK(insts[2].align == 4);
}

TEST_CASE("empty program prints the header only") {
  ir::Program p;
  CHECK(ir::print_program(p) == "; splitsec IR\n");
  CHECK(ir::parse_program(ir::print_program(p)) == p);
}

TEST_CASE("128-bit and negative immediates round-trip") {
  ir::Program p = ir::parse_program(R"(
fn main() {
entry:
  %a = const i128 0xffeeddccbbaa99887766554433221100
  %b = const i64 -1
  %c = const i8 255
  ret void
})");
  const auto &insts = p.functions[0].blocks[0].insts;
  ir::u128 want = (ir::u128(0xffeeddccbbaa9988ull) << 64) | 0x7766554433221100ull;
  CHECK(insts[0].operands[0].imm == want);
  CHECK(insts[1].operands[0].imm == 0xffffffffffffffffull);
  CHECK(insts[2].operands[0].imm == 255);
  CHECK(ir::parse_program(ir::print_program(p)) == p);
}

TEST_CASE("every corpus program validates and round-trips") {
  for (const auto &e : std::filesystem::directory_iterator(testutil::corpus_dir())) {
    if (e.path().extension() != ".ir")
      continue;
    INFO(e.path().filename().string());
    ir::Program p = ir::parse_program(testutil::read_file(e.path()));
    CHECK(ir::validate(p).empty());
    std::string once = ir::print_program(p);
    ir::Program q = ir::parse_program(once);
    CHECK(q == p);
    CHECK(ir::print_program(q) == once);
  }
}

TEST_CASE("transformed programs round-trip") {
  for (const auto &name : testutil::kernels())
    for (auto m : testutil::kModes) {
      INFO(name << " " << transform::mode_name(m));
      ir::Program t = testutil::transformed(testutil::corpus(name), m);
      CHECK(ir::parse_program(ir::print_program(t)) == t);
    }
}

TEST_CASE("intrinsic lookup covers the runtime ABI names") {
  for (const char *n : {"ss_store8", "ss_store16", "ss_store32", "ss_store64", "ss_store128", "ss_load8",
                        "ss_load128", "ss_secret_malloc", "ss_secret_free", "ss_declassify",
                        "ss_classify", "ss_frame_push", "ss_frame_pop"}) {
    INFO(n);
    auto i = ir::lookup_intrinsic(n);
    REQUIRE(i);
    CHECK(ir::is_runtime_intrinsic(*i));
    CHECK(ir::intrinsic_name(*i) == n);
  }
  CHECK(!ir::lookup_intrinsic("printf"));
  CHECK(ir::intrinsic_access_size(*ir::lookup_intrinsic("ss_load16")) == 2);
}
