//===-- transform.hpp - Split-and-prefix instrumentation pass ---*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Rewrites a Program so that every memory operation that may touch secret
// memory goes through the ss_* runtime ABI:
//
//   store T %v, ptr %p        ->  call void @ss_storeN(ptr %p, T %v)
//   %x = load T, ptr %p       ->  %x = call T @ss_loadN(ptr %p)
//   %p = alloca N secret      ->  %p = secret_alloca N   (+ frame push/pop)
//   secret_malloc/free        ->  ss_secret_malloc/free
//   memcpy/memset/memcmp      ->  ss_memcpy/ss_memset/ss_memcmp
//   write_out(p, n)           ->  write_out(ss_declassify(p, n), n)
//
// The ss_load/ss_store entry points test the pointer tag themselves and fall
// back to a plain access for untagged pointers. In annotated mode the pass
// leaves an access alone only when its address provably derives from a
// non-secret alloca (or a non-secret global) of the same function.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/ir.hpp"
#include "splitsec/runtime.hpp"

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitsec::transform {

enum class Mode : std::uint8_t { None, Annotated, AllSecret };

std::string_view mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct Policy {
  Mode mode = Mode::Annotated;
  bool globals_secret = false;
  runtime::Prefix prefix{};

  /// all_secret treats globals as secret as well.
  bool effective_globals_secret() const { return globals_secret || mode == Mode::AllSecret; }
};

// Program metadata written by the pass; the vm reads the prefix from it.
inline constexpr const char *kMetaTransformed = "ss.transformed";
inline constexpr const char *kMetaPrefix = "ss.prefix";
inline constexpr const char *kMetaGlobalsSecret = "ss.globals_secret";

enum class ErrorKind : std::uint8_t {
  InvalidInput,
  AlreadyTransformed,
  UnsupportedInstruction,
  UnknownIntrinsic,
};

class TransformError : public std::runtime_error {
public:
  TransformError(ErrorKind k, const std::string &msg);
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct InstrRef {
  std::string function;
  std::string block;
  std::size_t index = 0;
  auto operator<=>(const InstrRef &) const = default;
};

struct TransformReport {
  std::vector<InstrRef> memory_ops; // loads/stores routed through the runtime
  std::size_t secret_allocas = 0;
  std::size_t intercepted_calls = 0;
  bool global_ctor = false;
};

ir::Program transform_program(const ir::Program &p, const Policy &policy,
                              TransformReport *report = nullptr);

std::vector<ir::Instruction> rewrite_store(const ir::Instruction &ins, const Policy &policy);
std::vector<ir::Instruction> rewrite_load(const ir::Instruction &ins, const Policy &policy);
std::vector<ir::Instruction> instrument_alloca(const ir::Instruction &ins, const Policy &policy);

/// Adds the constructor that moves every global into split form. No-op when
/// globals are not secret or there are no globals.
ir::Program emit_global_ctor(const ir::Program &p, const Policy &policy);

/// Redirects every libc-style call to its runtime counterpart.
ir::Program intercept_intrinsics(const ir::Program &p);

} // namespace splitsec::transform
