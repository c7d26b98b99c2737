//===-- vm.hpp - Deterministic interpreter over a tagged address space ----===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/ir.hpp"
#include "splitsec/memory.hpp"
#include "splitsec/runtime.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitsec::vm {

enum class FaultKind : std::uint8_t {
  NonCanonicalAccess,
  Unmapped,
  StepLimit,
  RuntimeError,
  OutOfMemory,
};

std::string_view fault_kind_name(FaultKind k);

struct Fault {
  FaultKind kind = FaultKind::RuntimeError;
  std::string message;
  std::string function;
  std::string block;
  int index = -1;
};

enum class AuditMode : std::uint8_t { None, EndOnly, EveryStore, EveryN };

struct AuditPolicy {
  AuditMode mode = AuditMode::EveryStore;
  std::uint64_t every_n = 0; // for EveryN
};

struct AuditPoint {
  std::uint64_t step = 0;
  std::string reason; // "ss_store64", "end", "step", ...
  std::shared_ptr<const MemoryImage> snapshot; // only with keep_snapshots
};

enum class StoreKind : std::uint8_t { Plain, Split };

/// One memory write performed by the program or on its behalf.
struct StoreEvent {
  StoreKind kind = StoreKind::Plain;
  std::string origin;      // "store", "memcpy", "ss_store64", ...
  std::uint64_t addr = 0;  // as seen by the program (possibly tagged)
  std::uint64_t size = 0;  // logical bytes
  bool tainted = false;    // any written data byte tainted
  bool secret_target = false; // plain write landing in a secret original or shadow region
  /// Split writes: every physical slot touched, with its word after the write.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> slots;
};

struct ExecTrace {
  std::map<std::string, std::uint64_t> icount_by_opcode;
  std::uint64_t icount = 0; // IR instructions plus modelled runtime work
  std::uint64_t steps = 0;  // IR instructions only
  std::vector<std::uint8_t> out;
  std::optional<ir::u128> exit;
  std::optional<Fault> fault;
  std::vector<AuditPoint> audit_points;
  std::vector<StoreEvent> stores;
  std::uint64_t uninit_reads = 0;
  std::vector<std::string> warnings;
  /// ShadowMap size after every frame push/pop and secret_alloca.
  std::vector<std::size_t> shadow_trace;
  std::map<std::string, std::uint64_t> global_addresses;
  std::uint64_t peak_mapped_bytes = 0;
  std::uint64_t peak_secret_logical_bytes = 0;
  std::uint64_t peak_secret_physical_bytes = 0;
  std::uint32_t prefix = runtime::kDefaultPrefix;
  std::shared_ptr<const MemoryImage> final_memory;
};

using AuditHook = std::function<void(const MemoryImage &, const AuditPoint &)>;

struct RunOptions {
  std::uint64_t step_limit = 100'000'000;
  AuditPolicy audit;
  AuditHook on_audit;
  bool keep_snapshots = false;
  bool record_stores = true;
  std::optional<runtime::Prefix> prefix; // defaults to the program's ss.prefix metadata
};

/// Bad entry arguments (wrong byte count) or an unrunnable program.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Bytes of input the entry function consumes, one little-endian field per
/// parameter.
std::size_t entry_arg_bytes(const ir::Program &p);

/// Runs the global constructor (if any) and then the entry function.
/// Entry arguments are treated as secret inputs and start out tainted.
ExecTrace run(const ir::Program &p, std::span<const std::uint8_t> args,
              const RunOptions &opts = {});

//===----------------------------------------------------------------------===//
// Taint bookkeeping
//===----------------------------------------------------------------------===//

enum class WriteSource : std::uint8_t {
  SplitData,     // data bytes written by the runtime into a secret allocation
  RuntimePrefix, // prefix halves written by the runtime
  PlainStore,    // ordinary store, memcpy, memset
  Declassified,  // output buffer of ss_declassify
};

/// Taint of a written byte given who wrote it and the taint of the value.
constexpr bool written_taint(WriteSource src, bool value_tainted) {
  switch (src) {
  case WriteSource::SplitData: return true;
  case WriteSource::RuntimePrefix: return false;
  case WriteSource::PlainStore: return value_tainted;
  case WriteSource::Declassified: return false;
  }
  return value_tainted;
}

std::string trace_to_json(const ExecTrace &t, int indent = 2);

} // namespace splitsec::vm
