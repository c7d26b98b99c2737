//===-- cli.hpp - Command implementations behind the splitsec tool --------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/dmp.hpp"
#include "splitsec/transform.hpp"
#include "splitsec/vm.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace splitsec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFault = 2;
inline constexpr int kExitStepLimit = 3;
inline constexpr int kExitMismatch = 3;
inline constexpr int kExitCap = 125;

/// Exit status of `audit`: 0 when clean, otherwise the tainted-finding count
/// shifted past the usage and fault codes, saturating at 125.
constexpr int audit_exit_code(std::size_t tainted) {
  if (tainted == 0)
    return kExitOk;
  return tainted >= std::size_t(kExitCap - 2) ? kExitCap : int(tainted) + 2;
}

/// Resolves --prefix, then $SS_PREFIX, then the default. Throws
/// std::invalid_argument for malformed or canonical-looking prefixes.
runtime::Prefix resolve_prefix(const std::optional<std::string> &flag);

std::vector<std::uint8_t> parse_hex_bytes(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Reads and validates an IR file; on failure prints diagnostics to `err`.
std::optional<ir::Program> load_program(const std::string &path, std::ostream &err);

struct TransformArgs {
  std::string input;
  std::string output; // empty: stdout
  std::string policy = "annotated";
  std::optional<std::string> prefix;
  bool globals_secret = false;
};
int cmd_transform(const TransformArgs &a, std::ostream &out, std::ostream &err);

struct RunArgs {
  std::string input;
  std::string args_hex;
  std::string trace_path; // empty: no trace file
  std::uint64_t step_limit = 100'000'000;
};
int cmd_run(const RunArgs &a, std::ostream &out, std::ostream &err);

struct AuditArgs {
  std::string input;
  std::string mode = "both"; // heuristic | aggressive | both
  std::string args_hex;
  std::string report_path; // empty: stdout
  unsigned window_bits = 32;
  std::uint64_t every_n = 0; // 0: audit after every secret store
};

struct AuditResult {
  dmp::DmpReport report;
  dmp::StoreAudit stores;
  std::size_t audit_points = 0;
  std::optional<vm::Fault> fault;
};

/// Runs `p` with the given audit points and merges the findings of every
/// scan (deduplicated by address, value and mode).
AuditResult audit_program(const ir::Program &p, std::span<const std::uint8_t> args,
                          const std::vector<dmp::DmpMode> &modes, unsigned window_bits = 32,
                          vm::AuditPolicy policy = {});
int cmd_audit(const AuditArgs &a, std::ostream &out, std::ostream &err);

struct DiffArgs {
  std::string left;
  std::string right; // empty: compare `left` across the three policies
  std::string args_hex;
};
int cmd_diff(const DiffArgs &a, std::ostream &out, std::ostream &err);

//===----------------------------------------------------------------------===//
// bench
//===----------------------------------------------------------------------===//

struct BenchRow {
  std::string program;
  std::string policy;
  std::uint64_t icount = 0;
  std::uint64_t peak_mapped_bytes = 0;
  double icount_ratio = 0;
  double mem_ratio = 0;
  std::uint64_t secret_logical_bytes = 0;
  std::uint64_t secret_physical_bytes = 0;
  double secret_mem_ratio = 0; // physical / logical, 0 without secrets
};

inline constexpr const char *kBenchCsvHeader =
    "program,policy,icount,peak_mapped_bytes,icount_ratio,mem_ratio,secret_logical_bytes,"
    "secret_physical_bytes,secret_mem_ratio";

struct BenchArgs {
  std::string corpus_dir;
  std::vector<std::string> policies{"none", "annotated", "all_secret"};
  unsigned repeat = 1;
  std::string csv_path;  // empty: CSV to stdout
  std::string json_path; // empty: no JSON
  std::optional<std::string> prefix;
};

/// Deterministic entry arguments for benchmarking `p`.
std::vector<std::uint8_t> bench_args(const ir::Program &p, std::uint64_t seed = 1);

/// Rows for one program across `policies`; ratios are relative to "none",
/// which is always measured.
std::vector<BenchRow> bench_program(const std::string &name, const ir::Program &p,
                                    const std::vector<transform::Mode> &policies,
                                    const runtime::Prefix &prefix, unsigned repeat,
                                    std::ostream &err);
std::string bench_csv(const std::vector<BenchRow> &rows);
std::string bench_json(const std::vector<BenchRow> &rows, int indent = 2);
int cmd_bench(const BenchArgs &a, std::ostream &out, std::ostream &err);

} // namespace splitsec::cli
