//===-- dmp.hpp - Address-based data memory-dependent prefetcher oracle ---===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The oracle treats every 8-byte-aligned word in mapped memory as a value the
// prefetcher may inspect. A word is a candidate when translating it as a
// virtual address gets at least one page-table level deep. Heuristic mode
// additionally requires the value to point into the same locality window
// (4 GiB by default) as the word's own storage address.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/memory.hpp"
#include "splitsec/vm.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace splitsec::dmp {

enum class DmpMode : std::uint8_t { Heuristic, Aggressive };

std::string_view mode_name(DmpMode m);
std::optional<DmpMode> parse_mode(std::string_view s);

struct DmpConfig {
  DmpMode mode = DmpMode::Heuristic;
  unsigned window_bits = 32; // heuristic locality window is 2^window_bits bytes
};

inline constexpr unsigned kLevels = 4;
inline constexpr unsigned kBitsPerLevel = 9;

/// Number of translation levels (0..4) that resolve for `v` against the set of
/// mapped pages. Level k resolves when some mapped page agrees with `v` on VA
/// bits 47 down to 48 - 9k.
class PageWalker {
public:
  explicit PageWalker(const vm::MemoryImage &m);
  unsigned depth(std::uint64_t v) const;

private:
  std::array<std::set<std::uint64_t>, kLevels> prefixes_;
};

unsigned page_walk(std::uint64_t v, const vm::MemoryImage &m);

bool is_prefetch_candidate(std::uint64_t addr, std::uint64_t v, const DmpConfig &cfg,
                           const PageWalker &walker);
bool is_prefetch_candidate(std::uint64_t addr, std::uint64_t v, const DmpConfig &cfg,
                           const vm::MemoryImage &m);

struct Finding {
  std::uint64_t addr = 0;
  std::uint64_t value = 0;
  unsigned walk_depth = 0;
  DmpMode mode = DmpMode::Heuristic;
  bool tainted = false;
  bool operator==(const Finding &) const = default;
};

struct DmpReport {
  std::string mode; // "heuristic", "aggressive" or "both"
  std::uint64_t scanned = 0;
  std::vector<Finding> findings;

  std::size_t tainted_count() const;
};

DmpReport scan(const vm::MemoryImage &m, const DmpConfig &cfg);
DmpReport scan(const vm::MemoryImage &m, DmpMode mode);

std::string report_to_json(const DmpReport &r, int indent = 2);

//===----------------------------------------------------------------------===//
// Store coverage
//===----------------------------------------------------------------------===//

enum class StoreClass : std::uint8_t { InstrumentedSplit, PlainNonSecret, Violation };

struct StoreViolation {
  std::size_t index = 0; // position in ExecTrace::stores
  std::string origin;
  std::uint64_t addr = 0;
  std::string reason;
};

struct StoreAudit {
  std::size_t instrumented_split = 0;
  std::size_t plain_nonsecret = 0;
  std::vector<StoreViolation> violations;
};

/// Classification of one store event given the prefix the run used.
StoreClass classify_store(const vm::StoreEvent &ev, std::uint32_t prefix, std::string *reason = nullptr);
StoreAudit audit_stores(const vm::ExecTrace &trace);

} // namespace splitsec::dmp
