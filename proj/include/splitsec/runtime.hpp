//===-- runtime.hpp - Split-and-prefix secret memory runtime ----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A secret allocation of n logical bytes owns two regions of ceil8(n) bytes:
// the original and a shadow. Logical byte o lives in 32-bit segment o/4;
// even segments go to the original, odd ones to the shadow, and each region
// packs one segment into the low half of every 8-byte slot. The high half of
// every slot permanently holds the prefix, so no aligned 64-bit word in
// either region can look like a canonical address.
//
// Secret allocations are identified by bit 63 of the pointer. Any access
// that bypasses this runtime with such a pointer is non-canonical and faults.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/memory.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace splitsec::runtime {

inline constexpr std::uint64_t kTagBit = 1ull << 63;
inline constexpr std::uint32_t kDefaultPrefix = 0xdeadceef;

constexpr bool is_secret(std::uint64_t addr) { return (addr & kTagBit) != 0; }
constexpr std::uint64_t clear_tag(std::uint64_t addr) { return addr & ~kTagBit; }
constexpr std::uint64_t set_tag(std::uint64_t addr) { return addr | kTagBit; }

/// (prefix << 32) | segment
constexpr std::uint64_t merge(std::uint32_t prefix, std::uint32_t segment) {
  return (std::uint64_t(prefix) << 32) | segment;
}
constexpr std::uint32_t extract(std::uint64_t word) {
  return static_cast<std::uint32_t>(word & 0xffffffffu);
}

/// 32-bit constant for the high half of every secret slot. Placed in bits
/// 32..63 of a word it must make the word non-canonical.
class Prefix {
public:
  explicit Prefix(std::uint32_t value = kDefaultPrefix);
  std::uint32_t value() const { return value_; }
  /// Accepts "0x"-prefixed or bare hex. Throws std::invalid_argument.
  static Prefix parse(std::string_view text);
  bool operator==(const Prefix &) const = default;

private:
  std::uint32_t value_;
};

class TaggedAddress {
public:
  constexpr TaggedAddress() = default;
  constexpr explicit TaggedAddress(std::uint64_t raw) : raw_(raw) {}
  static constexpr TaggedAddress tag(std::uint64_t untagged) { return TaggedAddress(set_tag(untagged)); }

  constexpr std::uint64_t raw() const { return raw_; }
  constexpr bool is_secret() const { return runtime::is_secret(raw_); }
  constexpr std::uint64_t untagged() const { return clear_tag(raw_); }
  constexpr bool operator==(const TaggedAddress &) const = default;

private:
  std::uint64_t raw_ = 0;
};

/// Logical-to-physical byte mapping of one secret allocation.
struct SegmentLayout {
  std::uint64_t original_base = 0;
  std::uint64_t shadow_base = 0;
  std::uint64_t logical_size = 0;

  std::uint64_t region_size() const { return vm::ceil_to_8(logical_size); }
  std::uint64_t physical(std::uint64_t offset) const {
    std::uint64_t segment = offset / 4;
    std::uint64_t slot = segment / 2;
    std::uint64_t base = (segment % 2 == 0) ? original_base : shadow_base;
    return base + slot * 8 + offset % 4;
  }
  /// 8-byte slot containing logical `offset`.
  std::uint64_t slot_of(std::uint64_t offset) const { return physical(offset) & ~std::uint64_t(7); }
};

enum class ErrorKind : std::uint8_t {
  OutOfSimulatedMemory,
  DoubleFree,
  NotSecretAllocation,
  UnregisteredAddress,
  InvalidSize,
  NoActiveFrame,
};

std::string_view error_kind_name(ErrorKind k);

class RuntimeError : public std::runtime_error {
public:
  RuntimeError(ErrorKind k, const std::string &msg);
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

enum class AllocKind : std::uint8_t { Heap, Stack, Global };

struct ShadowEntry {
  std::uint64_t shadow_base = 0;
  std::uint64_t size = 0; // logical bytes
  AllocKind kind = AllocKind::Heap;
};

/// Original base (untagged) -> shadow region, with a frame stack for
/// stack-allocated secrets.
class ShadowMap {
public:
  void add(std::uint64_t original_base, ShadowEntry e, bool in_frame);
  void erase(std::uint64_t original_base);
  /// Entry whose original region contains `addr` (interior pointers allowed).
  std::optional<std::pair<std::uint64_t, ShadowEntry>> find(std::uint64_t addr) const;
  bool contains_base(std::uint64_t base) const { return entries_.count(base) != 0; }

  void push_frame() { frames_.emplace_back(); }
  /// Removes and returns the entries registered in the innermost frame.
  std::vector<std::pair<std::uint64_t, ShadowEntry>> pop_frame();
  std::size_t frame_depth() const { return frames_.size(); }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::uint64_t, ShadowEntry> &entries() const { return entries_; }

private:
  std::map<std::uint64_t, ShadowEntry> entries_;
  std::vector<std::vector<std::uint64_t>> frames_;
};

class Runtime {
public:
  Runtime(vm::AddressSpace &space, Prefix prefix);

  Prefix prefix() const { return prefix_; }
  const ShadowMap &shadow_map() const { return shadow_; }

  TaggedAddress secret_malloc(std::uint64_t size);
  void secret_free(TaggedAddress a);
  /// Registers an already-reserved stack block in the innermost frame.
  TaggedAddress secret_alloca(std::uint64_t stack_addr, std::uint64_t size);
  /// Converts a plain global in place and returns its tagged address.
  TaggedAddress bind_global(std::uint64_t base, std::uint64_t size);
  void frame_push();
  void frame_pop();

  /// shadow_base + slot offset of (addr + offset) within its allocation.
  std::uint64_t shadow_addr(std::uint64_t untagged, std::uint64_t offset) const;
  SegmentLayout layout_of(std::uint64_t untagged) const;
  /// Physical location of logical byte `untagged`.
  std::uint64_t physical_address(std::uint64_t untagged) const;

  /// Writes logical bytes at a tagged address. Data bytes become tainted.
  /// Returns the physical slots touched, each exactly once.
  std::vector<std::uint64_t> store(TaggedAddress a, std::span<const std::uint8_t> bytes,
                                   bool tainted = true);
  /// Reads logical bytes; returns true when any of them is tainted.
  bool load(TaggedAddress a, std::span<std::uint8_t> out) const;

  std::vector<std::uint8_t> declassify_region(TaggedAddress a, std::uint64_t n) const;
  std::vector<std::uint64_t> classify_region(std::span<const std::uint8_t> buf, TaggedAddress a);

  std::uint64_t secret_logical_bytes() const { return logical_bytes_; }
  std::uint64_t secret_physical_bytes() const { return physical_bytes_; }
  std::uint64_t peak_secret_logical_bytes() const { return peak_logical_; }
  std::uint64_t peak_secret_physical_bytes() const { return peak_physical_; }

private:
  vm::AddressSpace &space_;
  Prefix prefix_;
  ShadowMap shadow_;
  std::map<std::uint64_t, std::uint64_t> freed_; // heap base -> size
  std::uint64_t logical_bytes_ = 0;
  std::uint64_t physical_bytes_ = 0;
  std::uint64_t peak_logical_ = 0;
  std::uint64_t peak_physical_ = 0;

  void init_prefix(std::uint64_t base, std::uint64_t region_size);
  void account(std::int64_t logical, std::int64_t physical);
  std::uint64_t allocate_shadow(std::uint64_t size);
  SegmentLayout checked_layout(std::uint64_t untagged, std::uint64_t len) const;
};

} // namespace splitsec::runtime
