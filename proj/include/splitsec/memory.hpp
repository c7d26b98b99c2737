//===-- memory.hpp - Sparse simulated 48-bit address space ------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// MemoryImage keeps per-byte value, taint and "written" bits in 4 KiB pages,
// plus a byte-granular registry of mapped regions. Mapping is tracked per
// region rather than per page so that memory accounting is exact.
//
// Address-space layout used by the interpreter. Every region sits above
// 2^39, so the level-1 page-table index of each mapped page is nonzero and a
// small integer (including 0) never begins a page walk.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>

namespace splitsec::vm {

inline constexpr std::uint64_t kPageSize = 4096;
inline constexpr std::uint64_t kGlobalBase = 0x5555'0000'0000;
inline constexpr std::uint64_t kHeapBase = 0x6000'0000'0000;
inline constexpr std::uint64_t kShadowBase = 0x6800'0000'0000;
inline constexpr std::uint64_t kStackBase = 0x7ff0'0000'0000;
inline constexpr std::uint64_t kArenaLimit = 1ull << 30;

/// True when bits 48..63 are all zero.
constexpr bool is_canonical(std::uint64_t addr) { return (addr >> 48) == 0; }

enum class RegionKind : std::uint8_t { Global, Stack, Heap, Shadow };
std::string_view region_kind_name(RegionKind k);

struct Region {
  std::uint64_t base = 0;
  std::uint64_t size = 0;
  RegionKind kind = RegionKind::Heap;
  std::uint64_t end() const { return base + size; }
};

class MemoryError : public std::runtime_error {
public:
  enum class Kind : std::uint8_t { OutOfMemory, Overlap, NonCanonical, NotMapped };
  MemoryError(Kind k, const std::string &msg) : std::runtime_error(msg), kind_(k) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

class MemoryImage {
public:
  void map(std::uint64_t base, std::uint64_t size, RegionKind kind);
  /// Releases the region starting at `base` and scrubs its bytes.
  void unmap(std::uint64_t base);
  /// Grows the region starting at `base` to `new_size` bytes.
  void grow(std::uint64_t base, std::uint64_t new_size);

  bool is_mapped(std::uint64_t addr, std::uint64_t len) const;
  const Region *region_containing(std::uint64_t addr) const;
  const std::map<std::uint64_t, Region> &regions() const { return regions_; }
  /// Page numbers (address >> 12) touched by any mapped region.
  std::set<std::uint64_t> mapped_pages() const;

  std::uint64_t mapped_bytes() const { return mapped_bytes_; }
  std::uint64_t peak_mapped_bytes() const { return peak_mapped_bytes_; }

  // Raw byte access. Callers check mapping; unwritten bytes read as zero.
  std::uint8_t read_byte(std::uint64_t addr) const;
  bool is_tainted(std::uint64_t addr) const;
  bool is_initialized(std::uint64_t addr) const;
  void write_byte(std::uint64_t addr, std::uint8_t value, bool tainted);

  void read(std::uint64_t addr, std::span<std::uint8_t> out) const;
  void write(std::uint64_t addr, std::span<const std::uint8_t> bytes, bool tainted);
  /// Little-endian 64-bit word.
  std::uint64_t read_word(std::uint64_t addr) const;
  bool any_tainted(std::uint64_t addr, std::uint64_t len) const;
  bool all_initialized(std::uint64_t addr, std::uint64_t len) const;
  /// Zero, untaint and mark unwritten.
  void scrub(std::uint64_t addr, std::uint64_t len);

private:
  struct Page {
    std::array<std::uint8_t, kPageSize> data{};
    std::bitset<kPageSize> taint;
    std::bitset<kPageSize> init;
  };

  const Page *find_page(std::uint64_t addr) const;
  Page &page_for(std::uint64_t addr);

  std::map<std::uint64_t, Page> pages_;
  std::map<std::uint64_t, Region> regions_;
  std::uint64_t mapped_bytes_ = 0;
  std::uint64_t peak_mapped_bytes_ = 0;
};

/// Bump allocator over a fixed VA window. Addresses are never reused, so a
/// freed block stays unmapped for the rest of the run.
class BumpArena {
public:
  BumpArena(std::uint64_t base, std::uint64_t limit, RegionKind kind)
      : base_(base), next_(base), limit_(limit), kind_(kind) {}

  std::uint64_t allocate(MemoryImage &mem, std::uint64_t size);
  void release(MemoryImage &mem, std::uint64_t addr);
  std::uint64_t base() const { return base_; }

private:
  std::uint64_t base_;
  std::uint64_t next_;
  std::uint64_t limit_;
  RegionKind kind_;
};

/// Upward-growing stack. The mapped extent is the high-water mark; popping
/// a frame only moves the stack pointer.
class StackArena {
public:
  StackArena(std::uint64_t base, std::uint64_t limit) : base_(base), sp_(base), limit_(limit) {}

  /// Allocates 8-aligned, zeroed, unwritten stack bytes.
  std::uint64_t push(MemoryImage &mem, std::uint64_t size);
  std::uint64_t mark() const { return sp_; }
  void reset(std::uint64_t mark) { sp_ = mark; }

private:
  std::uint64_t base_;
  std::uint64_t sp_;
  std::uint64_t limit_;
  std::uint64_t mapped_end_ = 0;
};

struct AddressSpace {
  MemoryImage mem;
  BumpArena globals{kGlobalBase, kArenaLimit, RegionKind::Global};
  BumpArena heap{kHeapBase, kArenaLimit, RegionKind::Heap};
  BumpArena shadow{kShadowBase, kArenaLimit, RegionKind::Shadow};
  StackArena stack{kStackBase, kArenaLimit};
};

constexpr std::uint64_t ceil_to_8(std::uint64_t n) { return (n + 7) & ~std::uint64_t(7); }

} // namespace splitsec::vm
