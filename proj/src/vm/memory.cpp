//===-- memory.cpp - Sparse simulated address space -----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/memory.hpp"

#include <sstream>

namespace splitsec::vm {

static std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::string_view region_kind_name(RegionKind k) {
  switch (k) {
  case RegionKind::Global: return "global";
  case RegionKind::Stack: return "stack";
  case RegionKind::Heap: return "heap";
  case RegionKind::Shadow: return "shadow";
  }
  return "?";
}

void MemoryImage::map(std::uint64_t base, std::uint64_t size, RegionKind kind) {
  if (size == 0)
    throw MemoryError(MemoryError::Kind::OutOfMemory, "zero-sized mapping");
  if (!is_canonical(base) || !is_canonical(base + size - 1) || base + size < base)
    throw MemoryError(MemoryError::Kind::NonCanonical, "mapping at " + hex(base) +
                                                           " is not canonical");
  auto next = regions_.lower_bound(base);
  if (next != regions_.end() && next->first < base + size)
    throw MemoryError(MemoryError::Kind::Overlap, "mapping at " + hex(base) + " overlaps");
  if (next != regions_.begin() && std::prev(next)->second.end() > base)
    throw MemoryError(MemoryError::Kind::Overlap, "mapping at " + hex(base) + " overlaps");
  regions_.emplace(base, Region{base, size, kind});
  scrub(base, size);
  mapped_bytes_ += size;
  peak_mapped_bytes_ = std::max(peak_mapped_bytes_, mapped_bytes_);
}

void MemoryImage::unmap(std::uint64_t base) {
  auto it = regions_.find(base);
  if (it == regions_.end())
    throw MemoryError(MemoryError::Kind::NotMapped, "no mapping starts at " + hex(base));
  scrub(base, it->second.size);
  mapped_bytes_ -= it->second.size;
  regions_.erase(it);
  // Drop pages no longer covered by any region.
  for (auto p = pages_.begin(); p != pages_.end();) {
    std::uint64_t start = p->first * kPageSize;
    auto r = regions_.upper_bound(start + kPageSize - 1);
    bool used = r != regions_.begin() && std::prev(r)->second.end() > start;
    p = used ? std::next(p) : pages_.erase(p);
  }
}

void MemoryImage::grow(std::uint64_t base, std::uint64_t new_size) {
  auto it = regions_.find(base);
  if (it == regions_.end())
    throw MemoryError(MemoryError::Kind::NotMapped, "no mapping starts at " + hex(base));
  Region &r = it->second;
  if (new_size <= r.size)
    return;
  if (!is_canonical(base + new_size - 1))
    throw MemoryError(MemoryError::Kind::NonCanonical, "growth leaves canonical space");
  auto next = std::next(it);
  if (next != regions_.end() && next->first < base + new_size)
    throw MemoryError(MemoryError::Kind::Overlap, "growth of " + hex(base) + " overlaps");
  scrub(r.end(), new_size - r.size);
  mapped_bytes_ += new_size - r.size;
  peak_mapped_bytes_ = std::max(peak_mapped_bytes_, mapped_bytes_);
  r.size = new_size;
}

const Region *MemoryImage::region_containing(std::uint64_t addr) const {
  auto it = regions_.upper_bound(addr);
  if (it == regions_.begin())
    return nullptr;
  --it;
  return addr < it->second.end() ? &it->second : nullptr;
}

bool MemoryImage::is_mapped(std::uint64_t addr, std::uint64_t len) const {
  if (len == 0)
    return true;
  // Adjacent regions may together cover the span.
  std::uint64_t cur = addr, end = addr + len;
  if (end < addr)
    return false;
  while (cur < end) {
    const Region *r = region_containing(cur);
    if (!r)
      return false;
    cur = r->end();
  }
  return true;
}

std::set<std::uint64_t> MemoryImage::mapped_pages() const {
  std::set<std::uint64_t> out;
  for (const auto &[base, r] : regions_)
    for (std::uint64_t p = base / kPageSize; p <= (r.end() - 1) / kPageSize; ++p)
      out.insert(p);
  return out;
}

const MemoryImage::Page *MemoryImage::find_page(std::uint64_t addr) const {
  auto it = pages_.find(addr / kPageSize);
  return it == pages_.end() ? nullptr : &it->second;
}

MemoryImage::Page &MemoryImage::page_for(std::uint64_t addr) { return pages_[addr / kPageSize]; }

std::uint8_t MemoryImage::read_byte(std::uint64_t addr) const {
  const Page *p = find_page(addr);
  return p ? p->data[addr % kPageSize] : 0;
}

bool MemoryImage::is_tainted(std::uint64_t addr) const {
  const Page *p = find_page(addr);
  return p && p->taint[addr % kPageSize];
}

bool MemoryImage::is_initialized(std::uint64_t addr) const {
  const Page *p = find_page(addr);
  return p && p->init[addr % kPageSize];
}

void MemoryImage::write_byte(std::uint64_t addr, std::uint8_t value, bool tainted) {
  Page &p = page_for(addr);
  std::size_t off = addr % kPageSize;
  p.data[off] = value;
  p.taint[off] = tainted;
  p.init[off] = true;
}

void MemoryImage::read(std::uint64_t addr, std::span<std::uint8_t> out) const {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = read_byte(addr + i);
}

void MemoryImage::write(std::uint64_t addr, std::span<const std::uint8_t> bytes, bool tainted) {
  for (std::size_t i = 0; i < bytes.size(); ++i)
    write_byte(addr + i, bytes[i], tainted);
}

std::uint64_t MemoryImage::read_word(std::uint64_t addr) const {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | read_byte(addr + i);
  return v;
}

bool MemoryImage::any_tainted(std::uint64_t addr, std::uint64_t len) const {
  for (std::uint64_t i = 0; i < len; ++i)
    if (is_tainted(addr + i))
      return true;
  return false;
}

bool MemoryImage::all_initialized(std::uint64_t addr, std::uint64_t len) const {
  for (std::uint64_t i = 0; i < len; ++i)
    if (!is_initialized(addr + i))
      return false;
  return true;
}

void MemoryImage::scrub(std::uint64_t addr, std::uint64_t len) {
  for (std::uint64_t i = 0; i < len; ++i) {
    auto it = pages_.find((addr + i) / kPageSize);
    if (it == pages_.end()) {
      // Skip to the next page boundary.
      std::uint64_t next = ((addr + i) / kPageSize + 1) * kPageSize;
      i = next - addr - 1;
      continue;
    }
    std::size_t off = (addr + i) % kPageSize;
    it->second.data[off] = 0;
    it->second.taint[off] = false;
    it->second.init[off] = false;
  }
}

std::uint64_t BumpArena::allocate(MemoryImage &mem, std::uint64_t size) {
  std::uint64_t rounded = ceil_to_8(size == 0 ? 1 : size);
  if (next_ + rounded > base_ + limit_)
    throw MemoryError(MemoryError::Kind::OutOfMemory,
                      "simulated " + std::string(region_kind_name(kind_)) + " arena exhausted");
  std::uint64_t addr = next_;
  mem.map(addr, rounded, kind_);
  next_ += rounded;
  return addr;
}

void BumpArena::release(MemoryImage &mem, std::uint64_t addr) { mem.unmap(addr); }

std::uint64_t StackArena::push(MemoryImage &mem, std::uint64_t size) {
  std::uint64_t rounded = ceil_to_8(size == 0 ? 1 : size);
  if (sp_ + rounded > base_ + limit_)
    throw MemoryError(MemoryError::Kind::OutOfMemory, "simulated stack exhausted");
  std::uint64_t addr = sp_;
  sp_ += rounded;
  if (mapped_end_ == 0) {
    mem.map(base_, sp_ - base_, RegionKind::Stack);
    mapped_end_ = sp_;
  } else if (sp_ > mapped_end_) {
    mem.grow(base_, sp_ - base_);
    mapped_end_ = sp_;
  }
  mem.scrub(addr, rounded);
  return addr;
}

} // namespace splitsec::vm
