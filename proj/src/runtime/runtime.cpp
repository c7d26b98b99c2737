//===-- runtime.cpp - Split-and-prefix secret memory runtime --------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/runtime.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace splitsec::runtime {

namespace {
std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}
} // namespace

Prefix::Prefix(std::uint32_t value) : value_(value) {
  if ((value >> 16) == 0)
    throw std::invalid_argument("prefix " + hex(value) +
                                " leaves bits 48..63 of a prefixed word zero (canonical)");
}

Prefix Prefix::parse(std::string_view text) {
  std::string s(text);
  if (s.starts_with("0x") || s.starts_with("0X"))
    s = s.substr(2);
  if (s.empty() || s.size() > 8 ||
      s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw std::invalid_argument("bad prefix '" + std::string(text) + "'");
  return Prefix(static_cast<std::uint32_t>(std::stoul(s, nullptr, 16)));
}

std::string_view error_kind_name(ErrorKind k) {
  switch (k) {
  case ErrorKind::OutOfSimulatedMemory: return "OutOfSimulatedMemory";
  case ErrorKind::DoubleFree: return "DoubleFree";
  case ErrorKind::NotSecretAllocation: return "NotSecretAllocation";
  case ErrorKind::UnregisteredAddress: return "UnregisteredAddress";
  case ErrorKind::InvalidSize: return "InvalidSize";
  case ErrorKind::NoActiveFrame: return "NoActiveFrame";
  }
  return "?";
}

RuntimeError::RuntimeError(ErrorKind k, const std::string &msg)
    : std::runtime_error(std::string(error_kind_name(k)) + ": " + msg), kind_(k) {}

//===----------------------------------------------------------------------===//
// ShadowMap
//===----------------------------------------------------------------------===//

void ShadowMap::add(std::uint64_t original_base, ShadowEntry e, bool in_frame) {
  entries_[original_base] = e;
  if (in_frame) {
    if (frames_.empty())
      throw RuntimeError(ErrorKind::NoActiveFrame, "secret stack allocation outside a frame");
    frames_.back().push_back(original_base);
  }
}

void ShadowMap::erase(std::uint64_t original_base) { entries_.erase(original_base); }

std::optional<std::pair<std::uint64_t, ShadowEntry>> ShadowMap::find(std::uint64_t addr) const {
  auto it = entries_.upper_bound(addr);
  if (it == entries_.begin())
    return std::nullopt;
  --it;
  if (addr >= it->first + vm::ceil_to_8(it->second.size))
    return std::nullopt;
  return *it;
}

std::vector<std::pair<std::uint64_t, ShadowEntry>> ShadowMap::pop_frame() {
  if (frames_.empty())
    throw RuntimeError(ErrorKind::NoActiveFrame, "frame pop without matching push");
  std::vector<std::pair<std::uint64_t, ShadowEntry>> out;
  for (std::uint64_t base : frames_.back()) {
    auto it = entries_.find(base);
    if (it != entries_.end()) {
      out.push_back(*it);
      entries_.erase(it);
    }
  }
  frames_.pop_back();
  return out;
}

//===----------------------------------------------------------------------===//
// Runtime
//===----------------------------------------------------------------------===//

Runtime::Runtime(vm::AddressSpace &space, Prefix prefix) : space_(space), prefix_(prefix) {}

void Runtime::account(std::int64_t logical, std::int64_t physical) {
  logical_bytes_ += logical;
  physical_bytes_ += physical;
  peak_logical_ = std::max(peak_logical_, logical_bytes_);
  peak_physical_ = std::max(peak_physical_, physical_bytes_);
}

void Runtime::init_prefix(std::uint64_t base, std::uint64_t region_size) {
  std::uint8_t pfx[4];
  for (int i = 0; i < 4; ++i)
    pfx[i] = static_cast<std::uint8_t>(prefix_.value() >> (8 * i));
  for (std::uint64_t slot = base; slot < base + region_size; slot += 8) {
    for (int i = 0; i < 4; ++i)
      space_.mem.write_byte(slot + i, 0, false);
    space_.mem.write(slot + 4, pfx, false);
  }
}

std::uint64_t Runtime::allocate_shadow(std::uint64_t size) {
  try {
    return space_.shadow.allocate(space_.mem, size);
  } catch (const vm::MemoryError &e) {
    throw RuntimeError(ErrorKind::OutOfSimulatedMemory, e.what());
  }
}

TaggedAddress Runtime::secret_malloc(std::uint64_t size) {
  if (size == 0)
    throw RuntimeError(ErrorKind::InvalidSize, "secret_malloc(0)");
  if (size > vm::kArenaLimit)
    throw RuntimeError(ErrorKind::OutOfSimulatedMemory, "secret_malloc(" + std::to_string(size) + ")");
  std::uint64_t region = vm::ceil_to_8(size);
  std::uint64_t orig;
  try {
    orig = space_.heap.allocate(space_.mem, region);
  } catch (const vm::MemoryError &e) {
    throw RuntimeError(ErrorKind::OutOfSimulatedMemory, e.what());
  }
  std::uint64_t shadow = allocate_shadow(region);
  init_prefix(orig, region);
  init_prefix(shadow, region);
  shadow_.add(orig, ShadowEntry{shadow, size, AllocKind::Heap}, false);
  account(std::int64_t(size), std::int64_t(2 * region));
  return TaggedAddress::tag(orig);
}

void Runtime::secret_free(TaggedAddress a) {
  if (!a.is_secret())
    throw RuntimeError(ErrorKind::NotSecretAllocation,
                       "secret_free of untagged address " + hex(a.raw()));
  std::uint64_t base = a.untagged();
  if (freed_.count(base))
    throw RuntimeError(ErrorKind::DoubleFree, "secret_free of " + hex(a.raw()) + " twice");
  auto it = shadow_.entries().find(base);
  if (it == shadow_.entries().end() || it->second.kind != AllocKind::Heap)
    throw RuntimeError(ErrorKind::NotSecretAllocation,
                       hex(a.raw()) + " was not returned by secret_malloc");
  ShadowEntry e = it->second;
  std::uint64_t region = vm::ceil_to_8(e.size);
  space_.heap.release(space_.mem, base);
  space_.shadow.release(space_.mem, e.shadow_base);
  shadow_.erase(base);
  freed_[base] = e.size;
  account(-std::int64_t(e.size), -std::int64_t(2 * region));
}

TaggedAddress Runtime::secret_alloca(std::uint64_t stack_addr, std::uint64_t size) {
  if (size == 0)
    throw RuntimeError(ErrorKind::InvalidSize, "secret_alloca of 0 bytes");
  if (shadow_.frame_depth() == 0)
    throw RuntimeError(ErrorKind::NoActiveFrame, "secret stack allocation outside a frame");
  std::uint64_t region = vm::ceil_to_8(size);
  std::uint64_t shadow = allocate_shadow(region);
  init_prefix(stack_addr, region);
  init_prefix(shadow, region);
  shadow_.add(stack_addr, ShadowEntry{shadow, size, AllocKind::Stack}, true);
  account(std::int64_t(size), std::int64_t(2 * region));
  return TaggedAddress::tag(stack_addr);
}

TaggedAddress Runtime::bind_global(std::uint64_t base, std::uint64_t size) {
  if (size == 0)
    throw RuntimeError(ErrorKind::InvalidSize, "global of 0 bytes");
  std::uint64_t region = vm::ceil_to_8(size);
  std::vector<std::uint8_t> plain(size);
  space_.mem.read(base, plain);
  bool tainted = space_.mem.any_tainted(base, size);
  std::uint64_t shadow = allocate_shadow(region);
  space_.mem.scrub(base, region);
  init_prefix(base, region);
  init_prefix(shadow, region);
  shadow_.add(base, ShadowEntry{shadow, size, AllocKind::Global}, false);
  account(std::int64_t(size), std::int64_t(2 * region));
  TaggedAddress tagged = TaggedAddress::tag(base);
  store(tagged, plain, tainted);
  return tagged;
}

void Runtime::frame_push() { shadow_.push_frame(); }

void Runtime::frame_pop() {
  for (const auto &[base, e] : shadow_.pop_frame()) {
    space_.shadow.release(space_.mem, e.shadow_base);
    account(-std::int64_t(e.size), -std::int64_t(2 * vm::ceil_to_8(e.size)));
  }
}

SegmentLayout Runtime::layout_of(std::uint64_t untagged) const {
  auto hit = shadow_.find(untagged);
  if (!hit)
    throw RuntimeError(ErrorKind::UnregisteredAddress,
                       hex(untagged) + " is not inside a secret allocation");
  return SegmentLayout{hit->first, hit->second.shadow_base, hit->second.size};
}

SegmentLayout Runtime::checked_layout(std::uint64_t untagged, std::uint64_t len) const {
  SegmentLayout l = layout_of(untagged);
  if (len > 0 && untagged + len > l.original_base + l.region_size())
    throw RuntimeError(ErrorKind::UnregisteredAddress,
                       "access of " + std::to_string(len) + " bytes at " + hex(untagged) +
                           " runs past its secret allocation");
  return l;
}

std::uint64_t Runtime::shadow_addr(std::uint64_t untagged, std::uint64_t offset) const {
  SegmentLayout l = layout_of(untagged);
  std::uint64_t rel = untagged + offset - l.original_base;
  return l.shadow_base + (rel & ~std::uint64_t(7));
}

std::uint64_t Runtime::physical_address(std::uint64_t untagged) const {
  SegmentLayout l = checked_layout(untagged, 1);
  return l.physical(untagged - l.original_base);
}

std::vector<std::uint64_t> Runtime::store(TaggedAddress a, std::span<const std::uint8_t> bytes,
                                          bool tainted) {
  std::uint64_t addr = a.untagged();
  SegmentLayout l = checked_layout(addr, bytes.size());
  std::vector<std::uint64_t> slots;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::uint64_t off = addr - l.original_base + i;
    space_.mem.write_byte(l.physical(off), bytes[i], tainted);
    std::uint64_t slot = l.slot_of(off);
    if (std::find(slots.begin(), slots.end(), slot) == slots.end())
      slots.push_back(slot);
  }
  return slots;
}

bool Runtime::load(TaggedAddress a, std::span<std::uint8_t> out) const {
  std::uint64_t addr = a.untagged();
  SegmentLayout l = checked_layout(addr, out.size());
  bool tainted = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t phys = l.physical(addr - l.original_base + i);
    out[i] = space_.mem.read_byte(phys);
    tainted = tainted || space_.mem.is_tainted(phys);
  }
  return tainted;
}

std::vector<std::uint8_t> Runtime::declassify_region(TaggedAddress a, std::uint64_t n) const {
  std::vector<std::uint8_t> out(n);
  load(a, out);
  return out;
}

std::vector<std::uint64_t> Runtime::classify_region(std::span<const std::uint8_t> buf,
                                                    TaggedAddress a) {
  return store(a, buf, true);
}

} // namespace splitsec::runtime
