//===-- dmp.cpp - Prefetcher oracle and store-coverage audit --------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/dmp.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace splitsec::dmp {

namespace {
std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

constexpr unsigned level_shift(unsigned k) { return 48 - kBitsPerLevel * k; }
} // namespace

std::string_view mode_name(DmpMode m) {
  return m == DmpMode::Heuristic ? "heuristic" : "aggressive";
}

std::optional<DmpMode> parse_mode(std::string_view s) {
  if (s == "heuristic")
    return DmpMode::Heuristic;
  if (s == "aggressive")
    return DmpMode::Aggressive;
  return std::nullopt;
}

PageWalker::PageWalker(const vm::MemoryImage &m) {
  for (std::uint64_t page : m.mapped_pages()) {
    std::uint64_t va = page * vm::kPageSize;
    for (unsigned k = 1; k <= kLevels; ++k)
      prefixes_[k - 1].insert(va >> level_shift(k));
  }
}

unsigned PageWalker::depth(std::uint64_t v) const {
  if (!vm::is_canonical(v))
    return 0;
  unsigned d = 0;
  for (unsigned k = 1; k <= kLevels; ++k) {
    if (!prefixes_[k - 1].count(v >> level_shift(k)))
      break;
    d = k;
  }
  return d;
}

unsigned page_walk(std::uint64_t v, const vm::MemoryImage &m) { return PageWalker(m).depth(v); }

bool is_prefetch_candidate(std::uint64_t addr, std::uint64_t v, const DmpConfig &cfg,
                           const PageWalker &walker) {
  if (cfg.mode == DmpMode::Heuristic) {
    unsigned w = std::min(cfg.window_bits, 63u);
    if ((v >> w) != (addr >> w))
      return false;
  }
  return walker.depth(v) >= 1;
}

bool is_prefetch_candidate(std::uint64_t addr, std::uint64_t v, const DmpConfig &cfg,
                           const vm::MemoryImage &m) {
  return is_prefetch_candidate(addr, v, cfg, PageWalker(m));
}

std::size_t DmpReport::tainted_count() const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [](const Finding &f) { return f.tainted; }));
}

DmpReport scan(const vm::MemoryImage &m, const DmpConfig &cfg) {
  DmpReport r;
  r.mode = std::string(mode_name(cfg.mode));
  PageWalker walker(m);
  for (const auto &[base, region] : m.regions()) {
    std::uint64_t first = (base + 7) & ~std::uint64_t(7);
    for (std::uint64_t a = first; a + 8 <= region.end(); a += 8) {
      ++r.scanned;
      std::uint64_t v = m.read_word(a);
      if (!is_prefetch_candidate(a, v, cfg, walker))
        continue;
      r.findings.push_back(Finding{a, v, walker.depth(v), cfg.mode, m.any_tainted(a, 8)});
    }
  }
  return r;
}

DmpReport scan(const vm::MemoryImage &m, DmpMode mode) { return scan(m, DmpConfig{mode, 32}); }

std::string report_to_json(const DmpReport &r, int indent) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["scanned"] = r.scanned;
  j["tainted"] = r.tainted_count();
  nlohmann::ordered_json fs = nlohmann::ordered_json::array();
  for (const Finding &f : r.findings) {
    nlohmann::ordered_json o;
    o["addr"] = hex64(f.addr);
    o["value"] = hex64(f.value);
    o["walk_depth"] = f.walk_depth;
    o["mode"] = std::string(mode_name(f.mode));
    o["tainted"] = f.tainted;
    fs.push_back(std::move(o));
  }
  j["findings"] = std::move(fs);
  return j.dump(indent);
}

StoreClass classify_store(const vm::StoreEvent &ev, std::uint32_t prefix, std::string *reason) {
  auto why = [&](std::string s) {
    if (reason)
      *reason = std::move(s);
    return StoreClass::Violation;
  };
  if (ev.kind == vm::StoreKind::Split) {
    if (ev.slots.empty())
      return why("split store touched no slots");
    for (const auto &[slot, word] : ev.slots)
      if (static_cast<std::uint32_t>(word >> 32) != prefix)
        return why("slot " + hex64(slot) + " holds " + hex64(word) + " without the prefix");
    return StoreClass::InstrumentedSplit;
  }
  if (ev.tainted)
    return why("plain store of secret-derived data");
  if (ev.secret_target)
    return why("plain store into a secret region");
  return StoreClass::PlainNonSecret;
}

StoreAudit audit_stores(const vm::ExecTrace &trace) {
  StoreAudit a;
  for (std::size_t i = 0; i < trace.stores.size(); ++i) {
    const vm::StoreEvent &ev = trace.stores[i];
    std::string reason;
    switch (classify_store(ev, trace.prefix, &reason)) {
    case StoreClass::InstrumentedSplit: ++a.instrumented_split; break;
    case StoreClass::PlainNonSecret: ++a.plain_nonsecret; break;
    case StoreClass::Violation:
      a.violations.push_back(StoreViolation{i, ev.origin, ev.addr, reason});
      break;
    }
  }
  return a;
}

} // namespace splitsec::dmp
