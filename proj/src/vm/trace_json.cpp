//===-- trace_json.cpp - ExecTrace serialization --------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/vm.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace splitsec::vm {

namespace {

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (std::uint8_t b : bytes)
    os << std::setw(2) << unsigned(b);
  return os.str();
}

std::string u128_string(ir::u128 v) {
  if (v == 0)
    return "0";
  std::string s;
  while (v != 0) {
    s.insert(s.begin(), char('0' + unsigned(v % 10)));
    v /= 10;
  }
  return s;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

} // namespace

std::string trace_to_json(const ExecTrace &t, int indent) {
  nlohmann::ordered_json j;
  j["icount"] = t.icount;
  j["steps"] = t.steps;
  j["icount_by_opcode"] = nlohmann::ordered_json::object();
  for (const auto &[k, v] : t.icount_by_opcode)
    j["icount_by_opcode"][k] = v;

  nlohmann::ordered_json faults = nlohmann::ordered_json::array();
  if (t.fault) {
    nlohmann::ordered_json f;
    f["kind"] = std::string(fault_kind_name(t.fault->kind));
    f["message"] = t.fault->message;
    if (!t.fault->function.empty()) {
      f["function"] = t.fault->function;
      f["block"] = t.fault->block;
      f["index"] = t.fault->index;
    }
    faults.push_back(std::move(f));
  }
  j["faults"] = std::move(faults);
  j["out_hex"] = to_hex(t.out);
  // Exit values may be 128 bits wide, so they are emitted as decimal strings.
  j["exit"] = t.exit ? nlohmann::ordered_json(u128_string(*t.exit)) : nlohmann::ordered_json();

  j["prefix"] = "0x" + hex64(t.prefix).substr(10);
  j["audit_points"] = t.audit_points.size();
  j["stores"] = t.stores.size();
  j["uninit_reads"] = t.uninit_reads;
  j["peak_mapped_bytes"] = t.peak_mapped_bytes;
  j["peak_secret_logical_bytes"] = t.peak_secret_logical_bytes;
  j["peak_secret_physical_bytes"] = t.peak_secret_physical_bytes;
  nlohmann::ordered_json globals = nlohmann::ordered_json::object();
  for (const auto &[name, addr] : t.global_addresses)
    globals[name] = hex64(addr);
  j["globals"] = std::move(globals);
  if (!t.warnings.empty())
    j["warnings"] = t.warnings;
  return j.dump(indent);
}

} // namespace splitsec::vm
