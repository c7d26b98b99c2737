//===-- commands.cpp - transform, run, audit and diff commands ------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/cli.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

namespace splitsec::cli {

runtime::Prefix resolve_prefix(const std::optional<std::string> &flag) {
  if (flag)
    return runtime::Prefix::parse(*flag);
  if (const char *env = std::getenv("SS_PREFIX"); env && *env)
    return runtime::Prefix::parse(env);
  return runtime::Prefix();
}

std::vector<std::uint8_t> parse_hex_bytes(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X"))
    hex.remove_prefix(2);
  if (hex.size() % 2 != 0)
    throw std::invalid_argument("hex argument has an odd number of digits");
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9')
      return c - '0';
    if (c >= 'a' && c <= 'f')
      return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
      return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw std::invalid_argument("bad hex digit in argument bytes");
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (std::uint8_t b : bytes)
    os << std::setw(2) << unsigned(b);
  return os.str();
}

namespace {

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

bool write_file(const std::string &path, const std::string &text, std::ostream &err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  f << text;
  return bool(f);
}

std::optional<std::vector<std::uint8_t>> args_for(const ir::Program &p, const std::string &hex,
                                                  std::ostream &err) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = parse_hex_bytes(hex);
  } catch (const std::invalid_argument &e) {
    err << "error: --args: " << e.what() << "\n";
    return std::nullopt;
  }
  std::size_t need = vm::entry_arg_bytes(p);
  if (bytes.size() != need) {
    err << "error: --args: entry @" << p.entry << " takes " << need << " bytes, got "
        << bytes.size() << "\n";
    return std::nullopt;
  }
  return bytes;
}

int fault_exit(const vm::ExecTrace &t) {
  if (!t.fault)
    return kExitOk;
  return t.fault->kind == vm::FaultKind::StepLimit ? kExitStepLimit : kExitFault;
}

} // namespace

std::optional<ir::Program> load_program(const std::string &path, std::ostream &err) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  ir::Program p;
  try {
    p = ir::parse_program(ss.str());
  } catch (const ir::ParseError &e) {
    for (const auto &d : e.diagnostics())
      err << path << ":" << d.to_string() << "\n";
    return std::nullopt;
  }
  if (auto diags = ir::validate(p); !diags.empty()) {
    for (const auto &d : diags)
      err << path << ":" << d.to_string() << "\n";
    return std::nullopt;
  }
  return p;
}

int cmd_transform(const TransformArgs &a, std::ostream &out, std::ostream &err) {
  auto mode = transform::parse_mode(a.policy);
  if (!mode) {
    err << "error: unknown policy '" << a.policy << "' (none, annotated, all_secret)\n";
    return kExitUsage;
  }
  transform::Policy policy;
  policy.mode = *mode;
  policy.globals_secret = a.globals_secret;
  try {
    policy.prefix = resolve_prefix(a.prefix);
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  auto p = load_program(a.input, err);
  if (!p)
    return kExitUsage;
  std::string text;
  try {
    text = ir::print_program(transform::transform_program(*p, policy));
  } catch (const transform::TransformError &e) {
    err << a.input << ": " << e.what() << "\n";
    return kExitUsage;
  }
  if (a.output.empty() || a.output == "-") {
    out << text;
    return kExitOk;
  }
  return write_file(a.output, text, err) ? kExitOk : kExitUsage;
}

int cmd_run(const RunArgs &a, std::ostream &out, std::ostream &err) {
  auto p = load_program(a.input, err);
  if (!p)
    return kExitUsage;
  auto args = args_for(*p, a.args_hex, err);
  if (!args)
    return kExitUsage;
  vm::RunOptions opts;
  opts.step_limit = a.step_limit;
  opts.audit.mode = vm::AuditMode::None;
  opts.record_stores = false;
  vm::ExecTrace t;
  try {
    t = vm::run(*p, *args, opts);
  } catch (const vm::ArgumentError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  out << "out: " << to_hex(t.out) << "\n";
  if (t.exit)
    out << "exit: " << u128_string(*t.exit) << "\n";
  out << "icount: " << t.icount << "\n";
  if (t.fault)
    err << "fault: " << vm::fault_kind_name(t.fault->kind) << ": " << t.fault->message << "\n";
  if (!a.trace_path.empty() && !write_file(a.trace_path, vm::trace_to_json(t) + "\n", err))
    return kExitUsage;
  return fault_exit(t);
}

AuditResult audit_program(const ir::Program &p, std::span<const std::uint8_t> args,
                          const std::vector<dmp::DmpMode> &modes, unsigned window_bits,
                          vm::AuditPolicy policy) {
  AuditResult res;
  res.report.mode = modes.size() == 1 ? std::string(dmp::mode_name(modes[0])) : "both";
  std::set<std::tuple<std::uint64_t, std::uint64_t, int>> seen;
  vm::RunOptions opts;
  opts.audit = policy;
  opts.on_audit = [&](const vm::MemoryImage &m, const vm::AuditPoint &) {
    for (dmp::DmpMode mode : modes) {
      dmp::DmpReport r = dmp::scan(m, dmp::DmpConfig{mode, window_bits});
      res.report.scanned += r.scanned;
      for (const auto &f : r.findings) {
        auto key = std::make_tuple(f.addr, f.value, int(f.mode));
        if (seen.insert(key).second)
          res.report.findings.push_back(f);
      }
    }
  };
  vm::ExecTrace t = vm::run(p, args, opts);
  res.stores = dmp::audit_stores(t);
  res.audit_points = t.audit_points.size();
  res.fault = t.fault;
  return res;
}

int cmd_audit(const AuditArgs &a, std::ostream &out, std::ostream &err) {
  std::vector<dmp::DmpMode> modes;
  if (a.mode == "both") {
    modes = {dmp::DmpMode::Heuristic, dmp::DmpMode::Aggressive};
  } else if (auto m = dmp::parse_mode(a.mode)) {
    modes = {*m};
  } else {
    err << "error: unknown mode '" << a.mode << "' (heuristic, aggressive, both)\n";
    return kExitUsage;
  }
  auto p = load_program(a.input, err);
  if (!p)
    return kExitUsage;
  std::string hex = a.args_hex;
  if (hex.empty())
    hex = std::string(2 * vm::entry_arg_bytes(*p), '0');
  auto args = args_for(*p, hex, err);
  if (!args)
    return kExitUsage;
  vm::AuditPolicy policy;
  if (a.every_n > 0)
    policy = vm::AuditPolicy{vm::AuditMode::EveryN, a.every_n};
  AuditResult res;
  try {
    res = audit_program(*p, *args, modes, a.window_bits, policy);
  } catch (const vm::ArgumentError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto j = nlohmann::ordered_json::parse(dmp::report_to_json(res.report));
  j["audit_points"] = res.audit_points;
  j["store_audit"] = {{"instrumented_split", res.stores.instrumented_split},
                      {"plain_nonsecret", res.stores.plain_nonsecret},
                      {"violations", res.stores.violations.size()}};
  if (res.fault)
    j["fault"] = {{"kind", std::string(vm::fault_kind_name(res.fault->kind))},
                  {"message", res.fault->message}};
  std::string text = j.dump(2) + "\n";
  if (a.report_path.empty() || a.report_path == "-")
    out << text;
  else if (!write_file(a.report_path, text, err))
    return kExitUsage;

  std::size_t tainted = res.report.tainted_count();
  if (tainted == 0 && res.fault)
    return kExitFault;
  return audit_exit_code(tainted);
}

int cmd_diff(const DiffArgs &a, std::ostream &out, std::ostream &err) {
  auto left = load_program(a.left, err);
  if (!left)
    return kExitUsage;
  std::vector<std::pair<std::string, ir::Program>> variants;
  if (a.right.empty()) {
    for (transform::Mode m :
         {transform::Mode::None, transform::Mode::Annotated, transform::Mode::AllSecret}) {
      transform::Policy pol;
      pol.mode = m;
      try {
        pol.prefix = resolve_prefix(std::nullopt);
        variants.emplace_back(std::string(transform::mode_name(m)),
                              transform::transform_program(*left, pol));
      } catch (const std::exception &e) {
        err << a.left << ": " << e.what() << "\n";
        return kExitUsage;
      }
    }
  } else {
    auto right = load_program(a.right, err);
    if (!right)
      return kExitUsage;
    variants.emplace_back(a.left, *left);
    variants.emplace_back(a.right, *right);
  }

  std::string hex = a.args_hex;
  if (hex.empty())
    hex = std::string(2 * vm::entry_arg_bytes(variants.front().second), '0');
  auto args = args_for(variants.front().second, hex, err);
  if (!args)
    return kExitUsage;
  std::vector<vm::ExecTrace> traces;
  for (const auto &[name, prog] : variants) {
    vm::RunOptions opts;
    opts.audit.mode = vm::AuditMode::None;
    opts.record_stores = false;
    try {
      traces.push_back(vm::run(prog, *args, opts));
    } catch (const vm::ArgumentError &e) {
      err << name << ": " << e.what() << "\n";
      return kExitUsage;
    }
  }
  bool same = true;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto &t = traces[i];
    out << variants[i].first << ": out=" << to_hex(t.out)
        << " exit=" << (t.exit ? u128_string(*t.exit) : "-");
    if (t.fault)
      out << " fault=" << vm::fault_kind_name(t.fault->kind);
    out << " icount=" << t.icount << "\n";
    const auto &b = traces.front();
    if (t.out != b.out || t.exit != b.exit || t.fault.has_value() != b.fault.has_value())
      same = false;
  }
  out << (same ? "match" : "MISMATCH") << "\n";
  for (const auto &t : traces)
    if (t.fault && same)
      return kExitFault;
  return same ? kExitOk : kExitMismatch;
}

} // namespace splitsec::cli
