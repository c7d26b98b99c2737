//===-- bench.cpp - Instruction-count and memory overhead table -----------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace splitsec::cli {

std::vector<std::uint8_t> bench_args(const ir::Program &p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> out(vm::entry_arg_bytes(p));
  for (auto &b : out)
    b = static_cast<std::uint8_t>(rng());
  return out;
}

std::vector<BenchRow> bench_program(const std::string &name, const ir::Program &p,
                                    const std::vector<transform::Mode> &policies,
                                    const runtime::Prefix &prefix, unsigned repeat,
                                    std::ostream &err) {
  std::vector<transform::Mode> modes{transform::Mode::None};
  for (transform::Mode m : policies)
    if (std::find(modes.begin(), modes.end(), m) == modes.end())
      modes.push_back(m);

  auto args = bench_args(p);
  std::vector<BenchRow> rows;
  for (transform::Mode m : modes) {
    transform::Policy pol;
    pol.mode = m;
    pol.prefix = prefix;
    ir::Program tp = transform::transform_program(p, pol);
    vm::RunOptions opts;
    opts.audit.mode = vm::AuditMode::None;
    opts.record_stores = false;
    vm::ExecTrace t = vm::run(tp, args, opts);
    for (unsigned r = 1; r < repeat; ++r) {
      vm::ExecTrace again = vm::run(tp, args, opts);
      if (again.icount != t.icount || again.out != t.out)
        err << "warning: " << name << " (" << transform::mode_name(m)
            << ") is not deterministic across repeats\n";
    }
    if (t.fault)
      err << "warning: " << name << " (" << transform::mode_name(m)
          << ") faulted: " << t.fault->message << "\n";
    BenchRow row;
    row.program = name;
    row.policy = std::string(transform::mode_name(m));
    row.icount = t.icount;
    row.peak_mapped_bytes = t.peak_mapped_bytes;
    row.secret_logical_bytes = t.peak_secret_logical_bytes;
    row.secret_physical_bytes = t.peak_secret_physical_bytes;
    row.secret_mem_ratio = t.peak_secret_logical_bytes == 0
                               ? 0.0
                               : double(t.peak_secret_physical_bytes) /
                                     double(t.peak_secret_logical_bytes);
    rows.push_back(row);
  }
  const BenchRow base = rows.front();
  for (auto &r : rows) {
    r.icount_ratio = base.icount == 0 ? 0.0 : double(r.icount) / double(base.icount);
    r.mem_ratio =
        base.peak_mapped_bytes == 0 ? 0.0 : double(r.peak_mapped_bytes) / double(base.peak_mapped_bytes);
  }
  // Report only what was asked for, baseline included when requested.
  std::vector<BenchRow> out;
  for (transform::Mode m : policies)
    for (const auto &r : rows)
      if (r.policy == transform::mode_name(m))
        out.push_back(r);
  return out;
}

namespace {
std::string fixed(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}
} // namespace

std::string bench_csv(const std::vector<BenchRow> &rows) {
  std::ostringstream os;
  os << kBenchCsvHeader << "\n";
  for (const auto &r : rows)
    os << r.program << ',' << r.policy << ',' << r.icount << ',' << r.peak_mapped_bytes << ','
       << fixed(r.icount_ratio) << ',' << fixed(r.mem_ratio) << ',' << r.secret_logical_bytes
       << ',' << r.secret_physical_bytes << ',' << fixed(r.secret_mem_ratio) << "\n";
  return os.str();
}

std::string bench_json(const std::vector<BenchRow> &rows, int indent) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto &r : rows) {
    nlohmann::ordered_json o;
    o["program"] = r.program;
    o["policy"] = r.policy;
    o["icount"] = r.icount;
    o["peak_mapped_bytes"] = r.peak_mapped_bytes;
    o["icount_ratio"] = r.icount_ratio;
    o["mem_ratio"] = r.mem_ratio;
    o["secret_logical_bytes"] = r.secret_logical_bytes;
    o["secret_physical_bytes"] = r.secret_physical_bytes;
    o["secret_mem_ratio"] = r.secret_mem_ratio;
    arr.push_back(std::move(o));
  }
  return arr.dump(indent);
}

int cmd_bench(const BenchArgs &a, std::ostream &out, std::ostream &err) {
  namespace fs = std::filesystem;
  std::vector<transform::Mode> policies;
  for (const auto &s : a.policies) {
    auto m = transform::parse_mode(s);
    if (!m) {
      err << "error: unknown policy '" << s << "'\n";
      return kExitUsage;
    }
    policies.push_back(*m);
  }
  if (a.repeat == 0) {
    err << "error: --repeat must be at least 1\n";
    return kExitUsage;
  }
  runtime::Prefix prefix;
  try {
    prefix = resolve_prefix(a.prefix);
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::error_code ec;
  if (!fs::is_directory(a.corpus_dir, ec)) {
    err << "error: " << a.corpus_dir << " is not a directory\n";
    return kExitUsage;
  }
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(a.corpus_dir))
    if (e.is_regular_file() && e.path().extension() == ".ir")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<BenchRow> rows;
  for (const auto &f : files) {
    std::ostringstream diag;
    auto p = load_program(f.string(), diag);
    if (!p) {
      err << "warning: skipping " << f.filename().string() << "\n" << diag.str();
      continue;
    }
    try {
      auto r = bench_program(f.stem().string(), *p, policies, prefix, a.repeat, err);
      rows.insert(rows.end(), r.begin(), r.end());
    } catch (const std::exception &e) {
      err << "warning: skipping " << f.filename().string() << ": " << e.what() << "\n";
    }
  }

  std::string csv = bench_csv(rows);
  if (a.csv_path.empty() || a.csv_path == "-") {
    out << csv;
  } else {
    std::ofstream(a.csv_path) << csv;
  }
  if (!a.json_path.empty())
    std::ofstream(a.json_path) << bench_json(rows) << "\n";
  return kExitOk;
}

} // namespace splitsec::cli
