//===-- splitsec.cpp - Command-line driver --------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  using namespace splitsec::cli;

  CLI::App app{"Split-and-prefix secret layout toolchain"};
  app.require_subcommand(1);

  TransformArgs ta;
  std::string ta_prefix;
  auto *t = app.add_subcommand("transform", "Instrument an IR file");
  t->add_option("input", ta.input, "IR file")->required();
  t->add_option("-o,--output", ta.output, "Output path (default stdout)");
  t->add_option("--policy", ta.policy, "none | annotated | all_secret")->capture_default_str();
  t->add_option("--prefix", ta_prefix, "32-bit slot prefix in hex (default $SS_PREFIX or 0xdeadceef)");
  t->add_flag("--globals-secret", ta.globals_secret, "Treat every global as secret");

  RunArgs ra;
  auto *r = app.add_subcommand("run", "Execute an IR file");
  r->add_option("input", ra.input, "IR file")->required();
  r->add_option("--args", ra.args_hex, "Entry arguments as little-endian hex bytes");
  r->add_option("--trace", ra.trace_path, "Write the execution trace as JSON");
  r->add_option("--step-limit", ra.step_limit, "Maximum IR instructions")->capture_default_str();

  AuditArgs aa;
  auto *a = app.add_subcommand("audit", "Run and scan memory with the prefetcher oracle");
  a->add_option("input", aa.input, "IR file")->required();
  a->add_option("--mode", aa.mode, "heuristic | aggressive | both")->capture_default_str();
  a->add_option("--args", aa.args_hex, "Entry arguments as hex (default all zero)");
  a->add_option("--report", aa.report_path, "Write the JSON report here (default stdout)");
  a->add_option("--window-bits", aa.window_bits, "Heuristic locality window, log2 bytes")
      ->capture_default_str();
  a->add_option("--every", aa.every_n, "Audit every N instructions instead of every secret store");

  DiffArgs da;
  auto *d = app.add_subcommand("diff", "Compare outputs of two programs or of one across policies");
  d->add_option("left", da.left, "IR file")->required();
  d->add_option("right", da.right, "Second IR file (default: compare policies of left)");
  d->add_option("--args", da.args_hex, "Entry arguments as hex (default: all zero)");

  BenchArgs ba;
  std::string ba_prefix;
  auto *b = app.add_subcommand("bench", "Overhead table over a corpus directory");
  b->add_option("corpus", ba.corpus_dir, "Directory of .ir files")->required();
  b->add_option("--policies", ba.policies, "Policies to report")->delimiter(',');
  b->add_option("--repeat", ba.repeat, "Runs per case")->capture_default_str();
  b->add_option("--csv", ba.csv_path, "CSV output path (default stdout)");
  b->add_option("--json", ba.json_path, "JSON output path");
  b->add_option("--prefix", ba_prefix, "32-bit slot prefix in hex");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*t) {
    if (!ta_prefix.empty())
      ta.prefix = ta_prefix;
    return cmd_transform(ta, std::cout, std::cerr);
  }
  if (*r)
    return cmd_run(ra, std::cout, std::cerr);
  if (*a)
    return cmd_audit(aa, std::cout, std::cerr);
  if (*d)
    return cmd_diff(da, std::cout, std::cerr);
  if (*b) {
    if (!ba_prefix.empty())
      ba.prefix = ba_prefix;
    return cmd_bench(ba, std::cout, std::cerr);
  }
  return kExitUsage;
}
