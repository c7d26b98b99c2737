//===-- test_cli.cpp - Command behaviour and exit codes -------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "splitsec/cli.hpp"
#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <json.hpp>
#include <sys/wait.h>

using namespace splitsec;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "splitsec_test_cli";
  fs::create_directories(d);
  return d;
}

std::string corpus_file(const std::string &name) {
  return (testutil::corpus_dir() / (name + ".ir")).string();
}

// Transforms a corpus kernel into the scratch directory and returns the path.
std::string transformed_file(const std::string &name, const std::string &policy) {
  std::string path = (scratch() / (name + "." + policy + ".ir")).string();
  std::ostringstream out, err;
  cli::TransformArgs a;
  a.input = corpus_file(name);
  a.output = path;
  a.policy = policy;
  REQUIRE(cli::cmd_transform(a, out, err) == 0);
  return path;
}

std::string write_scratch(const std::string &name, const std::string &text) {
  std::string path = (scratch() / name).string();
  std::ofstream(path) << text;
  return path;
}

int shell(const std::string &cmd) {
  int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct EnvGuard {
  explicit EnvGuard(const char *v) {
    if (v)
      ::setenv("SS_PREFIX", v, 1);
    else
      ::unsetenv("SS_PREFIX");
  }
  ~EnvGuard() { ::unsetenv("SS_PREFIX"); }
};

} // namespace

TEST_CASE("transform output matches the golden file") {
  std::ostringstream out, err;
  cli::TransformArgs a;
  a.input = corpus_file("ctswap");
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitOk);
  CHECK(out.str() == testutil::read_file(testutil::golden_dir() / "ctswap.ss.ir"));
}

TEST_CASE("transform with policy none prints the canonical form") {
  std::ostringstream out, err;
  cli::TransformArgs a;
  a.input = corpus_file("arx");
  a.policy = "none";
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitOk);
  CHECK(out.str() == ir::print_program(testutil::corpus("arx")));
}

TEST_CASE("transform rejects bad prefixes, policies and inputs") {
  std::ostringstream out, err;
  cli::TransformArgs a;
  a.input = corpus_file("ctswap");
  a.prefix = "0x00000000";
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
  a.prefix = "0x0000ffff";
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
  a.prefix = "nothex";
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
  a.prefix.reset();
  a.policy = "paranoid";
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
  a.policy = "annotated";
  a.input = write_scratch("broken.ir", "fn main() {\nentry:\n  ret i64 %nope\n}\n");
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
  CHECK(err.str().find("%nope") != std::string::npos);
  a.input = transformed_file("ctswap", "annotated");
  CHECK(cli::cmd_transform(a, out, err) == cli::kExitUsage);
}

TEST_CASE("prefix resolution order") {
  {
    EnvGuard env(nullptr);
    CHECK(cli::resolve_prefix(std::nullopt).value() == runtime::kDefaultPrefix);
  }
  {
    EnvGuard env("0xcafef00d");
    CHECK(cli::resolve_prefix(std::nullopt).value() == 0xcafef00d);
    CHECK(cli::resolve_prefix(std::string("0xfeed0001")).value() == 0xfeed0001);
  }
  {
    EnvGuard env("0x00001234");
    CHECK_THROWS_AS(cli::resolve_prefix(std::nullopt), std::invalid_argument);
  }
}

TEST_CASE("custom prefix reaches the running program") {
  std::string path = (scratch() / "ctswap.cafe.ir").string();
  std::ostringstream out, err;
  cli::TransformArgs a;
  a.input = corpus_file("ctswap");
  a.output = path;
  a.prefix = "cafef00d";
  REQUIRE(cli::cmd_transform(a, out, err) == 0);
  cli::RunArgs r;
  r.input = path;
  r.args_hex = cli::to_hex(testutil::le64({1, 7, 9}));
  r.trace_path = (scratch() / "cafe.json").string();
  CHECK(cli::cmd_run(r, out, err) == cli::kExitOk);
  auto j = nlohmann::json::parse(testutil::read_file(r.trace_path));
  CHECK(j["prefix"] == "0xcafef00d");
}

TEST_CASE("hex helpers") {
  CHECK(cli::parse_hex_bytes("00ff10") == std::vector<std::uint8_t>{0, 255, 16});
  CHECK(cli::parse_hex_bytes("0xABcd") == std::vector<std::uint8_t>{0xab, 0xcd});
  CHECK(cli::parse_hex_bytes("").empty());
  CHECK_THROWS(cli::parse_hex_bytes("abc"));
  CHECK_THROWS(cli::parse_hex_bytes("zz"));
  std::vector<std::uint8_t> b{0x01, 0xab};
  CHECK(cli::to_hex(b) == "01ab");
}

TEST_CASE("run exit codes") {
  std::ostringstream out, err;
  cli::RunArgs r;
  r.input = corpus_file("ctswap");
  r.args_hex = cli::to_hex(testutil::le64({1, 7, 9}));
  CHECK(cli::cmd_run(r, out, err) == cli::kExitOk);
  CHECK(out.str().find("out: 09000000000000000700000000000000\n") != std::string::npos);
  CHECK(out.str().find("exit: 14\n") != std::string::npos);

  r.args_hex = "00";
  CHECK(cli::cmd_run(r, out, err) == cli::kExitUsage);
  r.args_hex = "xyz";
  CHECK(cli::cmd_run(r, out, err) == cli::kExitUsage);

  r.args_hex = cli::to_hex(testutil::le64({1, 7, 9}));
  r.step_limit = 10;
  CHECK(cli::cmd_run(r, out, err) == cli::kExitStepLimit);

  cli::RunArgs f;
  f.input = write_scratch("fault.ir", "fn main() {\nentry:\n  %s = call ptr @ss_secret_malloc(i64 8)\n"
                                      "  %v = load i64, ptr %s\n  ret i64 %v\n}\n");
  f.trace_path = (scratch() / "fault.json").string();
  std::ostringstream ferr;
  CHECK(cli::cmd_run(f, out, ferr) == cli::kExitFault);
  CHECK(ferr.str().find("NonCanonicalAccess") != std::string::npos);
  auto j = nlohmann::json::parse(testutil::read_file(f.trace_path));
  CHECK(j["faults"][0]["kind"] == "NonCanonicalAccess");

  cli::RunArgs missing;
  missing.input = (scratch() / "does-not-exist.ir").string();
  CHECK(cli::cmd_run(missing, out, err) == cli::kExitUsage);
}

TEST_CASE("audit exit code mapping") {
  STATIC_REQUIRE(cli::audit_exit_code(0) == 0);
  STATIC_REQUIRE(cli::audit_exit_code(1) == 3);
  STATIC_REQUIRE(cli::audit_exit_code(122) == 124);
  STATIC_REQUIRE(cli::audit_exit_code(123) == 125);
  STATIC_REQUIRE(cli::audit_exit_code(100000) == 125);
}

TEST_CASE("audit of transformed kernels is clean") {
  for (const auto &name : testutil::kernels())
    for (std::string pol : {"annotated", "all_secret"}) {
      cli::AuditArgs a;
      a.input = transformed_file(name, pol);
      a.report_path = (scratch() / (name + "." + pol + ".audit.json")).string();
      std::ostringstream out, err;
      INFO(name << " " << pol << " " << err.str());
      CHECK(cli::cmd_audit(a, out, err) == cli::kExitOk);
      auto j = nlohmann::json::parse(testutil::read_file(a.report_path));
      CHECK(j["tainted"] == 0);
      CHECK(j["store_audit"]["violations"] == 0);
      CHECK(j["audit_points"].get<int>() >= 1);
    }
}

TEST_CASE("audit of the planted pointer fails with the finding count") {
  for (std::string mode : {"heuristic", "aggressive", "both"}) {
    cli::AuditArgs a;
    a.input = transformed_file("planted", "annotated");
    a.mode = mode;
    std::ostringstream out, err;
    int rc = cli::cmd_audit(a, out, err);
    auto j = nlohmann::json::parse(out.str());
    INFO(mode);
    CHECK(j["tainted"].get<int>() >= 1);
    CHECK(rc == cli::audit_exit_code(j["tainted"].get<std::size_t>()));
    CHECK(rc >= 3);
    CHECK(j["mode"] == mode);
  }
}

TEST_CASE("audit of an empty program") {
  cli::AuditArgs a;
  a.input = write_scratch("empty.ir", "fn main() {\nentry:\n  ret void\n}\n");
  std::ostringstream out, err;
  CHECK(cli::cmd_audit(a, out, err) == cli::kExitOk);
  auto j = nlohmann::json::parse(out.str());
  CHECK(j["findings"].empty());
  CHECK(j["mode"] == "both");

  a.mode = "sideways";
  CHECK(cli::cmd_audit(a, out, err) == cli::kExitUsage);
}

TEST_CASE("audit every N steps") {
  auto p = testutil::transformed(testutil::corpus("ctswap"), transform::Mode::Annotated);
  auto args = testutil::le64({1, 7, 9});
  auto every = cli::audit_program(p, args, {dmp::DmpMode::Heuristic}, 32,
                                  vm::AuditPolicy{vm::AuditMode::EveryN, 5});
  auto stores = cli::audit_program(p, args, {dmp::DmpMode::Heuristic});
  CHECK(every.audit_points != stores.audit_points);
  CHECK(every.report.tainted_count() == 0);
  CHECK(every.report.mode == "heuristic");
}

TEST_CASE("diff across policies and between files") {
  std::ostringstream out, err;
  cli::DiffArgs d;
  d.left = corpus_file("hmac");
  d.args_hex = cli::to_hex(testutil::le64({5, 6}));
  CHECK(cli::cmd_diff(d, out, err) == cli::kExitOk);
  CHECK(out.str().find("match\n") != std::string::npos);

  std::string other = write_scratch("hmac_off.ir", [] {
    std::string s = testutil::read_file(testutil::corpus_dir() / "hmac.ir");
    auto pos = s.find("92");
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, 2, "93");
  }());
  d.right = other;
  std::ostringstream out2;
  CHECK(cli::cmd_diff(d, out2, err) == cli::kExitMismatch);
  CHECK(out2.str().find("MISMATCH") != std::string::npos);

  d.right = transformed_file("hmac", "all_secret");
  CHECK(cli::cmd_diff(d, out, err) == cli::kExitOk);
}

TEST_CASE("bench ordering and determinism") {
  std::vector<transform::Mode> pols{transform::Mode::None, transform::Mode::Annotated,
                                    transform::Mode::AllSecret};
  std::ostringstream err;
  for (const auto &name : testutil::kernels()) {
    ir::Program p = testutil::corpus(name);
    auto rows = cli::bench_program(name, p, pols, runtime::Prefix{}, 1, err);
    REQUIRE(rows.size() == 3);
    INFO(name);
    CHECK(rows[0].policy == "none");
    CHECK(rows[0].icount_ratio == 1.0);
    CHECK(rows[0].icount < rows[1].icount);
    CHECK(rows[1].icount < rows[2].icount);
    CHECK(rows[2].secret_mem_ratio >= 2.0);
    CHECK(rows[2].secret_physical_bytes >= 2 * rows[2].secret_logical_bytes);
    auto again = cli::bench_program(name, p, pols, runtime::Prefix{}, 3, err);
    CHECK(cli::bench_csv(rows) == cli::bench_csv(again));
  }
}

TEST_CASE("bench CSV and JSON output") {
  cli::BenchArgs b;
  b.corpus_dir = testutil::corpus_dir().string();
  b.json_path = (scratch() / "bench.json").string();
  std::ostringstream out, err;
  CHECK(cli::cmd_bench(b, out, err) == cli::kExitOk);
  std::istringstream lines(out.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == cli::kBenchCsvHeader);
  std::size_t rows = 0;
  for (std::string l; std::getline(lines, l);)
    if (!l.empty()) {
      ++rows;
      CHECK(std::count(l.begin(), l.end(), ',') == 8);
    }
  CHECK(rows == 3 * (testutil::kernels().size() + 1));
  auto j = nlohmann::json::parse(testutil::read_file(b.json_path));
  CHECK(j.size() == rows);

  b.policies = {"none", "bogus"};
  CHECK(cli::cmd_bench(b, out, err) == cli::kExitUsage);
}

TEST_CASE("command line tool") {
  const std::string exe = SPLITSEC_CLI;
  const std::string ct = corpus_file("ctswap");
  CHECK(shell(exe + " --help") == 0);
  CHECK(shell(exe + " frobnicate") == 1);
  CHECK(shell(exe + " run " + ct + " --args " + cli::to_hex(testutil::le64({1, 7, 9}))) == 0);
  CHECK(shell(exe + " run " + ct + " --args 00") == 1);
  CHECK(shell(exe + " run " + ct + " --args " + cli::to_hex(testutil::le64({1, 7, 9})) +
              " --step-limit 5") == 3);
  CHECK(shell(exe + " transform " + ct + " --prefix 0x00000000") == 1);
  CHECK(shell("SS_PREFIX=0x00000001 " + exe + " transform " + ct) == 1);
  CHECK(shell(exe + " audit " + transformed_file("ctswap", "annotated")) == 0);
  CHECK(shell(exe + " audit " + transformed_file("planted", "annotated")) >= 3);
  CHECK(shell(exe + " diff " + ct) == 0);
}
