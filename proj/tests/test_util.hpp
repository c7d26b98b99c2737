//===-- test_util.hpp - Helpers shared by the test binaries ---------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/ir.hpp"
#include "splitsec/transform.hpp"
#include "splitsec/vm.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::filesystem::path corpus_dir() { return SPLITSEC_CORPUS_DIR; }
inline std::filesystem::path golden_dir() { return SPLITSEC_GOLDEN_DIR; }

inline splitsec::ir::Program corpus(const std::string &name) {
  return splitsec::ir::parse_program(read_file(corpus_dir() / (name + ".ir")));
}

/// Every corpus kernel except the planted-pointer control.
inline std::vector<std::string> kernels() {
  std::vector<std::string> out;
  for (const auto &e : std::filesystem::directory_iterator(corpus_dir()))
    if (e.path().extension() == ".ir" && e.path().stem() != "planted")
      out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline splitsec::ir::Program transformed(const splitsec::ir::Program &p,
                                         splitsec::transform::Mode m) {
  splitsec::transform::Policy pol;
  pol.mode = m;
  return splitsec::transform::transform_program(p, pol);
}

inline std::vector<std::uint8_t> random_args(const splitsec::ir::Program &p, std::mt19937_64 &rng) {
  std::vector<std::uint8_t> a(splitsec::vm::entry_arg_bytes(p));
  for (auto &b : a)
    b = static_cast<std::uint8_t>(rng());
  return a;
}

inline std::vector<std::uint8_t> le64(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint8_t> out;
  for (std::uint64_t w : words)
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  return out;
}

inline constexpr splitsec::transform::Mode kModes[] = {splitsec::transform::Mode::None,
                                                      splitsec::transform::Mode::Annotated,
                                                      splitsec::transform::Mode::AllSecret};

} // namespace testutil
