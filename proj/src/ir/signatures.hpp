//===-- signatures.hpp - Intrinsic call signatures --------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include "splitsec/ir.hpp"

#include <vector>

namespace splitsec::ir::detail {

struct Signature {
  Type ret;
  std::vector<Type> params;
  // ss_load64 / ss_store64 also move pointers; the value slot may be i64 or ptr.
  bool word_or_ptr = false;
};

const Signature &signature_of(Intrinsic i);

} // namespace splitsec::ir::detail
