#pragma once

#include <string>

#include "ustat/instance.hpp"

namespace ustat {

/// Instance file schema: a JSON object with
///   m, n        positive integers
///   mode        "decoupled" | "undecoupled"
///   variables   [j][i] -> {atoms: [...], probs: [...]}  (one row when undecoupled)
///   kernels     [{index: [i1..im] (1-based), table: nested arrays, depth m}]
///   id, flags   optional ("flags" carries nonnegative / canonical /
///               separately_symmetric declarations)
/// Every multi-index must appear exactly once; tables must match the atom
/// counts of the laws they integrate against.  Parse errors carry the field
/// path (e.g. "variables[0][1].probs"); instance-invariant violations are
/// surfaced verbatim.  parse(serialize(x)) reproduces x value for value.

UStatInstance parse_instance_json(const std::string& text);
UStatInstance parse_instance_file(const std::string& path);

std::string serialize_instance(const UStatInstance& inst);
void write_instance_file(const UStatInstance& inst, const std::string& path);

} // namespace ustat
