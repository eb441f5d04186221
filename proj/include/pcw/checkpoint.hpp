#pragma once

#include <string>
#include <vector>

#include "pcw/tensor.hpp"

namespace pcw {

// Binary weight snapshot. Round-trips are bit-exact: every value is written as
// its raw IEEE-754 representation, so save -> load -> save produces identical
// bytes. Layout: 8-byte magic "PCWNET1\n", u32 parameter count, then one
// record per parameter in the order given (u32 name length, name bytes,
// u32 rank, u32 dims, f64 values row-major). All integers little-endian.
void save_checkpoint(const std::string& path, const std::vector<Parameter>& params);

// Reads a snapshot back. Gradients in the result are zero. Throws ParseError
// (with the byte offset) on anything malformed and ConfigError if the file
// cannot be opened.
std::vector<Parameter> load_checkpoint(const std::string& path);

// Copies loaded values into an existing parameter set. Names must match
// one-to-one in order and shapes must agree; throws ContractError otherwise.
void restore_parameters(const std::vector<Parameter>& loaded, std::vector<Parameter>& params);

}  // namespace pcw
