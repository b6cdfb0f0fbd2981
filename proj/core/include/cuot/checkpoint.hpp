#pragma once

#include <cstdint>
#include <string>

#include "cuot/params.hpp"

namespace cuot {

// Atomic file write (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Parameter container: ordered (name, shape, data) triples plus an
// architecture config hash, as JSON.
std::string params_to_json(const ParamSet& set, uint64_t arch_hash,
                           const std::string& kind);

struct LoadedParams {
  ParamSet set;
  uint64_t arch_hash = 0;
  std::string kind;
};

LoadedParams params_from_json(const std::string& text);

}  // namespace cuot
