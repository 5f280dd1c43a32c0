#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace actseq {

// Raised by loaders and validators: malformed files, schema violations,
// unknown labels. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an enumeration would exceed its configured cap. Maps to CLI
// exit code 3.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
// per-index slots so the merge is deterministic regardless of scheduling.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

// Process-wide default worker count used by the library's parallel loops.
// Defaults to 1 (serial); the CLI raises it from a flag.
unsigned default_workers();
void set_default_workers(unsigned n);

}  // namespace actseq
