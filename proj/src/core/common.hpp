#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace distner {

// Error kinds map 1:1 onto the C API status codes and CLI exit codes, so the
// whole stack agrees on what counts as bad input vs. an aborted run.
enum class ErrorKind {
  InvalidArgument,
  Parse,
  Io,
  TrainingAbort,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);
[[noreturn]] void fail_parse(int line_no, const std::string& message);

// Sub-stream tags for seed derivation. Every consumer of randomness derives
// its own stream from the single run seed, so adding a draw in one place
// never shifts the sequence seen by another.
enum class Stream : std::uint64_t {
  Mask = 1,
  Flip = 2,
  Init = 3,
  Sample = 4,
  Folds = 5,
  Dropout = 6,
  Order = 7,
  Synthetic = 8,
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);

// splitmix64. Small, fast, and fully portable: the byte-identical replay
// guarantee rules out std::*_distribution, whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [0, n). Uses 128-bit multiply instead of modulo; bias at
  // n << 2^64 is far below anything observable here.
  std::uint64_t below(std::uint64_t n);
  double uniform01();  // [0, 1)
  double uniform(double lo, double hi);
  bool bernoulli(double p);

  // Fisher-Yates shuffle driven by this generator.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Runs fn(begin, end) over contiguous chunks of [0, n). threads <= 1 runs
// inline. Chunks write to disjoint output slots, so results do not depend on
// the thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

std::vector<std::string> split_whitespace(const std::string& line);

// Budget helper for ceil(ratio * n) guarding against binary representation
// spill (0.35 * 20 must give 7, not 8).
int ceil_ratio(double ratio, int n);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace distner
