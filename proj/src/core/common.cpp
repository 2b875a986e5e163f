#include "core/common.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace distner {

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

void fail_parse(int line_no, const std::string& message) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + message);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t a,
                          std::uint64_t b) {
  std::uint64_t h = mix64(root);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

std::uint64_t Rng::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) fail(ErrorKind::Internal, "Rng::below(0)");
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next()) * n) >> 64);
}

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

bool Rng::bernoulli(double p) { return uniform01() < p; }

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = threads <= 1 ? 1 : static_cast<std::size_t>(threads);
  if (workers > n) workers = n;
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int ceil_ratio(double ratio, int n) {
  double x = ratio * static_cast<double>(n);
  return static_cast<int>(std::ceil(x - 1e-9));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path);
  out << content;
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

}  // namespace distner
