#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace covertime {

inline constexpr std::uint64_t kDefaultSeed = 20100419;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent engine for replica `index` of the stream identified by `seed`.
// Streams depend only on (seed, index), never on scheduling.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  const std::uint64_t b = splitmix64(a + splitmix64(index));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Derives a named sub-seed so that separate estimators in one run draw from
// unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag * 0x9e3779b97f4a7c15ULL + 1));
}

struct Parallelism {
  unsigned threads = 1;
};

// Runs body(i) for i in [0, count). Each index owns its output slot, so the
// caller's reduction order (by index) fixes the result independent of threads.
template <typename Body>
void parallel_for(std::size_t count, Parallelism par, Body&& body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(par.threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace covertime
