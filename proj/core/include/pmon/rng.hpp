// pmon/rng.hpp -- named substreams derived from one master seed.
//
// Every random draw in the toolkit comes from a stream derived as
// (master, stream id, index), so runs are reproducible from the master seed
// alone and adding draws to one stream never perturbs another.
#pragma once

#include <cstdint>
#include <random>

namespace pmon {

enum class Stream : std::uint32_t {
  kEnvironment = 1,  // stochastic uncertainty-growth realizations, per point
  kSampler = 2,      // global-search candidate draws
  kComparisons = 3,  // per-repetition environment seeds in paired comparisons
  kRestarts = 4,     // initial-anomaly randomization across restarts
  kTesting = 99,     // reserved for test fixtures
};

inline std::mt19937_64 make_stream(std::uint64_t master, Stream stream,
                                   std::uint64_t index = 0) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
      static_cast<std::uint32_t>(stream),
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Derives a child seed (for handing a whole stream to a subcomponent).
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t index = 0) {
  auto eng = make_stream(master, stream, index);
  return eng();
}

}  // namespace pmon
