#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace l2m {

using Rng = std::mt19937_64;

// Stream tags keep generators for unrelated purposes apart even when they
// share the user seed.
enum class StreamTag : std::uint64_t {
  dataset_train = 1,
  dataset_test = 2,
  imbalance = 3,
  shuffle = 4,
  init = 5,
  smote = 6,
  importance = 7,
  curriculum = 8,
  theory = 9,
};

/// Deterministic generator keyed on (seed, tag, indices...). std::seed_seq has a
/// fully specified mixing algorithm, so the stream only depends on the key.
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * keys.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(static_cast<std::uint64_t>(tag));
  for (auto k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace l2m
