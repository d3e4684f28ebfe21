#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "learn2mix/mix.hpp"

namespace l2m {

struct SampleRef {
  std::size_t class_id = 0;
  std::size_t index = 0;  // index into the class store

  bool operator==(const SampleRef&) const = default;
};

/// Cyclic per-class selection. Each class keeps a wrap-around offset tau_i into a
/// shuffled view of its store; offsets persist across epochs while the
/// permutation is redrawn by begin_epoch.
class CyclicCursor {
 public:
  CyclicCursor() = default;
  /// Permutations start as the identity and all offsets at 0. Throws InvalidSize on an empty class.
  explicit CyclicCursor(std::vector<std::size_t> class_sizes);

  /// Advances the epoch counter and reshuffles every class from (seed, epoch, class).
  void begin_epoch(std::uint64_t seed);

  /// Class-major batch: for class i, perm_i[(tau_i + w) mod |J_i|] for w < counts_i.
  /// Counts above |J_i| wrap and repeat samples.
  std::vector<SampleRef> next_batch(const BatchPlan& plan);

  const std::vector<std::size_t>& offsets() const noexcept { return tau_; }
  const std::vector<std::size_t>& permutation(std::size_t class_id) const { return perm_.at(class_id); }
  const std::vector<std::size_t>& class_sizes() const noexcept { return sizes_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> tau_;
  std::vector<std::vector<std::size_t>> perm_;
  std::size_t epoch_ = 0;
};

}  // namespace l2m
