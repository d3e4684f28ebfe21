#include "learn2mix/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "learn2mix/errors.hpp"
#include "learn2mix/random.hpp"

namespace l2m {

CyclicCursor::CyclicCursor(std::vector<std::size_t> class_sizes) : sizes_(std::move(class_sizes)) {
  if (sizes_.empty()) throw InvalidSize("cursor needs at least one class");
  tau_.assign(sizes_.size(), 0);
  perm_.resize(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == 0) throw EmptyClass(i);
    perm_[i].resize(sizes_[i]);
    std::iota(perm_[i].begin(), perm_[i].end(), std::size_t{0});
  }
}

void CyclicCursor::begin_epoch(std::uint64_t seed) {
  ++epoch_;
  for (std::size_t i = 0; i < perm_.size(); ++i) {
    std::iota(perm_[i].begin(), perm_[i].end(), std::size_t{0});
    auto rng = make_stream(seed, StreamTag::shuffle, {epoch_, i});
    std::shuffle(perm_[i].begin(), perm_[i].end(), rng);
  }
}

std::vector<SampleRef> CyclicCursor::next_batch(const BatchPlan& plan) {
  if (plan.counts.size() != sizes_.size()) throw DimensionMismatch("batch plan has wrong number of classes");
  std::vector<SampleRef> out;
  out.reserve(std::accumulate(plan.counts.begin(), plan.counts.end(), std::size_t{0}));
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    const auto n = sizes_[i];
    for (std::size_t w = 0; w < plan.counts[i]; ++w) {
      out.push_back({i, perm_[i][(tau_[i] + w) % n]});
    }
    tau_[i] = (tau_[i] + plan.counts[i]) % n;
  }
  return out;
}

}  // namespace l2m
