#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "learn2mix/data.hpp"

namespace l2m {

/// Where a synthetic sample came from: x + gap * (neighbor - x).
struct SyntheticOrigin {
  std::size_t class_id = 0;
  std::size_t index = 0;     // position in the oversampled store
  std::size_t base = 0;      // original store index of x
  std::size_t neighbor = 0;  // original store index of the neighbor
  double gap = 0.0;          // in [0, 1]
};

struct SmoteResult {
  ClassPartitionedDataset dataset;
  std::vector<SyntheticOrigin> synthetic;
};

/// Pads every class to the largest class size with SMOTE interpolations toward
/// one of the `neighbors` nearest same-class points (labels interpolated alike).
/// Originals keep their positions at the front of each store. A class with a
/// single sample is padded with copies of it.
SmoteResult smote_oversample(const ClassPartitionedDataset& ds, std::uint64_t seed, std::size_t neighbors = 5);

}  // namespace l2m
