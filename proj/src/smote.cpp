#include "learn2mix/smote.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/random.hpp"

namespace l2m {

namespace {

// Indices of the `count` nearest points to store[i], nearest first, ties by index.
std::vector<std::size_t> nearest(std::span<const Sample> store, std::size_t i, std::size_t count) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(store.size() - 1);
  for (std::size_t j = 0; j < store.size(); ++j) {
    if (j != i) dist.emplace_back((store[j].features - store[i].features).squaredNorm(), j);
  }
  count = std::min(count, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
  std::vector<std::size_t> out(count);
  for (std::size_t r = 0; r < count; ++r) out[r] = dist[r].second;
  return out;
}

}  // namespace

SmoteResult smote_oversample(const ClassPartitionedDataset& ds, std::uint64_t seed, std::size_t neighbors) {
  if (neighbors < 1) throw InvalidSize("SMOTE needs at least one neighbor");
  const auto sizes = ds.class_sizes();
  const auto target = *std::max_element(sizes.begin(), sizes.end());

  SmoteResult result;
  std::vector<std::vector<Sample>> stores(ds.num_classes());
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto store = ds.store(c);
    stores[c].assign(store.begin(), store.end());
    stores[c].reserve(target);
    if (store.size() == target) continue;

    auto rng = make_stream(seed, StreamTag::smote, {c});
    std::uniform_int_distribution<std::size_t> pick_base(0, store.size() - 1);
    std::uniform_real_distribution<double> gap(0.0, 1.0);
    std::vector<std::vector<std::size_t>> knn(store.size());
    while (stores[c].size() < target) {
      const auto base = pick_base(rng);
      const auto& x = store[base];
      if (store.size() == 1) {
        result.synthetic.push_back({c, stores[c].size(), base, base, 0.0});
        stores[c].push_back(x);
        continue;
      }
      if (knn[base].empty()) knn[base] = nearest(store, base, neighbors);
      std::uniform_int_distribution<std::size_t> pick_nn(0, knn[base].size() - 1);
      const auto nb = knn[base][pick_nn(rng)];
      const double u = gap(rng);
      Sample s;
      s.features = x.features + u * (store[nb].features - x.features);
      s.label = x.label + u * (store[nb].label - x.label);
      s.class_id = c;
      result.synthetic.push_back({c, stores[c].size(), base, nb, u});
      stores[c].push_back(std::move(s));
    }
  }
  result.dataset = ClassPartitionedDataset(std::move(stores));
  return result;
}

}  // namespace l2m
