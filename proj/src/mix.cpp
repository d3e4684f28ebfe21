#include "learn2mix/mix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "learn2mix/errors.hpp"

namespace l2m {

MixingState MixingState::initial(std::vector<double> fixed_proportions, double gamma) {
  if (fixed_proportions.empty()) throw InvalidSize("mixing parameters need at least one class");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSize("mixing rate must lie in [0, 1)");
  double total = 0.0;
  for (double a : fixed_proportions) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidSize("mixing parameters must be finite and nonnegative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidSize("mixing parameters must sum to one");
  return MixingState{std::move(fixed_proportions), gamma, 0};
}

ClassLossVector ClassLossVector::all_valid(std::vector<double> losses) {
  std::vector<bool> valid(losses.size(), true);
  return {std::move(losses), std::move(valid)};
}

std::optional<std::vector<double>> normalize_losses(const ClassLossVector& lv) {
  double total = 0.0;
  for (double l : lv.losses) {
    if (!std::isfinite(l)) throw NegativeLoss("class loss is not finite");
    if (l < 0.0) throw NegativeLoss("class loss is negative");
    total += l;
  }
  if (total == 0.0) return std::nullopt;
  std::vector<double> out(lv.losses.size());
  std::transform(lv.losses.begin(), lv.losses.end(), out.begin(), [total](double l) { return l / total; });
  return out;
}

void renormalize_simplex(std::vector<double>& alpha) {
  if (alpha.empty()) return;
  const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  auto top = std::max_element(alpha.begin(), alpha.end());
  *top += 1.0 - total;
}

MixingState update_mixing(const MixingState& state, const ClassLossVector& lv) {
  if (lv.losses.size() != state.alpha.size()) {
    throw DimensionMismatch("class loss vector length differs from mixing parameters");
  }
  MixingState next = state;
  next.epoch += 1;
  const auto target = normalize_losses(lv);
  if (!target || state.gamma == 0.0) return next;
  for (std::size_t i = 0; i < next.alpha.size(); ++i) {
    next.alpha[i] += state.gamma * ((*target)[i] - next.alpha[i]);
  }
  renormalize_simplex(next.alpha);
  return next;
}

BatchPlan allocate_counts(std::span<const double> alpha, std::size_t batch_size) {
  if (batch_size < 1) throw InvalidSize("batch size must be at least 1");
  if (alpha.empty()) throw InvalidSize("mixing parameters need at least one class");
  const auto k = alpha.size();
  const auto m = static_cast<double>(batch_size);

  BatchPlan plan{std::vector<std::size_t>(k, 0), batch_size};
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = std::max(0.0, alpha[i]) * m;
    // Snap quotas that sit within rounding noise of an integer.
    double whole = std::floor(quota);
    if (quota - whole > 1.0 - 1e-9) whole += 1.0;
    plan.counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = quota - whole;
    assigned += plan.counts[i];
  }
  // Floating drift can push the floors past M; take back from the smallest remainders.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  while (assigned > batch_size) {
    std::size_t pick = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (plan.counts[i] > 0 && (pick == k || remainder[i] < remainder[pick])) pick = i;
    }
    --plan.counts[pick];
    remainder[pick] += 1.0;
    --assigned;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < batch_size; r = (r + 1) % k) {
    ++plan.counts[order[r]];
    ++assigned;
  }
  return plan;
}

std::vector<double> mixing_fixed_point(const ClassLossVector& optimal_losses) {
  auto normalized = normalize_losses(optimal_losses);
  if (!normalized) throw ZeroTotalLoss("optimal class losses sum to zero");
  return *normalized;
}

}  // namespace l2m
