#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace l2m {

/// Time-varying class proportions alpha^t on the probability simplex.
struct MixingState {
  std::vector<double> alpha;
  double gamma = 0.0;  // mixing rate in [0, 1)
  std::size_t epoch = 0;

  /// alpha^0 = fixed proportions. Throws InvalidSize for a bad simplex or gamma.
  static MixingState initial(std::vector<double> fixed_proportions, double gamma);
};

/// Per-class empirical losses for one epoch. valid[i] is false when class i
/// contributed no samples; its entry then holds whatever the caller carried forward.
struct ClassLossVector {
  std::vector<double> losses;
  std::vector<bool> valid;

  static ClassLossVector all_valid(std::vector<double> losses);
};

struct BatchPlan {
  std::vector<std::size_t> counts;
  std::size_t batch_size = 0;
};

/// losses / sum(losses). nullopt when the total is zero, meaning "skip this update".
/// Throws NegativeLoss for negative or non-finite entries.
std::optional<std::vector<double>> normalize_losses(const ClassLossVector& lv);

/// alpha <- alpha + gamma (L - alpha) with L the normalized losses; the epoch
/// counter always advances. A zero-total loss vector leaves alpha unchanged.
MixingState update_mixing(const MixingState& state, const ClassLossVector& lv);

/// Largest-remainder apportionment of alpha * M; remainder ties go to the lower index.
BatchPlan allocate_counts(std::span<const double> alpha, std::size_t batch_size);

/// Stable mixing distribution L(theta*) / 1^T L(theta*). Throws ZeroTotalLoss.
std::vector<double> mixing_fixed_point(const ClassLossVector& optimal_losses);

/// Pushes the rounding residual 1 - sum(alpha) into the largest component.
void renormalize_simplex(std::vector<double>& alpha);

}  // namespace l2m
