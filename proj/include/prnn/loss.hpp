#pragma once

#include <span>
#include <vector>

namespace prnn {

inline constexpr double kProbClamp = 1e-12;

struct BceResult {
  double loss = 0.0;
  std::vector<double> dloss_dyhat;
};

// loss = Σ w_i · -[y_i·log(ŷ_i) + (1-y_i)·log(1-ŷ_i)], with ŷ clamped to
// [1e-12, 1-1e-12] before the logs. Lengths must match.
BceResult bce_loss(std::span<const double> yhat, std::span<const double> y,
                   std::span<const double> weights);

// Scalar pieces used by the batched BPTT path.
double bce_term(double yhat, double y);
double bce_dyhat(double yhat, double y);

}  // namespace prnn
