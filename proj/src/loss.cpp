#include "prnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace prnn {

namespace {
double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
}  // namespace

double bce_term(double yhat, double y) {
  const double p = clamp_prob(yhat);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double bce_dyhat(double yhat, double y) {
  const double p = clamp_prob(yhat);
  return (p - y) / (p * (1.0 - p));
}

BceResult bce_loss(std::span<const double> yhat, std::span<const double> y,
                   std::span<const double> weights) {
  if (yhat.size() != y.size() || yhat.size() != weights.size())
    throw std::invalid_argument("bce_loss: length mismatch (" + std::to_string(yhat.size()) +
                                ", " + std::to_string(y.size()) + ", " +
                                std::to_string(weights.size()) + ")");
  BceResult r;
  r.dloss_dyhat.resize(yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    r.loss += weights[i] * bce_term(yhat[i], y[i]);
    r.dloss_dyhat[i] = weights[i] * bce_dyhat(yhat[i], y[i]);
  }
  return r;
}

}  // namespace prnn
