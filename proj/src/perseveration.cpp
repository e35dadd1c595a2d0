#include "prnn/perseveration.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace prnn {

void validate_k(std::size_t k) {
  if (k < 1 || k > kMaxPerseveration)
    throw std::invalid_argument("perseveration: k must be in [1, " +
                                std::to_string(kMaxPerseveration) + "], got " +
                                std::to_string(k));
}

ExpandedSequence expand_sequence(const Matrix& inputs, std::span<const double> targets,
                                 std::size_t k) {
  validate_k(k);
  const std::size_t n = inputs.rows();
  if (n == 0) throw std::invalid_argument("expand_sequence: empty input sequence");
  if (targets.size() != n)
    throw std::invalid_argument("expand_sequence: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(n) + " steps");

  ExpandedSequence out;
  out.inputs = Matrix(n * k, inputs.cols());
  out.targets.resize(n * k);
  out.keep_indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t r = i * k + j;
      std::memcpy(out.inputs.row(r).data(), inputs.row(i).data(),
                  inputs.cols() * sizeof(double));
      out.targets[r] = targets[i];
    }
    out.keep_indices[i] = i * k + (k - 1);
  }
  return out;
}

std::vector<double> build_loss_weights(std::size_t n, std::size_t k, WeightScheme scheme) {
  validate_k(k);
  (void)scheme;  // all_equal is the only scheme
  const double w = 1.0 / static_cast<double>(n * k);
  return std::vector<double>(n * k, w);
}

std::vector<double> select_final_outputs(std::span<const double> expanded_outputs,
                                         std::span<const std::size_t> keep_indices) {
  if (keep_indices.empty())
    throw std::invalid_argument("select_final_outputs: no keep indices");
  const std::size_t k = keep_indices.front() + 1;
  if (expanded_outputs.size() != keep_indices.size() * k)
    throw std::invalid_argument(
        "select_final_outputs: " + std::to_string(expanded_outputs.size()) +
        " outputs do not match " + std::to_string(keep_indices.size()) +
        " steps at k=" + std::to_string(k));
  std::vector<double> selected(keep_indices.size());
  for (std::size_t i = 0; i < keep_indices.size(); ++i) {
    if (keep_indices[i] >= expanded_outputs.size())
      throw std::invalid_argument("select_final_outputs: keep index out of range");
    selected[i] = expanded_outputs[keep_indices[i]];
  }
  return selected;
}

}  // namespace prnn
