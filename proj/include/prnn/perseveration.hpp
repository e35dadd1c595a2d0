#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prnn/matrix.hpp"

namespace prnn {

// Input perseveration: every per-time-step input row is fed to the model k
// consecutive times. All k outputs enter the training loss; only the last
// replication's output is kept as the prediction for that time step.
// k = 1 reproduces the plain stacked LSTM exactly.

inline constexpr std::size_t kMaxPerseveration = 8;

struct PerseverationConfig {
  std::size_t k = 1;
};

// Throws std::invalid_argument unless 1 <= k <= kMaxPerseveration.
void validate_k(std::size_t k);

struct ExpandedSequence {
  Matrix inputs;                           // (n·k) × features, block-replicated rows
  std::vector<double> targets;             // length n·k, replicated verbatim
  std::vector<std::size_t> keep_indices;   // {k-1, 2k-1, ..., nk-1}
};

ExpandedSequence expand_sequence(const Matrix& inputs, std::span<const double> targets,
                                 std::size_t k);

enum class WeightScheme { all_equal };

// Length n·k weight vector; all_equal gives every replication weight 1/(n·k)
// so the data loss averages over every replication of every step. Padding
// masks are applied on top by the trainer.
std::vector<double> build_loss_weights(std::size_t n, std::size_t k,
                                       WeightScheme scheme = WeightScheme::all_equal);

// Entry i of the result is expanded_outputs[i·k + (k-1)].
std::vector<double> select_final_outputs(std::span<const double> expanded_outputs,
                                         std::span<const std::size_t> keep_indices);

}  // namespace prnn
