#pragma once

#include <vector>

#include "prnn/lstm.hpp"

namespace prnn {

// Causal attention head over the last LSTM layer's hidden states.
// For each step t: scores s_j = h_t·h_j / sqrt(H) for j <= t (future steps
// masked out), α = softmax(s), context_t = Σ α_j h_j, and
// ŷ_t = σ(w_out·[h_t ; context_t] + b_out).
AttentionTape causal_attention_forward(const std::vector<Matrix>& hiddens,
                                       const AttentionParams& params);

// upstream_dy holds dL/dŷ per step (B×1). Accumulates parameter gradients
// into grads and returns dL/dh per step for the LSTM backward pass.
std::vector<Matrix> causal_attention_backward(const std::vector<Matrix>& hiddens,
                                              const AttentionTape& tape,
                                              const std::vector<Matrix>& upstream_dy,
                                              const AttentionParams& params,
                                              AttentionParams& grads);

}  // namespace prnn
