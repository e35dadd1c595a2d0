#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prnn/matrix.hpp"
#include "prnn/rng.hpp"

namespace prnn {

// Stacked LSTM with a dense sigmoid head (optionally replaced by a causal
// attention head). Forward passes run on batches: step s is a (batch ×
// features) matrix, so one episode is the batch=1 case.

struct LstmLayerParams {
  Matrix W;               // input × 4H; gate blocks ordered i, f, c̃, o
  Matrix U;               // H × 4H
  std::vector<double> b;  // 4H; forget block initialized to 1.0
  std::size_t hidden_size = 0;

  std::size_t input_size() const { return W.rows(); }
};

struct AttentionParams {
  Matrix w_out;  // 2H × 1, applied to [h_t ; context_t]
  double b_out = 0.0;
};

struct ModelMetadata {
  int format_version = 1;
  std::string variant = "prnn";  // "prnn" | "attention"
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::string init_scheme = "glorot_uniform";
  double forget_bias_init = 1.0;
  std::string gate_order = "ifco";
  std::vector<std::string> feature_names;
  std::map<std::string, std::string> training;  // provenance from the trainer
};

struct ModelParams {
  std::vector<LstmLayerParams> layers;
  Matrix head_w;  // H_last × 1; empty for the attention variant
  double head_b = 0.0;
  std::optional<AttentionParams> attention;
  ModelMetadata metadata;

  std::size_t input_size() const { return layers.front().input_size(); }
  std::size_t last_hidden() const { return layers.back().hidden_size; }
  std::vector<std::size_t> hidden_sizes() const;
};

// Gradient holder with the same parameter layout as ModelParams.
struct Gradients {
  std::vector<LstmLayerParams> layers;
  Matrix head_w;
  double head_b = 0.0;
  std::optional<AttentionParams> attention;
};

Gradients zero_gradients(const ModelParams& p);

// Visits every trainable parameter block in a fixed order as
// (name, data pointer, element count). Works on both ModelParams and
// Gradients so optimizer state and serialization stay in lockstep.
template <typename Model, typename Fn>
void for_each_param(Model& m, Fn&& fn) {
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    fn(prefix + "W", layer.W.data(), layer.W.size());
    fn(prefix + "U", layer.U.data(), layer.U.size());
    fn(prefix + "b", layer.b.data(), layer.b.size());
  }
  if (!m.head_w.empty()) {
    fn(std::string("head.W"), m.head_w.data(), m.head_w.size());
    fn(std::string("head.b"), &m.head_b, std::size_t{1});
  }
  if (m.attention) {
    fn(std::string("attention.W_out"), m.attention->w_out.data(),
       m.attention->w_out.size());
    fn(std::string("attention.b_out"), &m.attention->b_out, std::size_t{1});
  }
}

// Table-2 defaults.
inline std::vector<std::size_t> default_hidden_sizes() { return {128, 256, 128}; }

ModelParams init_model(Rng& rng, const std::vector<std::string>& feature_names,
                       const std::vector<std::size_t>& hidden_sizes,
                       bool with_attention, std::size_t k);

// Throws std::invalid_argument if layer shapes do not chain or the head does
// not map the last hidden size to 1.
void validate_model(const ModelParams& p);

enum class RunMode { train, infer };

struct DropoutRates {
  double input = 0.0;
  double recurrent = 0.0;
};

struct AttentionTape {
  // alphas[b][t][j] for j <= t; rebuilt per forward pass
  std::vector<std::vector<std::vector<double>>> alphas;
  std::vector<Matrix> contexts;  // step -> B×H
  std::vector<Matrix> outputs;   // step -> B×1
};

struct ForwardTape {
  RunMode mode = RunMode::infer;
  std::vector<Matrix> inputs;                // step -> B×F (unmasked)
  std::vector<std::vector<Matrix>> acts;     // [step][layer] B×4H, activated gates
  std::vector<std::vector<Matrix>> cells;    // [step][layer] B×H
  std::vector<std::vector<Matrix>> tanh_cells;
  std::vector<std::vector<Matrix>> hiddens;  // [step][layer] B×H
  std::vector<Matrix> input_masks;           // layer -> B×in, pre-scaled by 1/(1-p)
  std::vector<Matrix> recurrent_masks;       // layer -> B×H
  std::vector<Matrix> outputs;               // step -> B×1, ŷ per step
  std::optional<AttentionTape> attention;

  std::size_t steps() const { return inputs.size(); }
  std::size_t batch() const { return inputs.empty() ? 0 : inputs.front().rows(); }
};

// One LSTM step. Masks may be null (no dropout). acts_out, when given,
// receives the activated gate block (B×4H).
struct CellState {
  Matrix h;
  Matrix c;
};
CellState lstm_cell_forward(const Matrix& x_t, const Matrix& h_prev, const Matrix& c_prev,
                            const LstmLayerParams& params, const Matrix* input_mask,
                            const Matrix* recurrent_mask, Matrix* acts_out = nullptr);

// Draws one Bernoulli(1-p)/(1-p) mask per layer per batch row (train mode),
// then runs the full unrolled forward. States start at zero. Inference mode
// ignores rng and rates and applies no dropout or scaling.
ForwardTape stack_forward(const std::vector<Matrix>& inputs, const ModelParams& params,
                          RunMode mode, Rng* dropout_rng = nullptr,
                          const DropoutRates& rates = {});

// Same as train-mode stack_forward but with caller-supplied masks
// (already scaled); used for gradient checking with mask replay.
ForwardTape stack_forward_with_masks(const std::vector<Matrix>& inputs,
                                     const ModelParams& params,
                                     std::vector<Matrix> input_masks,
                                     std::vector<Matrix> recurrent_masks);

struct BpttResult {
  Gradients grads;
  double data_loss = 0.0;   // weighted BCE
  double total_loss = 0.0;  // data_loss + l2 penalty
};

// Exact gradients of  Σ_t,b w[t](b)·bce(ŷ[t](b), y[t](b)) + l2·Σ weights²
// over every parameter. Weight matrices carry the l2 term; biases do not.
BpttResult backward_bptt(const ModelParams& params, const ForwardTape& tape,
                         const std::vector<Matrix>& targets,
                         const std::vector<Matrix>& weights, double l2);

// Forward loss only (same definition as backward_bptt's total_loss), with
// mask replay; this is the function the finite-difference check drives.
double forward_loss_with_masks(const ModelParams& params, const std::vector<Matrix>& inputs,
                               const std::vector<Matrix>& targets,
                               const std::vector<Matrix>& weights, double l2,
                               const std::vector<Matrix>& input_masks,
                               const std::vector<Matrix>& recurrent_masks);

struct GradCheckReport {
  double worst_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  bool passed(double tolerance) const { return worst_rel_error < tolerance; }
};

// Central finite differences over every parameter, dropout masks replayed
// in both paths. step is the finite-difference h.
GradCheckReport gradient_check(const ModelParams& params, const std::vector<Matrix>& inputs,
                               const std::vector<Matrix>& targets,
                               const std::vector<Matrix>& weights, double l2,
                               const DropoutRates& rates, Rng* dropout_rng,
                               double step = 1e-5);

// Split an (n × F) row sequence into n step matrices of shape 1×F.
std::vector<Matrix> rows_as_steps(const Matrix& rows);
// Wrap per-step scalars as n matrices of shape 1×1.
std::vector<Matrix> scalars_as_steps(std::span<const double> values);

// Versioned JSON checkpoint: metadata plus base64 row-major f64 blocks.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace prnn
