#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prnn/loss.hpp"
#include "prnn/lstm.hpp"
#include "prnn/rng.hpp"

namespace prnn {

// Optimization loop: BCE loss, rmsprop, L2 1e-4, batch size 32, per-epoch
// validation with best-weights retention. Defaults follow Table 2.
struct TrainingConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-5;
  double rho = 0.9;
  double epsilon = 1e-7;
  double l2 = 1e-4;
  double dropout = 0.2;
  double recurrent_dropout = 0.2;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Overrides base with values from a key=value file. Unknown keys are an
// argument error naming the key.
TrainingConfig load_training_config(const std::filesystem::path& path,
                                    TrainingConfig base = {});

// One episode prepared for optimization: imputed+normalized inputs and the
// per-step target (survival=1, death=0, constant over the episode).
struct TrainingSequence {
  std::string episode_id;
  Matrix inputs;  // n × features
  double target = 0.0;
};

struct Batch {
  std::vector<Matrix> inputs;        // step -> B×F, k-expanded then zero-padded
  std::vector<Matrix> targets;       // step -> B×1
  std::vector<Matrix> weights;       // step -> B×1; 1/(n·k·B) on real steps, 0 on padding
  std::vector<Matrix> padding_mask;  // step -> B×1; 1 real, 0 padding
  std::vector<std::size_t> members;  // indices into the sequence list
};

// Shuffles (seeded), buckets by expanded length to limit padding, then
// shuffles the bucket order. Weights fold in the 1/B batch mean.
std::vector<Batch> make_batches(const std::vector<TrainingSequence>& sequences,
                                std::size_t k, std::size_t batch_size, Rng& rng);

struct OptimizerState {
  Gradients mean_square;  // running g² accumulators, same layout as the model
};

OptimizerState init_optimizer(const ModelParams& params);

// acc <- rho·acc + (1-rho)·g²;  theta <- theta - lr·g/(sqrt(acc)+epsilon)
void rmsprop_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
                  const TrainingConfig& config);

struct ModelSpec {
  std::vector<std::size_t> hidden_sizes = default_hidden_sizes();
  bool attention = false;
  std::size_t k = 1;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_auroc;  // empty when the validation split is single-class
  bool is_best = false;
};

struct TrainResult {
  ModelParams best;  // initialized weights when max_epochs == 0
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch improved on nothing (empty log)
};

// Runs max_epochs full epochs; after each, scores the validation split by
// AUROC of final-time-step predictions and retains the best epoch's weights.
// Non-finite training loss aborts with a diagnostic naming epoch and batch.
TrainResult train_model(const std::vector<TrainingSequence>& train_seqs,
                        const std::vector<TrainingSequence>& val_seqs,
                        const std::vector<std::string>& feature_names,
                        const ModelSpec& spec, const TrainingConfig& config);

// Inference-mode PRNN prediction for one sequence: perseveration-expand by
// the model's k, forward, and keep the final replication per step.
struct SequencePrediction {
  std::vector<double> expanded;  // ŷ at every replication
  std::vector<double> selected;  // one per original step
};
SequencePrediction predict_sequence(const ModelParams& model, const Matrix& inputs);

// CSV: epoch,train_loss,val_loss,val_auroc,is_best
void write_training_log(const std::filesystem::path& path,
                        const std::vector<EpochLog>& log);

}  // namespace prnn
