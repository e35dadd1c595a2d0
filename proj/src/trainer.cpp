#include "prnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "prnn/detail/csv.hpp"
#include "prnn/detail/kv.hpp"
#include "prnn/metrics.hpp"
#include "prnn/perseveration.hpp"

namespace prnn {

namespace {

using detail::format_double;
using detail::parse_double;

std::size_t parse_count(const std::string& s) {
  const double v = parse_double(s);
  if (v < 0 || v != std::floor(v))
    throw std::invalid_argument("config: '" + s + "' is not a count");
  return static_cast<std::size_t>(v);
}

// Flattened (pointer, size) views in for_each_param order.
template <typename Model>
std::vector<std::pair<double*, std::size_t>> param_views(Model& m) {
  std::vector<std::pair<double*, std::size_t>> views;
  for_each_param(m, [&](const std::string&, double* data, std::size_t count) {
    views.emplace_back(data, count);
  });
  return views;
}

template <typename Model>
std::vector<std::pair<const double*, std::size_t>> const_param_views(const Model& m) {
  std::vector<std::pair<const double*, std::size_t>> views;
  for_each_param(m, [&](const std::string&, const double* data, std::size_t count) {
    views.emplace_back(data, count);
  });
  return views;
}

}  // namespace

void TrainingConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || learning_rate > 1.0)
    throw std::invalid_argument("config: learning_rate must be in (0, 1]");
  if (!(rho > 0.0) || rho >= 1.0)
    throw std::invalid_argument("config: rho must be in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be > 0");
  if (l2 < 0.0) throw std::invalid_argument("config: l2 must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("config: dropout must be in [0, 1)");
  if (recurrent_dropout < 0.0 || recurrent_dropout >= 1.0)
    throw std::invalid_argument("config: recurrent_dropout must be in [0, 1)");
}

TrainingConfig load_training_config(const std::filesystem::path& path,
                                    TrainingConfig base) {
  for (const auto& [key, value] : detail::parse_key_value_file(path)) {
    if (key == "batch_size") base.batch_size = parse_count(value);
    else if (key == "learning_rate") base.learning_rate = parse_double(value);
    else if (key == "rho") base.rho = parse_double(value);
    else if (key == "epsilon") base.epsilon = parse_double(value);
    else if (key == "l2") base.l2 = parse_double(value);
    else if (key == "dropout") base.dropout = parse_double(value);
    else if (key == "recurrent_dropout") base.recurrent_dropout = parse_double(value);
    else if (key == "max_epochs") base.max_epochs = parse_count(value);
    else if (key == "seed") base.seed = static_cast<std::uint64_t>(parse_count(value));
    else throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                     path.string());
  }
  base.validate();
  return base;
}

std::vector<Batch> make_batches(const std::vector<TrainingSequence>& sequences,
                                std::size_t k, std::size_t batch_size, Rng& rng) {
  if (sequences.empty()) throw std::invalid_argument("make_batches: empty training set");
  validate_k(k);
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  const std::size_t features = sequences.front().inputs.cols();

  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_below(i)]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sequences[a].inputs.rows() < sequences[b].inputs.rows();
  });

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    groups.emplace_back(order.begin() + start, order.begin() + end);
  }
  for (std::size_t i = groups.size(); i > 1; --i)
    std::swap(groups[i - 1], groups[rng.next_below(i)]);

  std::vector<Batch> batches;
  batches.reserve(groups.size());
  for (const auto& members : groups) {
    const std::size_t b_count = members.size();
    std::size_t max_len = 0;
    for (std::size_t idx : members)
      max_len = std::max(max_len, sequences[idx].inputs.rows() * k);

    Batch batch;
    batch.members = members;
    batch.inputs.assign(max_len, Matrix(b_count, features));
    batch.targets.assign(max_len, Matrix(b_count, 1));
    batch.weights.assign(max_len, Matrix(b_count, 1));
    batch.padding_mask.assign(max_len, Matrix(b_count, 1));
    for (std::size_t b = 0; b < b_count; ++b) {
      const TrainingSequence& seq = sequences[members[b]];
      if (seq.inputs.cols() != features)
        throw std::invalid_argument("make_batches: inconsistent feature counts");
      const std::size_t n = seq.inputs.rows();
      const double w = 1.0 / (static_cast<double>(n * k) * static_cast<double>(b_count));
      for (std::size_t step = 0; step < n * k; ++step) {
        const std::size_t row = step / k;
        std::memcpy(batch.inputs[step].row(b).data(), seq.inputs.row(row).data(),
                    features * sizeof(double));
        batch.targets[step](b, 0) = seq.target;
        batch.weights[step](b, 0) = w;
        batch.padding_mask[step](b, 0) = 1.0;
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

OptimizerState init_optimizer(const ModelParams& params) {
  return {zero_gradients(params)};
}

void rmsprop_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
                  const TrainingConfig& config) {
  auto theta = param_views(params);
  auto g = const_param_views(grads);
  auto acc = param_views(state.mean_square);
  if (theta.size() != g.size() || theta.size() != acc.size())
    throw std::invalid_argument("rmsprop_step: parameter layout mismatch");
  for (std::size_t blk = 0; blk < theta.size(); ++blk) {
    const auto [tp, tn] = theta[blk];
    const auto [gp, gn] = g[blk];
    const auto [ap, an] = acc[blk];
    if (tn != gn || tn != an)
      throw std::invalid_argument("rmsprop_step: parameter block size mismatch");
    for (std::size_t i = 0; i < tn; ++i) {
      ap[i] = config.rho * ap[i] + (1.0 - config.rho) * gp[i] * gp[i];
      tp[i] -= config.learning_rate * gp[i] / (std::sqrt(ap[i]) + config.epsilon);
    }
  }
}

SequencePrediction predict_sequence(const ModelParams& model, const Matrix& inputs) {
  const std::size_t n = inputs.rows();
  std::vector<double> dummy_targets(n, 0.0);
  ExpandedSequence expanded = expand_sequence(inputs, dummy_targets, model.metadata.k);
  ForwardTape tape = stack_forward(rows_as_steps(expanded.inputs), model, RunMode::infer);
  SequencePrediction pred;
  pred.expanded.reserve(tape.outputs.size());
  for (const auto& out : tape.outputs) pred.expanded.push_back(out(0, 0));
  pred.selected = select_final_outputs(pred.expanded, expanded.keep_indices);
  return pred;
}

namespace {

struct ValidationScore {
  double loss = 0.0;
  std::optional<double> auroc_final;
};

ValidationScore score_validation(const ModelParams& model,
                                 const std::vector<TrainingSequence>& val_seqs,
                                 std::size_t k) {
  ValidationScore score;
  std::vector<double> finals;
  std::vector<int> labels;
  double loss_sum = 0.0;
  for (const auto& seq : val_seqs) {
    SequencePrediction pred = predict_sequence(model, seq.inputs);
    const std::size_t n = seq.inputs.rows();
    std::vector<double> targets(n * k, seq.target);
    BceResult bce = bce_loss(pred.expanded, targets, build_loss_weights(n, k));
    loss_sum += bce.loss;
    finals.push_back(pred.selected.back());
    labels.push_back(seq.target > 0.5 ? 1 : 0);
  }
  score.loss = loss_sum / static_cast<double>(val_seqs.size());
  score.auroc_final = auroc(finals, labels);
  return score;
}

}  // namespace

TrainResult train_model(const std::vector<TrainingSequence>& train_seqs,
                        const std::vector<TrainingSequence>& val_seqs,
                        const std::vector<std::string>& feature_names,
                        const ModelSpec& spec, const TrainingConfig& config) {
  config.validate();
  if (train_seqs.empty()) throw std::invalid_argument("train: empty training split");
  if (val_seqs.empty()) throw std::invalid_argument("train: empty validation split");

  Rng root(config.seed);
  Rng init_rng = root.split(kStreamInit);
  Rng dropout_rng = root.split(kStreamDropout);
  Rng batch_rng = root.split(kStreamBatch);

  ModelParams model =
      init_model(init_rng, feature_names, spec.hidden_sizes, spec.attention, spec.k);
  model.metadata.seed = config.seed;
  auto& provenance = model.metadata.training;
  provenance["batch_size"] = std::to_string(config.batch_size);
  provenance["learning_rate"] = format_double(config.learning_rate);
  provenance["rho"] = format_double(config.rho);
  provenance["epsilon"] = format_double(config.epsilon);
  provenance["l2"] = format_double(config.l2);
  provenance["dropout"] = format_double(config.dropout);
  provenance["recurrent_dropout"] = format_double(config.recurrent_dropout);
  provenance["max_epochs"] = std::to_string(config.max_epochs);
  provenance["seed"] = std::to_string(config.seed);

  OptimizerState state = init_optimizer(model);
  const DropoutRates rates{config.dropout, config.recurrent_dropout};

  TrainResult result;
  result.best = model;
  double best_metric = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::vector<Batch> batches =
        make_batches(train_seqs, spec.k, config.batch_size, batch_rng);
    double loss_sum = 0.0;
    std::size_t episode_count = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      ForwardTape tape =
          stack_forward(batch.inputs, model, RunMode::train, &dropout_rng, rates);
      BpttResult back = backward_bptt(model, tape, batch.targets, batch.weights, config.l2);
      if (!std::isfinite(back.total_loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(bi));
      rmsprop_step(model, back.grads, state, config);
      loss_sum += back.total_loss * static_cast<double>(batch.members.size());
      episode_count += batch.members.size();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(episode_count);
    const ValidationScore val = score_validation(model, val_seqs, spec.k);
    entry.val_loss = val.loss;
    entry.val_auroc = val.auroc_final;
    // selection metric: validation AUROC; fall back to -val_loss when the
    // validation split is single-class
    const double metric = val.auroc_final ? *val.auroc_final : -val.loss;
    if (metric > best_metric) {
      best_metric = metric;
      entry.is_best = true;
      result.best = model;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
  }

  result.best.metadata.training["best_epoch"] = std::to_string(result.best_epoch);
  if (result.best_epoch > 0 && result.log[result.best_epoch - 1].val_auroc)
    result.best.metadata.training["best_val_auroc"] =
        format_double(*result.log[result.best_epoch - 1].val_auroc);
  return result;
}

void write_training_log(const std::filesystem::path& path,
                        const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("training log: cannot write " + path.string());
  out << "epoch,train_loss,val_loss,val_auroc,is_best\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.train_loss) << ','
        << format_double(e.val_loss) << ',';
    if (e.val_auroc) out << format_double(*e.val_auroc);
    out << ',' << (e.is_best ? 1 : 0) << '\n';
  }
}

}  // namespace prnn
