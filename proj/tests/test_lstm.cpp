#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "prnn/attention.hpp"
#include "prnn/loss.hpp"
#include "prnn/lstm.hpp"
#include "prnn/perseveration.hpp"
#include "prnn/rng.hpp"

using namespace prnn;

TEST_SUITE_BEGIN("recurrent_core");

namespace {

ModelParams small_model(std::uint64_t seed, std::size_t features,
                        std::vector<std::size_t> hidden, bool attention = false,
                        std::size_t k = 1) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < features; ++i) names.push_back("f" + std::to_string(i));
  return init_model(rng, names, hidden, attention, k);
}

Matrix random_rows(Rng& rng, std::size_t n, std::size_t cols, double scale = 1.0) {
  Matrix m(n, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = scale * (2.0 * rng.next_double() - 1.0);
  return m;
}

struct EpisodeCase {
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
  std::vector<Matrix> weights;
};

// One episode, perseveration-expanded, as a batch of size 1.
EpisodeCase expanded_case(Rng& rng, std::size_t n, std::size_t features, std::size_t k) {
  Matrix raw = random_rows(rng, n, features);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = (rng.next_double() < 0.5) ? 0.0 : 1.0;
  ExpandedSequence e = expand_sequence(raw, targets, k);
  EpisodeCase c;
  c.inputs = rows_as_steps(e.inputs);
  c.targets = scalars_as_steps(e.targets);
  c.weights = scalars_as_steps(build_loss_weights(n, k));
  return c;
}

// Straight-line single-cell oracle: explicit per-element gate arithmetic.
void cell_oracle(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                 const LstmLayerParams& p, Matrix& h_out, Matrix& c_out) {
  const std::size_t B = x.rows(), H = p.hidden_size, in = p.input_size();
  h_out = Matrix(B, H);
  c_out = Matrix(B, H);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      double zi = p.b[h], zf = p.b[H + h], zc = p.b[2 * H + h], zo = p.b[3 * H + h];
      for (std::size_t j = 0; j < in; ++j) {
        zi += x(b, j) * p.W(j, h);
        zf += x(b, j) * p.W(j, H + h);
        zc += x(b, j) * p.W(j, 2 * H + h);
        zo += x(b, j) * p.W(j, 3 * H + h);
      }
      for (std::size_t j = 0; j < H; ++j) {
        zi += h_prev(b, j) * p.U(j, h);
        zf += h_prev(b, j) * p.U(j, H + h);
        zc += h_prev(b, j) * p.U(j, 2 * H + h);
        zo += h_prev(b, j) * p.U(j, 3 * H + h);
      }
      const double gi = 1.0 / (1.0 + std::exp(-zi));
      const double gf = 1.0 / (1.0 + std::exp(-zf));
      const double gc = std::tanh(zc);
      const double go = 1.0 / (1.0 + std::exp(-zo));
      const double c = gf * c_prev(b, h) + gi * gc;
      c_out(b, h) = c;
      h_out(b, h) = go * std::tanh(c);
    }
  }
}

void zero_weights(ModelParams& m) {
  for_each_param(m, [](const std::string&, double* d, std::size_t n) {
    std::fill(d, d + n, 0.0);
  });
}

}  // namespace

TEST_CASE("cell with all-zero parameters gives zero state") {
  ModelParams m = small_model(1, 3, {4});
  zero_weights(m);
  Matrix x(2, 3, 0.7);
  Matrix h0(2, 4), c0(2, 4);
  CellState s = lstm_cell_forward(x, h0, c0, m.layers[0], nullptr, nullptr);
  for (std::size_t i = 0; i < s.h.size(); ++i) {
    CHECK(s.h.data()[i] == 0.0);
    CHECK(s.c.data()[i] == 0.0);
  }
}

TEST_CASE("saturated forget gate passes cell state through exactly") {
  ModelParams m = small_model(2, 3, {4});
  zero_weights(m);
  auto& layer = m.layers[0];
  for (std::size_t h = 0; h < 4; ++h) {
    layer.b[h] = -1000.0;      // i-gate -> 0
    layer.b[4 + h] = 1000.0;   // f-gate -> 1
  }
  Matrix x(1, 3, 0.3);
  Matrix h0(1, 4);
  Matrix c0(1, 4);
  c0(0, 0) = 0.25; c0(0, 1) = -1.5; c0(0, 2) = 3.0; c0(0, 3) = 0.0;
  CellState s = lstm_cell_forward(x, h0, c0, layer, nullptr, nullptr);
  CHECK(s.c == c0);
}

TEST_CASE("cell matches straight-line oracle") {
  ModelParams m = small_model(3, 3, {5});
  Rng rng(40);
  Matrix x = random_rows(rng, 2, 3);
  Matrix h0 = random_rows(rng, 2, 5, 0.5);
  Matrix c0 = random_rows(rng, 2, 5, 0.5);
  CellState got = lstm_cell_forward(x, h0, c0, m.layers[0], nullptr, nullptr);
  Matrix h_want, c_want;
  cell_oracle(x, h0, c0, m.layers[0], h_want, c_want);
  for (std::size_t i = 0; i < got.h.size(); ++i) {
    CHECK(std::abs(got.h.data()[i] - h_want.data()[i]) < 1e-12);
    CHECK(std::abs(got.c.data()[i] - c_want.data()[i]) < 1e-12);
  }
}

TEST_CASE("cell shape mismatch raises") {
  ModelParams m = small_model(4, 3, {4});
  Matrix x(1, 2, 0.0);  // wrong feature count
  Matrix h0(1, 4), c0(1, 4);
  CHECK_THROWS_AS(lstm_cell_forward(x, h0, c0, m.layers[0], nullptr, nullptr),
                  std::invalid_argument);
}

TEST_CASE("zero-weight stack outputs 0.5 everywhere") {
  ModelParams m = small_model(5, 3, {4, 5});
  zero_weights(m);
  Rng rng(6);
  auto inputs = rows_as_steps(random_rows(rng, 7, 3));
  ForwardTape tape = stack_forward(inputs, m, RunMode::infer);
  for (const auto& out : tape.outputs) CHECK(out(0, 0) == 0.5);
}

TEST_CASE("inference is deterministic and in (0,1)") {
  ModelParams m = small_model(8, 4, {5, 3});
  Rng rng(9);
  auto inputs = rows_as_steps(random_rows(rng, 12, 4, 2.0));
  ForwardTape a = stack_forward(inputs, m, RunMode::infer);
  ForwardTape b = stack_forward(inputs, m, RunMode::infer);
  for (std::size_t t = 0; t < a.outputs.size(); ++t) {
    CHECK(a.outputs[t] == b.outputs[t]);
    CHECK(a.outputs[t](0, 0) > 0.0);
    CHECK(a.outputs[t](0, 0) < 1.0);
  }
}

TEST_CASE("train mode with p=0 equals inference exactly") {
  ModelParams m = small_model(10, 3, {4, 4});
  Rng rng(11);
  auto inputs = rows_as_steps(random_rows(rng, 6, 3));
  Rng drop(123);
  ForwardTape train = stack_forward(inputs, m, RunMode::train, &drop, {0.0, 0.0});
  ForwardTape infer = stack_forward(inputs, m, RunMode::infer);
  for (std::size_t t = 0; t < train.outputs.size(); ++t)
    CHECK(train.outputs[t] == infer.outputs[t]);
}

TEST_CASE("empty sequence is an argument error") {
  ModelParams m = small_model(12, 3, {4});
  std::vector<Matrix> empty;
  CHECK_THROWS_AS(stack_forward(empty, m, RunMode::infer), std::invalid_argument);
}

TEST_CASE("zero loss weights leave only the L2 gradient") {
  ModelParams m = small_model(13, 3, {4});
  Rng rng(14);
  auto inputs = rows_as_steps(random_rows(rng, 5, 3));
  std::vector<double> zeros(5, 0.0), ones(5, 1.0);
  auto targets = scalars_as_steps(ones);
  auto weights = scalars_as_steps(zeros);
  const double l2 = 1e-3;
  ForwardTape tape = stack_forward(inputs, m, RunMode::train, nullptr, {});
  BpttResult res = backward_bptt(m, tape, targets, weights, l2);
  CHECK(res.data_loss == 0.0);

  auto check_l2_only = [&](const Matrix& w, const Matrix& g) {
    for (std::size_t i = 0; i < w.size(); ++i)
      CHECK(g.data()[i] == doctest::Approx(2.0 * l2 * w.data()[i]).epsilon(1e-12));
  };
  check_l2_only(m.layers[0].W, res.grads.layers[0].W);
  check_l2_only(m.layers[0].U, res.grads.layers[0].U);
  check_l2_only(m.head_w, res.grads.head_w);
  for (double b : res.grads.layers[0].b) CHECK(b == 0.0);
  CHECK(res.grads.head_b == 0.0);
}

TEST_CASE("single step reduces to logistic regression gradient") {
  ModelParams m = small_model(15, 2, {3});
  Rng rng(16);
  auto inputs = rows_as_steps(random_rows(rng, 1, 2));
  std::vector<double> y{1.0}, w{1.0};
  ForwardTape tape = stack_forward(inputs, m, RunMode::infer);
  BpttResult res = backward_bptt(m, tape, scalars_as_steps(y), scalars_as_steps(w), 0.0);
  const double yhat = tape.outputs[0](0, 0);
  const Matrix& h = tape.hiddens[0].back();
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(res.grads.head_w(i, 0) == doctest::Approx((yhat - 1.0) * h(0, i)).epsilon(1e-9));
  CHECK(res.grads.head_b == doctest::Approx(yhat - 1.0).epsilon(1e-9));
}

TEST_CASE("full BPTT matches finite differences on a 3-layer net") {
  ModelParams m = small_model(17, 3, {4, 5, 3});
  Rng rng(18);
  EpisodeCase c = expanded_case(rng, 6, 3, 3);
  GradCheckReport report = gradient_check(m, c.inputs, c.targets, c.weights, 1e-4,
                                          {0.0, 0.0}, nullptr);
  INFO("worst param ", report.worst_param, " rel err ", report.worst_rel_error);
  CHECK(report.worst_rel_error < 1e-4);
  CHECK(report.checked > 400);
}

TEST_CASE("gradient check passes with replayed dropout masks") {
  ModelParams m = small_model(19, 3, {4, 5, 3});
  Rng rng(20);
  EpisodeCase c = expanded_case(rng, 6, 3, 3);
  Rng drop(21);
  GradCheckReport report = gradient_check(m, c.inputs, c.targets, c.weights, 1e-4,
                                          {0.2, 0.2}, &drop);
  INFO("worst param ", report.worst_param, " rel err ", report.worst_rel_error);
  CHECK(report.worst_rel_error < 1e-4);
}

TEST_CASE("harness detects a corrupted gradient") {
  ModelParams m = small_model(22, 3, {4});
  Rng rng(23);
  EpisodeCase c = expanded_case(rng, 4, 3, 2);

  std::vector<Matrix> imasks, rmasks;  // none: replay-free path via ones
  ForwardTape tape = stack_forward(c.inputs, m, RunMode::infer);
  BpttResult res = backward_bptt(m, tape, c.targets, c.weights, 0.0);

  // corrupt one weight's analytic gradient by +1e-3 and recheck numerically
  const double corrupted = res.grads.layers[0].W(0, 0) + 1e-3;
  ModelParams work = m;
  const double step = 1e-5;
  const double orig = work.layers[0].W(0, 0);
  work.layers[0].W(0, 0) = orig + step;
  const double lp = forward_loss_with_masks(work, c.inputs, c.targets, c.weights, 0.0,
                                            imasks, rmasks);
  work.layers[0].W(0, 0) = orig - step;
  const double lm = forward_loss_with_masks(work, c.inputs, c.targets, c.weights, 0.0,
                                            imasks, rmasks);
  const double numeric = (lp - lm) / (2.0 * step);
  const double rel =
      std::abs(numeric - corrupted) / std::max(1e-4, std::abs(numeric) + std::abs(corrupted));
  CHECK(rel > 1e-4);
}

TEST_CASE("causality: future perturbations never change earlier outputs") {
  ModelParams m = small_model(24, 4, {5, 4});
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix raw = random_rows(rng, 9, 4);
    auto inputs = rows_as_steps(raw);
    ForwardTape base = stack_forward(inputs, m, RunMode::infer);
    const std::size_t j = 1 + static_cast<std::size_t>(rng.next_below(8));
    Matrix perturbed = raw;
    perturbed(j, static_cast<std::size_t>(rng.next_below(4))) += 10.0;
    ForwardTape after = stack_forward(rows_as_steps(perturbed), m, RunMode::infer);
    for (std::size_t t = 0; t < j; ++t) CHECK(base.outputs[t] == after.outputs[t]);
  }
}

TEST_CASE("checkpoint round-trips parameters and metadata") {
  ModelParams m = small_model(26, 4, {4, 5, 3}, false, 3);
  m.metadata.training["learning_rate"] = "1e-05";
  const auto path = std::filesystem::temp_directory_path() / "prnn_ckpt_test.json";
  save_checkpoint(path, m);
  ModelParams loaded = load_checkpoint(path);
  CHECK(loaded.metadata.variant == "prnn");
  CHECK(loaded.metadata.k == 3);
  CHECK(loaded.metadata.seed == m.metadata.seed);
  CHECK(loaded.metadata.training.at("learning_rate") == "1e-05");
  CHECK(loaded.metadata.feature_names == m.metadata.feature_names);
  CHECK(loaded.layers.size() == 3);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(loaded.layers[l].W == m.layers[l].W);
    CHECK(loaded.layers[l].U == m.layers[l].U);
    CHECK(loaded.layers[l].b == m.layers[l].b);
  }
  CHECK(loaded.head_w == m.head_w);
  CHECK(loaded.head_b == m.head_b);
  std::filesystem::remove(path);
}

TEST_CASE("attention checkpoint round-trips") {
  ModelParams m = small_model(27, 3, {4, 3}, true, 1);
  const auto path = std::filesystem::temp_directory_path() / "prnn_ckpt_attn.json";
  save_checkpoint(path, m);
  ModelParams loaded = load_checkpoint(path);
  REQUIRE(loaded.attention.has_value());
  CHECK(loaded.attention->w_out == m.attention->w_out);
  CHECK(loaded.attention->b_out == m.attention->b_out);
  CHECK(loaded.head_w.empty());
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoint raises a parse error") {
  const auto path = std::filesystem::temp_directory_path() / "prnn_ckpt_bad.json";
  std::ofstream(path) << "{\"kind\": \"prnn-checkpoint\", \"format_version\"";
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);  // missing file
}

TEST_CASE("forget-gate bias block is initialized to 1") {
  ModelParams m = small_model(28, 3, {6, 4});
  for (const auto& layer : m.layers) {
    const std::size_t H = layer.hidden_size;
    for (std::size_t h = 0; h < 4 * H; ++h) {
      const bool forget_block = h >= H && h < 2 * H;
      CHECK(layer.b[h] == (forget_block ? 1.0 : 0.0));
    }
  }
}

TEST_SUITE_END();
