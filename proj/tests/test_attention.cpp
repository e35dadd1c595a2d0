#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prnn/attention.hpp"
#include "prnn/lstm.hpp"
#include "prnn/perseveration.hpp"
#include "prnn/rng.hpp"

using namespace prnn;

TEST_SUITE_BEGIN("attention");

namespace {

std::vector<Matrix> random_hiddens(Rng& rng, std::size_t steps, std::size_t batch,
                                   std::size_t hidden) {
  std::vector<Matrix> h(steps, Matrix(batch, hidden));
  for (auto& m : h)
    for (std::size_t i = 0; i < m.size(); ++i)
      m.data()[i] = 2.0 * rng.next_double() - 1.0;
  return h;
}

AttentionParams random_params(Rng& rng, std::size_t hidden) {
  AttentionParams p;
  p.w_out = glorot_uniform(rng, 2 * hidden, 1);
  p.b_out = 0.1;
  return p;
}

}  // namespace

TEST_CASE("singleton sequence attends to itself") {
  Rng rng(1);
  auto h = random_hiddens(rng, 1, 2, 4);
  AttentionParams p = random_params(rng, 4);
  AttentionTape tape = causal_attention_forward(h, p);
  for (std::size_t b = 0; b < 2; ++b) {
    REQUIRE(tape.alphas[b][0].size() == 1);
    CHECK(tape.alphas[b][0][0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(tape.contexts[0] == h[0]);
}

TEST_CASE("identical hidden states give the shared vector as context") {
  Rng rng(2);
  Matrix h0(1, 3);
  h0(0, 0) = 0.4; h0(0, 1) = -0.2; h0(0, 2) = 0.9;
  std::vector<Matrix> h(5, h0);
  AttentionParams p = random_params(rng, 3);
  AttentionTape tape = causal_attention_forward(h, p);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(tape.contexts[t](0, j) == doctest::Approx(h0(0, j)).epsilon(1e-12));
}

TEST_CASE("attention weights are a distribution at every step") {
  Rng rng(3);
  auto h = random_hiddens(rng, 8, 3, 5);
  AttentionParams p = random_params(rng, 5);
  AttentionTape tape = causal_attention_forward(h, p);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t t = 0; t < 8; ++t) {
      double sum = 0.0;
      for (double a : tape.alphas[b][t]) {
        CHECK(a >= 0.0);
        sum += a;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("future hidden states cannot change earlier outputs") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto h = random_hiddens(rng, 7, 1, 4);
    AttentionParams p = random_params(rng, 4);
    AttentionTape base = causal_attention_forward(h, p);
    const std::size_t j = 1 + static_cast<std::size_t>(rng.next_below(6));
    auto perturbed = h;
    perturbed[j](0, static_cast<std::size_t>(rng.next_below(4))) += 5.0;
    AttentionTape after = causal_attention_forward(perturbed, p);
    for (std::size_t t = 0; t < j; ++t) CHECK(base.outputs[t] == after.outputs[t]);
  }
}

TEST_CASE("empty input is an argument error") {
  AttentionParams p;
  p.w_out = Matrix(4, 1);
  std::vector<Matrix> none;
  CHECK_THROWS_AS(causal_attention_forward(none, p), std::invalid_argument);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  Rng rng(5);
  auto h = random_hiddens(rng, 4, 2, 3);
  AttentionParams p = random_params(rng, 3);
  AttentionTape tape = causal_attention_forward(h, p);
  std::vector<Matrix> dy(4, Matrix(2, 1, 0.0));
  AttentionParams grads;
  grads.w_out = Matrix(6, 1);
  grads.b_out = 0.0;
  auto dh = causal_attention_backward(h, tape, dy, p, grads);
  for (std::size_t i = 0; i < grads.w_out.size(); ++i)
    CHECK(grads.w_out.data()[i] == 0.0);
  CHECK(grads.b_out == 0.0);
  for (const auto& m : dh)
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.data()[i] == 0.0);
}

TEST_CASE("singleton backward reduces to a dense layer over [h;h]") {
  Rng rng(6);
  const std::size_t H = 4;
  auto h = random_hiddens(rng, 1, 1, H);
  AttentionParams p = random_params(rng, H);
  AttentionTape tape = causal_attention_forward(h, p);
  std::vector<Matrix> dy(1, Matrix(1, 1, 0.7));
  AttentionParams grads;
  grads.w_out = Matrix(2 * H, 1);
  auto dh = causal_attention_backward(h, tape, dy, p, grads);

  // independent straight-line oracle for ŷ = σ(w·[h;h] + b)
  double logit = p.b_out;
  for (std::size_t i = 0; i < H; ++i)
    logit += (p.w_out(i, 0) + p.w_out(H + i, 0)) * h[0](0, i);
  const double yhat = 1.0 / (1.0 + std::exp(-logit));
  const double dlogit = 0.7 * yhat * (1.0 - yhat);
  CHECK(tape.outputs[0](0, 0) == doctest::Approx(yhat).epsilon(1e-12));
  for (std::size_t i = 0; i < H; ++i) {
    CHECK(grads.w_out(i, 0) == doctest::Approx(h[0](0, i) * dlogit).epsilon(1e-12));
    CHECK(grads.w_out(H + i, 0) == doctest::Approx(h[0](0, i) * dlogit).epsilon(1e-12));
    CHECK(dh[0](0, i) ==
          doctest::Approx((p.w_out(i, 0) + p.w_out(H + i, 0)) * dlogit).epsilon(1e-12));
  }
  CHECK(grads.b_out == doctest::Approx(dlogit).epsilon(1e-12));
}

TEST_CASE("full attention model passes the finite-difference check") {
  Rng init(7);
  std::vector<std::string> names{"f0", "f1", "f2"};
  ModelParams m = init_model(init, names, {4, 5, 3}, true, 1);
  Rng rng(8);
  Matrix raw(6, 3);
  for (std::size_t i = 0; i < raw.size(); ++i) raw.data()[i] = 2.0 * rng.next_double() - 1.0;
  std::vector<double> targets{1, 0, 1, 1, 0, 1};
  auto inputs = rows_as_steps(raw);
  auto tg = scalars_as_steps(targets);
  auto w = scalars_as_steps(build_loss_weights(6, 1));
  GradCheckReport report = gradient_check(m, inputs, tg, w, 1e-4, {0.0, 0.0}, nullptr);
  INFO("worst param ", report.worst_param, " rel err ", report.worst_rel_error);
  CHECK(report.worst_rel_error < 1e-4);

  Rng drop(9);
  GradCheckReport with_dropout =
      gradient_check(m, inputs, tg, w, 1e-4, {0.2, 0.2}, &drop);
  INFO("worst param ", with_dropout.worst_param, " rel err ",
       with_dropout.worst_rel_error);
  CHECK(with_dropout.worst_rel_error < 1e-4);
}

TEST_CASE("attention variant requires k=1") {
  Rng rng(10);
  std::vector<std::string> names{"a", "b"};
  CHECK_THROWS_AS(init_model(rng, names, {4}, true, 3), std::invalid_argument);
}

TEST_SUITE_END();
