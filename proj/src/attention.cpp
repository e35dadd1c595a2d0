#include "prnn/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace prnn {

namespace {

void check_params(const AttentionParams& params, std::size_t hidden) {
  if (params.w_out.rows() != 2 * hidden || params.w_out.cols() != 1)
    throw std::invalid_argument(
        "attention: w_out is " + std::to_string(params.w_out.rows()) + "x" +
        std::to_string(params.w_out.cols()) + ", expected " +
        std::to_string(2 * hidden) + "x1");
}

}  // namespace

AttentionTape causal_attention_forward(const std::vector<Matrix>& hiddens,
                                       const AttentionParams& params) {
  if (hiddens.empty())
    throw std::invalid_argument("causal_attention_forward: empty sequence");
  const std::size_t steps = hiddens.size();
  const std::size_t batch = hiddens.front().rows();
  const std::size_t hidden = hiddens.front().cols();
  check_params(params, hidden);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));

  AttentionTape tape;
  tape.alphas.assign(batch, {});
  for (auto& per_row : tape.alphas) per_row.reserve(steps);
  tape.contexts.reserve(steps);
  tape.outputs.reserve(steps);

  std::vector<double> scores;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix context(batch, hidden);
    Matrix out(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto ht = hiddens[t].row(b);
      scores.assign(t + 1, 0.0);
      double max_score = -1e300;
      for (std::size_t j = 0; j <= t; ++j) {
        const auto hj = hiddens[j].row(b);
        double dot = 0.0;
        for (std::size_t h = 0; h < hidden; ++h) dot += ht[h] * hj[h];
        scores[j] = dot * scale;
        max_score = std::max(max_score, scores[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j <= t; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      for (std::size_t j = 0; j <= t; ++j) scores[j] /= denom;

      auto ctx = context.row(b);
      for (std::size_t j = 0; j <= t; ++j) {
        const auto hj = hiddens[j].row(b);
        for (std::size_t h = 0; h < hidden; ++h) ctx[h] += scores[j] * hj[h];
      }
      double logit = params.b_out;
      for (std::size_t h = 0; h < hidden; ++h) {
        logit += params.w_out(h, 0) * ht[h];
        logit += params.w_out(hidden + h, 0) * ctx[h];
      }
      out(b, 0) = sigmoid(logit);
      tape.alphas[b].push_back(scores);
    }
    tape.contexts.push_back(std::move(context));
    tape.outputs.push_back(std::move(out));
  }
  return tape;
}

std::vector<Matrix> causal_attention_backward(const std::vector<Matrix>& hiddens,
                                              const AttentionTape& tape,
                                              const std::vector<Matrix>& upstream_dy,
                                              const AttentionParams& params,
                                              AttentionParams& grads) {
  const std::size_t steps = hiddens.size();
  if (tape.outputs.size() != steps || upstream_dy.size() != steps)
    throw std::invalid_argument("causal_attention_backward: tape/upstream length mismatch");
  const std::size_t batch = hiddens.front().rows();
  const std::size_t hidden = hiddens.front().cols();
  check_params(params, hidden);
  if (grads.w_out.rows() != 2 * hidden || grads.w_out.cols() != 1)
    throw std::invalid_argument("causal_attention_backward: gradient shape mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));

  std::vector<Matrix> dh(steps, Matrix(batch, hidden));
  std::vector<double> dcontext(hidden);
  std::vector<double> dalpha;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double yhat = tape.outputs[t](b, 0);
      const double dlogit = upstream_dy[t](b, 0) * yhat * (1.0 - yhat);
      const auto ht = hiddens[t].row(b);
      const auto ctx = tape.contexts[t].row(b);
      for (std::size_t h = 0; h < hidden; ++h) {
        grads.w_out(h, 0) += ht[h] * dlogit;
        grads.w_out(hidden + h, 0) += ctx[h] * dlogit;
        dh[t](b, h) += params.w_out(h, 0) * dlogit;
        dcontext[h] = params.w_out(hidden + h, 0) * dlogit;
      }
      grads.b_out += dlogit;

      const auto& alpha = tape.alphas[b][t];
      dalpha.assign(t + 1, 0.0);
      for (std::size_t j = 0; j <= t; ++j) {
        const auto hj = hiddens[j].row(b);
        double acc = 0.0;
        for (std::size_t h = 0; h < hidden; ++h) {
          acc += dcontext[h] * hj[h];
          dh[j](b, h) += alpha[j] * dcontext[h];
        }
        dalpha[j] = acc;
      }
      double alpha_dot = 0.0;
      for (std::size_t j = 0; j <= t; ++j) alpha_dot += alpha[j] * dalpha[j];
      for (std::size_t j = 0; j <= t; ++j) {
        const double dscore = alpha[j] * (dalpha[j] - alpha_dot) * scale;
        const auto hj = hiddens[j].row(b);
        for (std::size_t h = 0; h < hidden; ++h) {
          dh[t](b, h) += dscore * hj[h];
          dh[j](b, h) += dscore * ht[h];
        }
      }
    }
  }
  return dh;
}

}  // namespace prnn
