#include "prnn/lstm.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>

#include "prnn/attention.hpp"
#include "prnn/loss.hpp"
#include "prnn/perseveration.hpp"

namespace prnn {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

// dst = src ⊙ mask, or a plain copy when mask is null.
void apply_mask(Matrix& dst, const Matrix& src, const Matrix* mask) {
  dst = src;
  if (!mask) return;
  if (mask->rows() != src.rows() || mask->cols() != src.cols())
    throw std::invalid_argument("dropout mask shape " +
                                shape_str(mask->rows(), mask->cols()) + " vs input " +
                                shape_str(src.rows(), src.cols()));
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] *= mask->data()[i];
}

// Z = b + x̃·W + h̃·U, gate blocks activated in place (i,f,o sigmoid, c̃ tanh).
void gate_activations(const LstmLayerParams& p, const Matrix& x_masked,
                      const Matrix& h_masked, Matrix& acts) {
  const std::size_t batch = x_masked.rows();
  const std::size_t hidden = p.hidden_size;
  acts = Matrix(batch, 4 * hidden);
  for (std::size_t b = 0; b < batch; ++b)
    std::memcpy(acts.row(b).data(), p.b.data(), 4 * hidden * sizeof(double));
  matmul_acc(acts, x_masked, p.W);
  matmul_acc(acts, h_masked, p.U);
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = acts.row(b);
    for (std::size_t h = 0; h < hidden; ++h) row[h] = sigmoid(row[h]);
    for (std::size_t h = hidden; h < 2 * hidden; ++h) row[h] = sigmoid(row[h]);
    for (std::size_t h = 2 * hidden; h < 3 * hidden; ++h) row[h] = std::tanh(row[h]);
    for (std::size_t h = 3 * hidden; h < 4 * hidden; ++h) row[h] = sigmoid(row[h]);
  }
}

void cell_update(const Matrix& acts, const Matrix& c_prev, std::size_t hidden, Matrix& c_t,
                 Matrix& tanh_c, Matrix& h_t) {
  const std::size_t batch = acts.rows();
  c_t = Matrix(batch, hidden);
  tanh_c = Matrix(batch, hidden);
  h_t = Matrix(batch, hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto g = acts.row(b);
    for (std::size_t h = 0; h < hidden; ++h) {
      const double c = g[hidden + h] * c_prev(b, h) + g[h] * g[2 * hidden + h];
      c_t(b, h) = c;
      const double tc = std::tanh(c);
      tanh_c(b, h) = tc;
      h_t(b, h) = g[3 * hidden + h] * tc;
    }
  }
}

void make_dropout_masks(const ModelParams& params, std::size_t batch,
                        const DropoutRates& rates, Rng* rng,
                        std::vector<Matrix>& input_masks,
                        std::vector<Matrix>& recurrent_masks) {
  if ((rates.input > 0.0 || rates.recurrent > 0.0) && rng == nullptr)
    throw std::invalid_argument("stack_forward: dropout requested without an rng");
  auto draw = [&](std::size_t rows, std::size_t cols, double rate) {
    Matrix m(rows, cols, 1.0);
    if (rate > 0.0) {
      const double scale = 1.0 / (1.0 - rate);
      for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = rng->next_double() >= rate ? scale : 0.0;
    }
    return m;
  };
  input_masks.clear();
  recurrent_masks.clear();
  for (const auto& layer : params.layers) {
    input_masks.push_back(draw(batch, layer.input_size(), rates.input));
    recurrent_masks.push_back(draw(batch, layer.hidden_size, rates.recurrent));
  }
}

ForwardTape run_forward(const std::vector<Matrix>& inputs, const ModelParams& params,
                        RunMode mode, std::vector<Matrix> input_masks,
                        std::vector<Matrix> recurrent_masks) {
  validate_model(params);
  if (inputs.empty()) throw std::invalid_argument("stack_forward: empty sequence");
  const std::size_t steps = inputs.size();
  const std::size_t batch = inputs.front().rows();
  const std::size_t layer_count = params.layers.size();
  for (const auto& x : inputs) {
    if (x.rows() != batch || x.cols() != params.input_size())
      throw std::invalid_argument("stack_forward: step shape " +
                                  shape_str(x.rows(), x.cols()) + ", expected " +
                                  shape_str(batch, params.input_size()));
  }
  const bool masked = !input_masks.empty();
  if (masked && (input_masks.size() != layer_count || recurrent_masks.size() != layer_count))
    throw std::invalid_argument("stack_forward: one mask pair per layer required");

  ForwardTape tape;
  tape.mode = mode;
  tape.inputs = inputs;
  tape.input_masks = std::move(input_masks);
  tape.recurrent_masks = std::move(recurrent_masks);
  tape.acts.assign(steps, {});
  tape.cells.assign(steps, {});
  tape.tanh_cells.assign(steps, {});
  tape.hiddens.assign(steps, {});
  for (std::size_t t = 0; t < steps; ++t) {
    tape.acts[t].resize(layer_count);
    tape.cells[t].resize(layer_count);
    tape.tanh_cells[t].resize(layer_count);
    tape.hiddens[t].resize(layer_count);
  }

  Matrix x_masked, h_masked;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t l = 0; l < layer_count; ++l) {
      const auto& layer = params.layers[l];
      const Matrix& x_in = (l == 0) ? tape.inputs[t] : tape.hiddens[t][l - 1];
      const Matrix zero_state(batch, layer.hidden_size);
      const Matrix& h_prev = (t == 0) ? zero_state : tape.hiddens[t - 1][l];
      const Matrix& c_prev = (t == 0) ? zero_state : tape.cells[t - 1][l];
      apply_mask(x_masked, x_in, masked ? &tape.input_masks[l] : nullptr);
      apply_mask(h_masked, h_prev, masked ? &tape.recurrent_masks[l] : nullptr);
      gate_activations(layer, x_masked, h_masked, tape.acts[t][l]);
      cell_update(tape.acts[t][l], c_prev, layer.hidden_size, tape.cells[t][l],
                  tape.tanh_cells[t][l], tape.hiddens[t][l]);
    }
  }

  if (params.attention) {
    std::vector<Matrix> last_hiddens(steps);
    for (std::size_t t = 0; t < steps; ++t) last_hiddens[t] = tape.hiddens[t].back();
    tape.attention = causal_attention_forward(last_hiddens, *params.attention);
    tape.outputs = tape.attention->outputs;
  } else {
    tape.outputs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      Matrix out(batch, 1, params.head_b);
      matmul_acc(out, tape.hiddens[t].back(), params.head_w);
      for (std::size_t b = 0; b < batch; ++b) out(b, 0) = sigmoid(out(b, 0));
      tape.outputs.push_back(std::move(out));
    }
  }
  return tape;
}

double l2_penalty(const ModelParams& params, double l2) {
  if (l2 == 0.0) return 0.0;
  double sum = 0.0;
  auto add = [&sum](const Matrix& w) {
    for (std::size_t i = 0; i < w.size(); ++i) sum += w.data()[i] * w.data()[i];
  };
  for (const auto& layer : params.layers) {
    add(layer.W);
    add(layer.U);
  }
  add(params.head_w);
  if (params.attention) add(params.attention->w_out);
  return l2 * sum;
}

void add_l2_gradients(const ModelParams& params, double l2, Gradients& grads) {
  if (l2 == 0.0) return;
  auto add = [l2](const Matrix& w, Matrix& g) {
    for (std::size_t i = 0; i < w.size(); ++i) g.data()[i] += 2.0 * l2 * w.data()[i];
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    add(params.layers[l].W, grads.layers[l].W);
    add(params.layers[l].U, grads.layers[l].U);
  }
  if (!params.head_w.empty()) add(params.head_w, grads.head_w);
  if (params.attention) add(params.attention->w_out, grads.attention->w_out);
}

double weighted_bce(const std::vector<Matrix>& outputs, const std::vector<Matrix>& targets,
                    const std::vector<Matrix>& weights) {
  double loss = 0.0;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    for (std::size_t b = 0; b < outputs[t].rows(); ++b) {
      const double w = weights[t](b, 0);
      if (w != 0.0) loss += w * bce_term(outputs[t](b, 0), targets[t](b, 0));
    }
  }
  return loss;
}

void check_target_shapes(const ForwardTape& tape, const std::vector<Matrix>& targets,
                         const std::vector<Matrix>& weights) {
  if (targets.size() != tape.steps() || weights.size() != tape.steps())
    throw std::invalid_argument("backward_bptt: tape has " + std::to_string(tape.steps()) +
                                " steps, targets " + std::to_string(targets.size()) +
                                ", weights " + std::to_string(weights.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t].rows() != tape.batch() || targets[t].cols() != 1 ||
        weights[t].rows() != tape.batch() || weights[t].cols() != 1)
      throw std::invalid_argument("backward_bptt: targets/weights must be batch×1");
  }
}

}  // namespace

std::vector<std::size_t> ModelParams::hidden_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(layers.size());
  for (const auto& l : layers) sizes.push_back(l.hidden_size);
  return sizes;
}

Gradients zero_gradients(const ModelParams& p) {
  Gradients g;
  g.layers.reserve(p.layers.size());
  for (const auto& layer : p.layers) {
    LstmLayerParams zl;
    zl.W = Matrix(layer.W.rows(), layer.W.cols());
    zl.U = Matrix(layer.U.rows(), layer.U.cols());
    zl.b.assign(layer.b.size(), 0.0);
    zl.hidden_size = layer.hidden_size;
    g.layers.push_back(std::move(zl));
  }
  g.head_w = Matrix(p.head_w.rows(), p.head_w.cols());
  g.head_b = 0.0;
  if (p.attention) {
    AttentionParams za;
    za.w_out = Matrix(p.attention->w_out.rows(), p.attention->w_out.cols());
    za.b_out = 0.0;
    g.attention = std::move(za);
  }
  return g;
}

ModelParams init_model(Rng& rng, const std::vector<std::string>& feature_names,
                       const std::vector<std::size_t>& hidden_sizes, bool with_attention,
                       std::size_t k) {
  if (feature_names.empty()) throw std::invalid_argument("init_model: no input features");
  if (hidden_sizes.empty()) throw std::invalid_argument("init_model: no hidden layers");
  validate_k(k);
  if (with_attention && k != 1)
    throw std::invalid_argument("init_model: the attention variant requires k=1");

  ModelParams p;
  std::size_t in = feature_names.size();
  for (std::size_t hidden : hidden_sizes) {
    if (hidden == 0) throw std::invalid_argument("init_model: zero hidden size");
    LstmLayerParams layer;
    layer.hidden_size = hidden;
    layer.W = glorot_uniform(rng, in, 4 * hidden);
    layer.U = glorot_uniform(rng, hidden, 4 * hidden);
    layer.b.assign(4 * hidden, 0.0);
    for (std::size_t h = hidden; h < 2 * hidden; ++h) layer.b[h] = 1.0;
    p.layers.push_back(std::move(layer));
    in = hidden;
  }
  if (with_attention) {
    AttentionParams a;
    a.w_out = glorot_uniform(rng, 2 * p.last_hidden(), 1);
    a.b_out = 0.0;
    p.attention = std::move(a);
    p.metadata.variant = "attention";
  } else {
    p.head_w = glorot_uniform(rng, p.last_hidden(), 1);
    p.head_b = 0.0;
    p.metadata.variant = "prnn";
  }
  p.metadata.k = k;
  p.metadata.seed = rng.seed();
  p.metadata.feature_names = feature_names;
  validate_model(p);
  return p;
}

void validate_model(const ModelParams& p) {
  if (p.layers.empty()) throw std::invalid_argument("model: no LSTM layers");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const std::size_t hidden = layer.hidden_size;
    if (hidden == 0) throw std::invalid_argument("model: zero hidden size");
    if (layer.W.cols() != 4 * hidden || layer.U.rows() != hidden ||
        layer.U.cols() != 4 * hidden || layer.b.size() != 4 * hidden)
      throw std::invalid_argument("model: layer " + std::to_string(l) +
                                  " gate blocks do not match hidden size " +
                                  std::to_string(hidden));
    if (l > 0 && layer.input_size() != p.layers[l - 1].hidden_size)
      throw std::invalid_argument("model: layer " + std::to_string(l) + " input size " +
                                  std::to_string(layer.input_size()) +
                                  " does not chain from previous hidden size " +
                                  std::to_string(p.layers[l - 1].hidden_size));
  }
  if (p.attention) {
    if (!p.head_w.empty())
      throw std::invalid_argument("model: attention variant must not carry a dense head");
    if (p.attention->w_out.rows() != 2 * p.last_hidden() || p.attention->w_out.cols() != 1)
      throw std::invalid_argument("model: attention w_out must be " +
                                  std::to_string(2 * p.last_hidden()) + "x1");
  } else {
    if (p.head_w.rows() != p.last_hidden() || p.head_w.cols() != 1)
      throw std::invalid_argument("model: head must map last hidden size " +
                                  std::to_string(p.last_hidden()) + " to 1");
  }
}

CellState lstm_cell_forward(const Matrix& x_t, const Matrix& h_prev, const Matrix& c_prev,
                            const LstmLayerParams& params, const Matrix* input_mask,
                            const Matrix* recurrent_mask, Matrix* acts_out) {
  if (x_t.cols() != params.input_size() || h_prev.cols() != params.hidden_size ||
      c_prev.cols() != params.hidden_size || x_t.rows() != h_prev.rows() ||
      x_t.rows() != c_prev.rows())
    throw std::invalid_argument("lstm_cell_forward: input " +
                                shape_str(x_t.rows(), x_t.cols()) + ", state " +
                                shape_str(h_prev.rows(), h_prev.cols()) +
                                " inconsistent with layer (in=" +
                                std::to_string(params.input_size()) + ", hidden=" +
                                std::to_string(params.hidden_size) + ")");
  Matrix x_masked, h_masked, acts;
  apply_mask(x_masked, x_t, input_mask);
  apply_mask(h_masked, h_prev, recurrent_mask);
  gate_activations(params, x_masked, h_masked, acts);
  CellState state;
  Matrix tanh_c;
  cell_update(acts, c_prev, params.hidden_size, state.c, tanh_c, state.h);
  if (acts_out) *acts_out = std::move(acts);
  return state;
}

ForwardTape stack_forward(const std::vector<Matrix>& inputs, const ModelParams& params,
                          RunMode mode, Rng* dropout_rng, const DropoutRates& rates) {
  std::vector<Matrix> input_masks, recurrent_masks;
  if (mode == RunMode::train) {
    if (inputs.empty()) throw std::invalid_argument("stack_forward: empty sequence");
    make_dropout_masks(params, inputs.front().rows(), rates, dropout_rng, input_masks,
                       recurrent_masks);
  }
  return run_forward(inputs, params, mode, std::move(input_masks),
                     std::move(recurrent_masks));
}

ForwardTape stack_forward_with_masks(const std::vector<Matrix>& inputs,
                                     const ModelParams& params,
                                     std::vector<Matrix> input_masks,
                                     std::vector<Matrix> recurrent_masks) {
  return run_forward(inputs, params, RunMode::train, std::move(input_masks),
                     std::move(recurrent_masks));
}

BpttResult backward_bptt(const ModelParams& params, const ForwardTape& tape,
                         const std::vector<Matrix>& targets,
                         const std::vector<Matrix>& weights, double l2) {
  check_target_shapes(tape, targets, weights);
  const std::size_t steps = tape.steps();
  const std::size_t batch = tape.batch();
  const std::size_t layer_count = params.layers.size();
  const bool masked = !tape.input_masks.empty();

  BpttResult result;
  result.grads = zero_gradients(params);
  result.data_loss = weighted_bce(tape.outputs, targets, weights);
  result.total_loss = result.data_loss + l2_penalty(params, l2);

  // dL/dh injected at the last layer per step, from the dense or attention head.
  std::vector<Matrix> dh_head;
  if (params.attention) {
    std::vector<Matrix> dy(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      dy[t] = Matrix(batch, 1);
      for (std::size_t b = 0; b < batch; ++b) {
        const double w = weights[t](b, 0);
        dy[t](b, 0) =
            w == 0.0 ? 0.0 : w * bce_dyhat(tape.outputs[t](b, 0), targets[t](b, 0));
      }
    }
    std::vector<Matrix> last_hiddens(steps);
    for (std::size_t t = 0; t < steps; ++t) last_hiddens[t] = tape.hiddens[t].back();
    dh_head = causal_attention_backward(last_hiddens, *tape.attention, dy,
                                        *params.attention, *result.grads.attention);
  } else {
    dh_head.assign(steps, Matrix(batch, params.last_hidden()));
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t b = 0; b < batch; ++b) {
        const double w = weights[t](b, 0);
        if (w == 0.0) continue;
        const double yhat = tape.outputs[t](b, 0);
        const double dlogit =
            w * bce_dyhat(yhat, targets[t](b, 0)) * yhat * (1.0 - yhat);
        result.grads.head_b += dlogit;
        for (std::size_t h = 0; h < params.last_hidden(); ++h) {
          result.grads.head_w(h, 0) += tape.hiddens[t].back()(b, h) * dlogit;
          dh_head[t](b, h) = params.head_w(h, 0) * dlogit;
        }
      }
    }
  }

  std::vector<Matrix> dh_carry, dc_carry;
  for (const auto& layer : params.layers) {
    dh_carry.emplace_back(batch, layer.hidden_size);
    dc_carry.emplace_back(batch, layer.hidden_size);
  }

  Matrix dz, d_input, x_masked, h_masked;
  for (std::size_t t = steps; t-- > 0;) {
    // d_input carries dL/d(input of layer l+1) down the stack within step t.
    bool have_above = false;
    for (std::size_t l = layer_count; l-- > 0;) {
      const auto& layer = params.layers[l];
      const std::size_t hidden = layer.hidden_size;
      Matrix& dh = dh_carry[l];
      if (l == layer_count - 1) {
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] += dh_head[t].data()[i];
      } else if (have_above) {
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] += d_input.data()[i];
      }

      const Matrix zero_state(batch, hidden);
      const Matrix& c_prev = (t == 0) ? zero_state : tape.cells[t - 1][l];
      const Matrix& acts = tape.acts[t][l];
      const Matrix& tanh_c = tape.tanh_cells[t][l];

      dz = Matrix(batch, 4 * hidden);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto g = acts.row(b);
        auto dzr = dz.row(b);
        for (std::size_t h = 0; h < hidden; ++h) {
          const double gi = g[h], gf = g[hidden + h], gc = g[2 * hidden + h],
                       go = g[3 * hidden + h];
          const double tc = tanh_c(b, h);
          const double dht = dh(b, h);
          const double dout = dht * tc;
          const double dct = dc_carry[l](b, h) + dht * go * (1.0 - tc * tc);
          const double di = dct * gc;
          const double dg = dct * gi;
          const double df = dct * c_prev(b, h);
          dc_carry[l](b, h) = dct * gf;
          dzr[h] = di * gi * (1.0 - gi);
          dzr[hidden + h] = df * gf * (1.0 - gf);
          dzr[2 * hidden + h] = dg * (1.0 - gc * gc);
          dzr[3 * hidden + h] = dout * go * (1.0 - go);
        }
      }

      const Matrix& x_in = (l == 0) ? tape.inputs[t] : tape.hiddens[t][l - 1];
      const Matrix& h_prev =
          (t == 0) ? zero_state : tape.hiddens[t - 1][l];
      apply_mask(x_masked, x_in, masked ? &tape.input_masks[l] : nullptr);
      apply_mask(h_masked, h_prev, masked ? &tape.recurrent_masks[l] : nullptr);

      matmul_tn_acc(result.grads.layers[l].W, x_masked, dz);
      matmul_tn_acc(result.grads.layers[l].U, h_masked, dz);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto dzr = dz.row(b);
        for (std::size_t j = 0; j < 4 * hidden; ++j) result.grads.layers[l].b[j] += dzr[j];
      }

      // dL/d(masked recurrent state) → previous step, mask applied.
      Matrix dh_prev(batch, hidden);
      matmul_nt_acc(dh_prev, dz, layer.U);
      if (masked) {
        const Matrix& rm = tape.recurrent_masks[l];
        for (std::size_t i = 0; i < dh_prev.size(); ++i)
          dh_prev.data()[i] *= rm.data()[i];
      }
      dh_carry[l] = std::move(dh_prev);

      if (l > 0) {
        d_input = Matrix(batch, layer.input_size());
        matmul_nt_acc(d_input, dz, layer.W);
        if (masked) {
          const Matrix& im = tape.input_masks[l];
          for (std::size_t i = 0; i < d_input.size(); ++i)
            d_input.data()[i] *= im.data()[i];
        }
        have_above = true;
      } else {
        have_above = false;
      }
    }
  }

  add_l2_gradients(params, l2, result.grads);
  return result;
}

double forward_loss_with_masks(const ModelParams& params, const std::vector<Matrix>& inputs,
                               const std::vector<Matrix>& targets,
                               const std::vector<Matrix>& weights, double l2,
                               const std::vector<Matrix>& input_masks,
                               const std::vector<Matrix>& recurrent_masks) {
  ForwardTape tape = run_forward(inputs, params, RunMode::train, input_masks,
                                 recurrent_masks);
  check_target_shapes(tape, targets, weights);
  return weighted_bce(tape.outputs, targets, weights) + l2_penalty(params, l2);
}

std::vector<Matrix> rows_as_steps(const Matrix& rows) {
  std::vector<Matrix> steps;
  steps.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    Matrix step(1, rows.cols());
    std::memcpy(step.data(), rows.row(r).data(), rows.cols() * sizeof(double));
    steps.push_back(std::move(step));
  }
  return steps;
}

std::vector<Matrix> scalars_as_steps(std::span<const double> values) {
  std::vector<Matrix> steps;
  steps.reserve(values.size());
  for (double v : values) steps.emplace_back(1, 1, v);
  return steps;
}

GradCheckReport gradient_check(const ModelParams& params, const std::vector<Matrix>& inputs,
                               const std::vector<Matrix>& targets,
                               const std::vector<Matrix>& weights, double l2,
                               const DropoutRates& rates, Rng* dropout_rng, double step) {
  ModelParams work = params;
  std::vector<Matrix> input_masks, recurrent_masks;
  make_dropout_masks(work, inputs.front().rows(), rates, dropout_rng, input_masks,
                     recurrent_masks);

  ForwardTape tape = stack_forward_with_masks(inputs, work, input_masks, recurrent_masks);
  BpttResult analytic = backward_bptt(work, tape, targets, weights, l2);

  std::map<std::string, const double*> analytic_blocks;
  for_each_param(analytic.grads, [&](const std::string& name, const double* data,
                                     std::size_t) { analytic_blocks[name] = data; });

  GradCheckReport report;
  for_each_param(work, [&](const std::string& name, double* data, std::size_t count) {
    const double* agrad = analytic_blocks.at(name);
    for (std::size_t i = 0; i < count; ++i) {
      const double original = data[i];
      data[i] = original + step;
      const double loss_plus = forward_loss_with_masks(work, inputs, targets, weights, l2,
                                                       input_masks, recurrent_masks);
      data[i] = original - step;
      const double loss_minus = forward_loss_with_masks(work, inputs, targets, weights, l2,
                                                        input_masks, recurrent_masks);
      data[i] = original;
      const double numeric = (loss_plus - loss_minus) / (2.0 * step);
      // Floor at 1e-4: central differences carry ~1e-11 absolute roundoff at
      // this step size, which would otherwise dominate near-zero gradients.
      const double denom = std::max(1e-4, std::abs(numeric) + std::abs(agrad[i]));
      const double rel = std::abs(numeric - agrad[i]) / denom;
      ++report.checked;
      if (rel > report.worst_rel_error) {
        report.worst_rel_error = rel;
        report.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return report;
}

}  // namespace prnn
