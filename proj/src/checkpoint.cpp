#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "prnn/detail/base64.hpp"
#include "prnn/lstm.hpp"

namespace prnn {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

static_assert(sizeof(double) == 8);

std::string encode_block(const double* data, std::size_t count) {
  return detail::base64_encode(reinterpret_cast<const std::uint8_t*>(data),
                               count * sizeof(double));
}

void decode_block(const std::string& text, double* out, std::size_t count,
                  const std::string& name) {
  const std::vector<std::uint8_t> bytes = detail::base64_decode(text);
  if (bytes.size() != count * sizeof(double))
    throw std::runtime_error("checkpoint: block '" + name + "' holds " +
                             std::to_string(bytes.size() / sizeof(double)) +
                             " values, expected " + std::to_string(count));
  std::memcpy(out, bytes.data(), bytes.size());
}

std::map<std::string, std::pair<std::size_t, std::size_t>> param_shapes(
    const ModelParams& p) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    shapes[prefix + "W"] = {layer.W.rows(), layer.W.cols()};
    shapes[prefix + "U"] = {layer.U.rows(), layer.U.cols()};
    shapes[prefix + "b"] = {1, layer.b.size()};
  }
  if (!p.head_w.empty()) {
    shapes["head.W"] = {p.head_w.rows(), p.head_w.cols()};
    shapes["head.b"] = {1, 1};
  }
  if (p.attention) {
    shapes["attention.W_out"] = {p.attention->w_out.rows(), p.attention->w_out.cols()};
    shapes["attention.b_out"] = {1, 1};
  }
  return shapes;
}

// Zero-weight model with the right shapes; checkpoints are loaded into this.
ModelParams make_skeleton(const std::vector<std::string>& feature_names,
                          const std::vector<std::size_t>& hidden_sizes,
                          bool with_attention, std::size_t k) {
  ModelParams p;
  std::size_t in = feature_names.size();
  for (std::size_t hidden : hidden_sizes) {
    LstmLayerParams layer;
    layer.hidden_size = hidden;
    layer.W = Matrix(in, 4 * hidden);
    layer.U = Matrix(hidden, 4 * hidden);
    layer.b.assign(4 * hidden, 0.0);
    p.layers.push_back(std::move(layer));
    in = hidden;
  }
  if (with_attention) {
    AttentionParams a;
    a.w_out = Matrix(2 * p.last_hidden(), 1);
    p.attention = std::move(a);
  } else {
    p.head_w = Matrix(p.last_hidden(), 1);
  }
  p.metadata.variant = with_attention ? "attention" : "prnn";
  p.metadata.k = k;
  p.metadata.feature_names = feature_names;
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  validate_model(params);
  const auto& md = params.metadata;
  json j;
  j["kind"] = "prnn-checkpoint";
  j["format_version"] = kCheckpointVersion;
  json meta;
  meta["variant"] = md.variant;
  meta["k"] = md.k;
  meta["seed"] = md.seed;
  meta["init_scheme"] = md.init_scheme;
  meta["forget_bias_init"] = md.forget_bias_init;
  meta["gate_order"] = md.gate_order;
  meta["hidden_sizes"] = params.hidden_sizes();
  meta["feature_names"] = md.feature_names;
  meta["training"] = md.training;
  j["metadata"] = meta;

  const auto shapes = param_shapes(params);
  json blocks = json::object();
  for_each_param(params, [&](const std::string& name, const double* data,
                             std::size_t count) {
    const auto [rows, cols] = shapes.at(name);
    blocks[name] = {{"rows", rows}, {"cols", cols}, {"data", encode_block(data, count)}};
  });
  j["params"] = blocks;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: parse error in " + path.string() + ": " +
                             e.what());
  }
  try {
    if (j.at("kind").get<std::string>() != "prnn-checkpoint")
      throw std::runtime_error("not a prnn checkpoint");
    if (j.at("format_version").get<int>() != kCheckpointVersion)
      throw std::runtime_error("unsupported format_version");
    const json& meta = j.at("metadata");
    const auto variant = meta.at("variant").get<std::string>();
    if (variant != "prnn" && variant != "attention")
      throw std::runtime_error("unknown variant '" + variant + "'");

    ModelParams p = make_skeleton(
        meta.at("feature_names").get<std::vector<std::string>>(),
        meta.at("hidden_sizes").get<std::vector<std::size_t>>(), variant == "attention",
        meta.at("k").get<std::size_t>());
    p.metadata.seed = meta.at("seed").get<std::uint64_t>();
    p.metadata.init_scheme = meta.at("init_scheme").get<std::string>();
    p.metadata.forget_bias_init = meta.at("forget_bias_init").get<double>();
    p.metadata.gate_order = meta.at("gate_order").get<std::string>();
    p.metadata.training =
        meta.at("training").get<std::map<std::string, std::string>>();

    const json& blocks = j.at("params");
    const auto shapes = param_shapes(p);
    if (blocks.size() != shapes.size())
      throw std::runtime_error("parameter block count mismatch");
    for_each_param(p, [&](const std::string& name, double* data, std::size_t count) {
      const json& block = blocks.at(name);
      const auto [rows, cols] = shapes.at(name);
      if (block.at("rows").get<std::size_t>() != rows ||
          block.at("cols").get<std::size_t>() != cols)
        throw std::runtime_error("block '" + name + "' has unexpected shape");
      decode_block(block.at("data").get<std::string>(), data, count, name);
    });
    validate_model(p);
    return p;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: malformed " + path.string() + ": " + e.what());
  }
}

}  // namespace prnn
