#include "protgnn/encoder.hpp"

#include <cmath>

#include "protgnn/errors.hpp"

namespace protgnn {

std::string readout_name(Readout r) {
  switch (r) {
    case Readout::Sum: return "sum";
    case Readout::Max: return "max";
    case Readout::CenterNode: return "center-node";
  }
  return "sum";
}

Readout readout_from_name(const std::string& name) {
  if (name == "sum") return Readout::Sum;
  if (name == "max") return Readout::Max;
  if (name == "center-node") return Readout::CenterNode;
  throw ConfigError("readout: expected sum | max | center-node, got '" + name + "'");
}

std::vector<std::size_t> EncoderConfig::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.push_back(static_cast<std::size_t>(input_dim));
  for (int i = 0; i < num_layers - 1; ++i) dims.push_back(static_cast<std::size_t>(hidden_dim));
  dims.push_back(static_cast<std::size_t>(embed_dim));
  return dims;
}

void EncoderConfig::validate() const {
  if (num_layers < 1) throw ConfigError("encoder: num_layers must be >= 1");
  if (input_dim < 1 || hidden_dim < 1 || embed_dim < 1)
    throw ConfigError("encoder: dimensions must be >= 1");
}

EncoderState EncoderState::init(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderState enc;
  const auto dims = cfg.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Tensor w = Tensor::matrix(dims[l], dims[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (double& x : w.v) x = rng.uniform(-bound, bound);
    enc.weights.emplace_back("encoder.w" + std::to_string(l), std::move(w));
  }
  return enc;
}

std::vector<Parameter*> EncoderState::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : weights) out.push_back(&p);
  return out;
}

Var gcn_layer_forward(Tape& tape, Var a_norm, Var h, Var w) {
  return tape.relu(tape.matmul(tape.matmul(a_norm, h), w));
}

EncodeVars encode_on_tape(Tape& tape, const Tensor& features, Var a_norm,
                          const std::vector<Var>& weights, Readout readout, int center) {
  Var h = tape.constant(features);
  for (const Var& w : weights) h = gcn_layer_forward(tape, a_norm, h, w);
  EncodeVars out;
  out.z = h;
  switch (readout) {
    case Readout::Sum:
      out.h = tape.row_sum(h);
      break;
    case Readout::Max:
      out.h = tape.row_max(h);
      break;
    case Readout::CenterNode:
      if (center < 0) throw ConfigError("encode: center-node readout requires a center index");
      out.h = tape.row(h, static_cast<std::size_t>(center));
      break;
  }
  return out;
}

Embeddings encode_graph(const Graph& g, const EncoderState& enc, const EncoderConfig& cfg,
                        const Tensor* edge_weights, int center) {
  if (g.node_features.numel() == 0) throw DataError("encode_graph: graph has no node features");
  if (g.node_features.cols() != static_cast<std::size_t>(cfg.input_dim))
    throw DataError("encode_graph: feature width " + std::to_string(g.node_features.cols()) +
                    " does not match encoder input_dim " + std::to_string(cfg.input_dim));
  Tensor a_norm = edge_weights ? normalize_adjacency(g, *edge_weights) : normalize_adjacency(g);
  Tape tape;
  Var a = tape.constant(std::move(a_norm));
  std::vector<Var> ws;
  for (const Parameter& w : enc.weights) ws.push_back(tape.constant(w.value));
  EncodeVars vars = encode_on_tape(tape, g.node_features, a, ws, cfg.readout, center);
  return {tape.value(vars.h), tape.value(vars.z)};
}

}  // namespace protgnn
