#pragma once

#include <string>
#include <vector>

#include "protgnn/autodiff.hpp"
#include "protgnn/graph.hpp"
#include "protgnn/rng.hpp"

namespace protgnn {

enum class Readout { Sum, Max, CenterNode };

std::string readout_name(Readout r);
Readout readout_from_name(const std::string& name);

struct EncoderConfig {
  int num_layers = 3;
  int input_dim = 1;
  int hidden_dim = 128;
  int embed_dim = 128;
  Readout readout = Readout::Sum;

  std::vector<std::size_t> layer_dims() const;  // input, hidden..., embed
  void validate() const;
};

// Per-layer weight matrices, no biases. ReLU after every layer.
struct EncoderState {
  std::vector<Parameter> weights;

  static EncoderState init(const EncoderConfig& cfg, Rng& rng);  // Xavier uniform
  std::vector<Parameter*> params();
};

// One propagation step: relu(A_norm * H * W).
Var gcn_layer_forward(Tape& tape, Var a_norm, Var h, Var w);

struct EncodeVars {
  Var h;  // graph embedding after readout
  Var z;  // node embeddings, num_nodes x embed_dim
};

// Stacks the configured layers over an externally supplied normalized
// adjacency Var, so callers choose constant or differentiable weighting.
EncodeVars encode_on_tape(Tape& tape, const Tensor& features, Var a_norm,
                          const std::vector<Var>& weights, Readout readout, int center = -1);

struct Embeddings {
  Tensor h;
  Tensor z;
};

// Convenience forward without gradients. edge_weights, when given, must be
// a symmetric num_nodes x num_nodes matrix supported on existing edges
// with entries in [0,1]. All-ones weights reproduce the unweighted output
// exactly because both paths share one normalization kernel.
Embeddings encode_graph(const Graph& g, const EncoderState& enc, const EncoderConfig& cfg,
                        const Tensor* edge_weights = nullptr, int center = -1);

}  // namespace protgnn
