#pragma once

#include <utility>
#include <vector>

#include "protgnn/autodiff.hpp"
#include "protgnn/encoder.hpp"
#include "protgnn/graph.hpp"
#include "protgnn/prototype.hpp"
#include "protgnn/rng.hpp"

namespace protgnn {

// Conditional edge scorer: an MLP over [z_u; z_v; p] producing one weight
// in (0,1) per stored undirected edge. Each edge is scored once in its
// u < v orientation and the weight serves both matrix entries.
struct EdgeScorer {
  Parameter w1, b1, w2, b2, w3, b3;
  int embed_dim = 0;

  // Hidden widths are fixed; the last layer starts at zero so every edge
  // opens at weight 0.5 regardless of the frozen encoder's scale.
  static EdgeScorer init(int embed_dim, Rng& rng);

  std::vector<Parameter*> params();
  static constexpr int hidden1 = 64;
  static constexpr int hidden2 = 8;

  // Scores all edges in one pass; bumps invocations by edges.size().
  // The trainable variant exposes the weights to backward(); the frozen
  // one enters them as constants for inference paths.
  Var scores_on_tape(Tape& tape, Var z, const std::vector<std::pair<int, int>>& edges, Var p);
  Var frozen_scores_on_tape(Tape& tape, Var z, const std::vector<std::pair<int, int>>& edges,
                            Var p) const;

  mutable long invocations = 0;  // one per scored undirected edge
};

struct SamplerConfig {
  double lambda_b = 0.01;  // budget penalty weight
  double budget = 10.0;    // soft cap on total edge mass, and kept-edge count
  double sgd_lr = 0.01;
  int sgd_steps = 200;  // per optimization pass

  void validate() const;
};

// Edge weights for one graph under the current scorer, as a rank-1 tensor
// aligned with g.edges plus the symmetric n x n matrix form.
struct EdgeWeights {
  Tensor per_edge;  // (num_edges)
  Tensor matrix;    // (n, n), zero off the edge support
};

EdgeWeights edge_weights(const Graph& g, const Tensor& z, const Tensor& p, const EdgeScorer& scorer);

// -sim(p, embedding of g under the scored adjacency) + lambda_b * relu(sum_e - budget).
// z_input feeds the scorer; the weighted forward reuses the frozen encoder.
Var sampler_loss_on_tape(Tape& tape, const Graph& g, const Tensor& z_input, const Tensor& p,
                         EdgeScorer& scorer, const EncoderState& enc, const EncoderConfig& enc_cfg,
                         const SamplerConfig& cfg, double eps_sim, int center = -1);

struct SamplerStats {
  double mean_sim_before = 0.0;
  double mean_sim_after = 0.0;
  double mean_budget_excess = 0.0;  // relu(sum_e - budget) averaged over pairs
  int steps = 0;
};

// One optimization pass: plain SGD over shuffled (train graph, own-class
// prototype) pairs with the encoder and prototypes held fixed.
SamplerStats optimize_sampler(EdgeScorer& scorer, const std::vector<Instance>& instances,
                              const std::vector<int>& train_indices, const PrototypeLayer& protos,
                              const EncoderState& enc, const EncoderConfig& enc_cfg,
                              const SamplerConfig& cfg, Rng& rng);

struct SubgraphSelection {
  std::vector<std::pair<int, int>> edges;  // kept edges inside the chosen component
  std::vector<int> nodes;                  // sorted nodes of that component
};

// Keeps the floor(budget) highest-weight edges (ties to lexicographically
// smaller (u,v)) and returns the largest connected component they form.
SubgraphSelection select_subgraph(const Graph& g, const Tensor& per_edge_weights, double budget);

}  // namespace protgnn
