#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "protgnn/encoder.hpp"
#include "protgnn/graph.hpp"

namespace protgnn {

struct MctsConfig {
  double lambda_explore = 5.0;
  int iterations = 20;
  int max_children = 10;
  int n_min = 5;
  int candidate_graphs = 10;  // shortlist size per projection

  void validate() const;
};

struct EdgeStats {
  int visit_count = 0;        // C
  double total_reward = 0.0;  // W
  double mean_reward = 0.0;   // Q = W / C
  double immediate_reward = 0.0;  // R, similarity of the child subgraph
};

// Search tree over connected node-pruning subgraphs. Each child removes
// one node from its parent's node set while keeping the rest connected.
struct TreeNode {
  std::vector<int> node_set;  // sorted, original graph indices
  bool expanded = false;
  std::vector<int> pruned;    // action j removed node pruned[j]
  std::vector<std::unique_ptr<TreeNode>> children;
  std::vector<EdgeStats> stats;
  std::optional<Tensor> embedding;  // cached; exact bits reused everywhere
  double reward = 0.0;              // sim(p, embedding)
};

// argmax_j Q + lambda * R * sqrt(sum_k C_k) / (1 + C_j); ties resolved by
// the lowest pruned-node index.
int select_action(const TreeNode& node, double lambda_explore);

struct SubgraphMatch {
  std::vector<int> node_set;   // original indices of the winning subgraph
  int graph_index = -1;        // position in the supplied graph list
  Tensor embedding;
  double score = 0.0;
  Graph subgraph;
};

struct CandidateGraph {
  const Graph* graph = nullptr;
  int index = 0;    // caller-side id recorded in the result
  int center = -1;  // fixed node that may never be pruned, < 0 when unused
  const Tensor* whole_embedding = nullptr;  // optional cache for the shortlist ranking
};

// Monte Carlo tree search for the connected subgraph whose embedding is
// most similar to p. Deterministic: tie-breaks are index-based and there
// is no random playout. Graphs are shortlisted to cfg.candidate_graphs by
// whole-graph embedding distance before searching.
SubgraphMatch project_prototype(const Tensor& p, const std::vector<CandidateGraph>& graphs,
                                const EncoderState& enc, const EncoderConfig& enc_cfg,
                                const MctsConfig& cfg, double eps_sim);

// Exhaustive oracle over every connected induced subgraph with at least
// n_min nodes. Guarded to graphs of <= 12 nodes. Score ties keep the
// lexicographically lowest node set.
SubgraphMatch brute_force_nearest_subgraph(const Tensor& p, const std::vector<CandidateGraph>& graphs,
                                           int n_min, const EncoderState& enc,
                                           const EncoderConfig& enc_cfg, double eps_sim);

}  // namespace protgnn
