#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "protgnn/tensor.hpp"

namespace protgnn {

enum class Task { GraphClassification, NodeClassification };

// Undirected graph. Edges are stored once with u < v and no duplicates;
// self loops only ever appear inside adjacency normalization.
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Tensor node_features;          // num_nodes x feature_dim
  std::optional<int> label;      // graph-level class
  std::vector<int> node_labels;  // per-node classes, empty when absent

  void validate() const;  // throws DataError with the offending location
  std::vector<std::vector<int>> adjacency_list() const;
  std::vector<int> degrees() const;
  bool has_edge(int u, int v) const;
};

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

struct Dataset {
  std::string name;
  Task task = Task::GraphClassification;
  int num_classes = 0;
  std::vector<Graph> graphs;
  Splits splits;

  // graphs for graph tasks, labeled nodes of the single graph for node tasks
  int num_instances() const;
  void validate() const;
};

struct EgoNet {
  Graph subgraph;
  int center = 0;                 // index within subgraph
  std::vector<int> origin_nodes;  // subgraph index -> original node index
};

// One materialized classification example plus its cached normalized
// adjacency. Node tasks become ego-net instances with a center readout.
struct Instance {
  Graph graph;
  int label = 0;
  int center = -1;  // < 0 for whole-graph readouts
  Tensor a_norm;
};

// D^{-1/2} (A + I) D^{-1/2}, dense.
Tensor normalize_adjacency(const Graph& g);
// Same with off-diagonal entries scaled by symmetric edge weights in [0,1].
Tensor normalize_adjacency(const Graph& g, const Tensor& edge_weights);

// Scale-free base graph with house motifs attached to random base nodes.
// Node labels: 0 base, 1 bottom pair, 2 middle pair, 3 apex. Features per
// node: [1, degree].
Graph generate_ba_shapes(int n_base_nodes, int n_motifs, std::uint64_t seed);

struct MotifDatasetParams {
  int min_nodes = 12;
  int max_nodes = 20;
  int degree_cap = 4;  // one-hot degree features over 0..cap
};

// Balanced binary graph-classification set. Class 0 graphs are random
// trees; class 1 graphs carry a planted 5-cycle, stored as the last five
// nodes, attached to the tree by a single edge.
Dataset generate_motif_dataset(int n_graphs, std::uint64_t seed, MotifDatasetParams params = {});

EgoNet extract_ego_net(const Graph& g, int v, int hops);

// Nodes may arrive in any order; the subgraph keeps them sorted ascending
// and the returned map gives original ids per subgraph index.
std::pair<Graph, std::vector<int>> induced_subgraph(const Graph& g, const std::vector<int>& nodes);

bool is_connected(const Graph& g);

// In-place 80/10/10 split over instances, shuffled by seed.
void split_dataset(Dataset& ds, std::uint64_t seed);

// One-hot of min(degree, cap) per node; width cap + 1.
Tensor one_hot_degree_features(const Graph& g, int cap);

}  // namespace protgnn
