#include "protgnn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "protgnn/errors.hpp"
#include "protgnn/rng.hpp"

namespace protgnn {

void Graph::validate() const {
  if (num_nodes < 0) throw DataError("graph: num_nodes negative");
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    const std::string where = "edges[" + std::to_string(k) + "]";
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw DataError("graph: " + where + ": endpoint out of range");
    if (u >= v) throw DataError("graph: " + where + ": expected u < v");
    if (!seen.insert({u, v}).second) throw DataError("graph: " + where + ": duplicate edge");
  }
  if (node_features.numel() > 0) {
    if (node_features.rank() != 2 || node_features.rows() != static_cast<std::size_t>(num_nodes))
      throw DataError("graph: node_features must have one row per node");
  }
  if (!node_labels.empty() && node_labels.size() != static_cast<std::size_t>(num_nodes))
    throw DataError("graph: node_labels must cover every node");
}

std::vector<std::vector<int>> Graph::adjacency_list() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
  for (const auto& [u, v] : edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  return adj;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(num_nodes), 0);
  for (const auto& [u, v] : edges) {
    ++deg[static_cast<std::size_t>(u)];
    ++deg[static_cast<std::size_t>(v)];
  }
  return deg;
}

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::find(edges.begin(), edges.end(), std::make_pair(u, v)) != edges.end();
}

int Dataset::num_instances() const {
  if (task == Task::GraphClassification) return static_cast<int>(graphs.size());
  return graphs.empty() ? 0 : graphs[0].num_nodes;
}

void Dataset::validate() const {
  if (num_classes < 1) throw DataError("dataset: num_classes must be >= 1");
  if (task == Task::NodeClassification && graphs.size() != 1)
    throw DataError("dataset: node tasks expect exactly one graph");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const std::string where = "graphs[" + std::to_string(i) + "]";
    try {
      graphs[i].validate();
    } catch (const DataError& e) {
      throw DataError("dataset: " + where + ": " + e.what());
    }
    if (task == Task::GraphClassification) {
      if (!graphs[i].label) throw DataError("dataset: " + where + ": missing label");
      if (*graphs[i].label < 0 || *graphs[i].label >= num_classes)
        throw DataError("dataset: " + where + ": label out of range");
    } else {
      if (graphs[i].node_labels.empty()) throw DataError("dataset: " + where + ": missing node_labels");
      for (std::size_t v = 0; v < graphs[i].node_labels.size(); ++v)
        if (graphs[i].node_labels[v] < 0 || graphs[i].node_labels[v] >= num_classes)
          throw DataError("dataset: " + where + ".node_labels[" + std::to_string(v) + "]: out of range");
    }
  }
  if (!splits.empty()) {
    const int n = num_instances();
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    auto mark = [&](const std::vector<int>& part, const char* name) {
      for (int idx : part) {
        if (idx < 0 || idx >= n)
          throw DataError(std::string("dataset: splits.") + name + ": index out of range");
        if (seen[static_cast<std::size_t>(idx)]++)
          throw DataError(std::string("dataset: splits.") + name + ": index " + std::to_string(idx) +
                          " appears in more than one split");
      }
    };
    mark(splits.train, "train");
    mark(splits.val, "val");
    mark(splits.test, "test");
    for (int i = 0; i < n; ++i)
      if (!seen[static_cast<std::size_t>(i)])
        throw DataError("dataset: splits do not cover instance " + std::to_string(i));
  }
}

namespace {

Tensor self_loop_adjacency(const Graph& g, const Tensor* edge_weights) {
  const std::size_t n = static_cast<std::size_t>(g.num_nodes);
  Tensor a = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (const auto& [u, v] : g.edges) {
    const double w =
        edge_weights ? edge_weights->at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) : 1.0;
    a.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = w;
    a.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = w;
  }
  return a;
}

}  // namespace

Tensor normalize_adjacency(const Graph& g) {
  if (g.num_nodes == 0) throw DataError("normalize_adjacency: empty graph");
  return sym_degree_normalize(self_loop_adjacency(g, nullptr));
}

Tensor normalize_adjacency(const Graph& g, const Tensor& edge_weights) {
  if (g.num_nodes == 0) throw DataError("normalize_adjacency: empty graph");
  const std::size_t n = static_cast<std::size_t>(g.num_nodes);
  if (edge_weights.rank() != 2 || edge_weights.rows() != n || edge_weights.cols() != n)
    throw DataError("normalize_adjacency: edge_weights must be num_nodes x num_nodes");
  for (const auto& [u, v] : g.edges) {
    const double a = edge_weights.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    const double b = edge_weights.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
    if (a != b) throw DataError("normalize_adjacency: edge_weights must be symmetric");
    if (a < 0.0 || a > 1.0) throw DataError("normalize_adjacency: edge weight outside [0,1]");
  }
  return sym_degree_normalize(self_loop_adjacency(g, &edge_weights));
}

Graph generate_ba_shapes(int n_base_nodes, int n_motifs, std::uint64_t seed) {
  if (n_base_nodes < 5) throw ConfigError("generate_ba_shapes: n_base_nodes must be >= 5");
  if (n_motifs < 1) throw ConfigError("generate_ba_shapes: n_motifs must be >= 1");
  Rng rng(seed);
  Graph g;
  g.num_nodes = n_base_nodes + 5 * n_motifs;
  g.node_labels.assign(static_cast<std::size_t>(g.num_nodes), 0);

  // preferential attachment, 5 edges per new node, seeded by a 5-path
  const int attach = 5;
  std::vector<int> endpoint_pool;
  auto add_edge = [&](int u, int v) {
    if (u > v) std::swap(u, v);
    g.edges.emplace_back(u, v);
    endpoint_pool.push_back(u);
    endpoint_pool.push_back(v);
  };
  for (int i = 1; i < attach; ++i) add_edge(i - 1, i);
  for (int v = attach; v < n_base_nodes; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < attach) {
      const int t = endpoint_pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(endpoint_pool.size())))];
      targets.insert(t);
    }
    for (int t : targets) add_edge(v, t);
  }

  // houses: 4-cycle b0-b1-m1-m0 plus apex over the middle pair
  for (int k = 0; k < n_motifs; ++k) {
    const int s = n_base_nodes + 5 * k;
    const int b0 = s, b1 = s + 1, m0 = s + 2, m1 = s + 3, a = s + 4;
    add_edge(b0, b1);
    add_edge(b1, m1);
    add_edge(m0, m1);
    add_edge(b0, m0);
    add_edge(m0, a);
    add_edge(m1, a);
    add_edge(rng.uniform_int(n_base_nodes), b0);
    g.node_labels[static_cast<std::size_t>(b0)] = 1;
    g.node_labels[static_cast<std::size_t>(b1)] = 1;
    g.node_labels[static_cast<std::size_t>(m0)] = 2;
    g.node_labels[static_cast<std::size_t>(m1)] = 2;
    g.node_labels[static_cast<std::size_t>(a)] = 3;
  }

  std::sort(g.edges.begin(), g.edges.end());
  const std::vector<int> deg = g.degrees();
  g.node_features = Tensor::matrix(static_cast<std::size_t>(g.num_nodes), 2);
  for (int v = 0; v < g.num_nodes; ++v) {
    g.node_features.at(static_cast<std::size_t>(v), 0) = 1.0;
    g.node_features.at(static_cast<std::size_t>(v), 1) = static_cast<double>(deg[static_cast<std::size_t>(v)]);
  }
  g.validate();
  return g;
}

Tensor one_hot_degree_features(const Graph& g, int cap) {
  if (cap < 1) throw ConfigError("one_hot_degree_features: cap must be >= 1");
  const std::vector<int> deg = g.degrees();
  Tensor x = Tensor::matrix(static_cast<std::size_t>(g.num_nodes), static_cast<std::size_t>(cap + 1));
  for (int v = 0; v < g.num_nodes; ++v) {
    const int d = std::min(deg[static_cast<std::size_t>(v)], cap);
    x.at(static_cast<std::size_t>(v), static_cast<std::size_t>(d)) = 1.0;
  }
  return x;
}

namespace {

// random attachment tree on n nodes
std::vector<std::pair<int, int>> random_tree(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    const int p = rng.uniform_int(v);
    edges.emplace_back(std::min(p, v), std::max(p, v));
  }
  return edges;
}

}  // namespace

Dataset generate_motif_dataset(int n_graphs, std::uint64_t seed, MotifDatasetParams params) {
  if (n_graphs < 2) throw ConfigError("generate_motif_dataset: n_graphs must be >= 2");
  if (params.min_nodes < 8 || params.max_nodes < params.min_nodes)
    throw ConfigError("generate_motif_dataset: invalid node range");
  Rng rng(seed);
  Dataset ds;
  ds.name = "motif";
  ds.task = Task::GraphClassification;
  ds.num_classes = 2;
  ds.graphs.reserve(static_cast<std::size_t>(n_graphs));
  for (int i = 0; i < n_graphs; ++i) {
    const int label = i % 2;
    const int n = params.min_nodes + rng.uniform_int(params.max_nodes - params.min_nodes + 1);
    Graph g;
    g.num_nodes = n;
    g.label = label;
    if (label == 0) {
      g.edges = random_tree(n, rng);
    } else {
      const int base = n - 5;  // planted cycle occupies the last five nodes
      g.edges = random_tree(base, rng);
      for (int k = 0; k < 5; ++k)
        g.edges.emplace_back(std::min(base + k, base + (k + 1) % 5), std::max(base + k, base + (k + 1) % 5));
      g.edges.emplace_back(rng.uniform_int(base), base);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.node_features = one_hot_degree_features(g, params.degree_cap);
    g.validate();
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

EgoNet extract_ego_net(const Graph& g, int v, int hops) {
  if (v < 0 || v >= g.num_nodes) throw DataError("extract_ego_net: center out of range");
  if (hops < 0) throw ConfigError("extract_ego_net: hops must be >= 0");
  const auto adj = g.adjacency_list();
  std::vector<int> dist(static_cast<std::size_t>(g.num_nodes), -1);
  std::vector<int> queue = {v};
  dist[static_cast<std::size_t>(v)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    if (dist[static_cast<std::size_t>(u)] == hops) continue;
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(w);
      }
    }
  }
  std::vector<int> nodes;
  for (int u = 0; u < g.num_nodes; ++u)
    if (dist[static_cast<std::size_t>(u)] >= 0) nodes.push_back(u);
  auto [sub, origin] = induced_subgraph(g, nodes);
  EgoNet ego;
  ego.subgraph = std::move(sub);
  ego.origin_nodes = std::move(origin);
  ego.center = static_cast<int>(std::lower_bound(ego.origin_nodes.begin(), ego.origin_nodes.end(), v) -
                                ego.origin_nodes.begin());
  return ego;
}

std::pair<Graph, std::vector<int>> induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  if (nodes.empty()) throw DataError("induced_subgraph: empty node set");
  std::vector<int> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() != nodes.size()) throw DataError("induced_subgraph: duplicate node in set");
  if (sorted.front() < 0 || sorted.back() >= g.num_nodes)
    throw DataError("induced_subgraph: node out of range");

  std::vector<int> pos(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t i = 0; i < sorted.size(); ++i) pos[static_cast<std::size_t>(sorted[i])] = static_cast<int>(i);

  Graph sub;
  sub.num_nodes = static_cast<int>(sorted.size());
  for (const auto& [u, v] : g.edges) {
    const int pu = pos[static_cast<std::size_t>(u)];
    const int pv = pos[static_cast<std::size_t>(v)];
    if (pu >= 0 && pv >= 0) sub.edges.emplace_back(std::min(pu, pv), std::max(pu, pv));
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  if (g.node_features.numel() > 0) {
    const std::size_t d = g.node_features.cols();
    sub.node_features = Tensor::matrix(sorted.size(), d);
    for (std::size_t i = 0; i < sorted.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        sub.node_features.at(i, j) = g.node_features.at(static_cast<std::size_t>(sorted[i]), j);
  }
  if (!g.node_labels.empty()) {
    sub.node_labels.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      sub.node_labels[i] = g.node_labels[static_cast<std::size_t>(sorted[i])];
  }
  sub.label = g.label;
  return {std::move(sub), std::move(sorted)};
}

bool is_connected(const Graph& g) {
  if (g.num_nodes == 0) return false;
  if (g.num_nodes == 1) return true;
  const auto adj = g.adjacency_list();
  std::vector<char> seen(static_cast<std::size_t>(g.num_nodes), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == g.num_nodes;
}

void split_dataset(Dataset& ds, std::uint64_t seed) {
  const int n = ds.num_instances();
  if (n < 3) throw DataError("split_dataset: need at least 3 instances");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  const int n_train = (n * 8) / 10;
  const int n_val = n / 10;
  ds.splits.train.assign(idx.begin(), idx.begin() + n_train);
  ds.splits.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  ds.splits.test.assign(idx.begin() + n_train + n_val, idx.end());
}

}  // namespace protgnn
