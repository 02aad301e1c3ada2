#include "protgnn/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protgnn/errors.hpp"
#include "protgnn/prototype.hpp"

namespace protgnn {

void MctsConfig::validate() const {
  if (lambda_explore < 0.0) throw ConfigError("mcts: lambda_explore must be >= 0");
  if (iterations < 1) throw ConfigError("mcts: iterations must be >= 1");
  if (max_children < 1) throw ConfigError("mcts: max_children must be >= 1");
  if (n_min < 1) throw ConfigError("mcts: n_min must be >= 1");
  if (candidate_graphs < 1) throw ConfigError("mcts: candidate_graphs must be >= 1");
}

int select_action(const TreeNode& node, double lambda_explore) {
  if (!node.expanded || node.children.empty())
    throw std::invalid_argument("select_action: node has no expanded children");
  double sum_c = 0.0;
  for (const EdgeStats& s : node.stats) sum_c += s.visit_count;
  const double root_term = std::sqrt(sum_c);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < node.children.size(); ++j) {
    const EdgeStats& s = node.stats[j];
    const double u = lambda_explore * s.immediate_reward * root_term / (1.0 + s.visit_count);
    const double score = s.mean_reward + u;
    const bool better = score > best_score ||
                        (score == best_score && node.pruned[j] < node.pruned[static_cast<std::size_t>(best)]);
    if (better) {
      best = static_cast<int>(j);
      best_score = score;
    }
  }
  return best;
}

namespace {

// connectivity of node_set minus candidate, over the original adjacency
bool connected_without(const std::vector<int>& node_set, int removed,
                       const std::vector<std::vector<int>>& adj) {
  std::vector<int> rest;
  rest.reserve(node_set.size() - 1);
  for (int u : node_set)
    if (u != removed) rest.push_back(u);
  if (rest.empty()) return false;
  std::vector<char> in_set(adj.size(), 0);
  for (int u : rest) in_set[static_cast<std::size_t>(u)] = 1;
  std::vector<int> stack = {rest[0]};
  std::vector<char> seen(adj.size(), 0);
  seen[static_cast<std::size_t>(rest[0])] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (in_set[static_cast<std::size_t>(w)] && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == rest.size();
}

struct Search {
  const Graph* g = nullptr;
  std::vector<std::vector<int>> adj;
  const EncoderState* enc = nullptr;
  const EncoderConfig* enc_cfg = nullptr;
  const Tensor* p = nullptr;
  const MctsConfig* cfg = nullptr;
  double eps_sim = 0.0;
  int center = -1;  // original-graph index that must stay in every subgraph

  SubgraphMatch best;
  bool has_best = false;
  int graph_index = 0;

  double evaluate(TreeNode& n) {
    if (!n.embedding) {
      auto [sub, origin] = induced_subgraph(*g, n.node_set);
      int sub_center = -1;
      if (center >= 0)
        sub_center = static_cast<int>(std::lower_bound(origin.begin(), origin.end(), center) - origin.begin());
      Embeddings e = encode_graph(sub, *enc, *enc_cfg, nullptr, sub_center);
      n.embedding = std::move(e.h);
      n.reward = similarity(*p, *n.embedding, eps_sim);
      if (!has_best || n.reward > best.score) {
        has_best = true;
        best.node_set = n.node_set;
        best.graph_index = graph_index;
        best.embedding = *n.embedding;
        best.score = n.reward;
        best.subgraph = std::move(sub);
      }
    }
    return n.reward;
  }

  void expand(TreeNode& n) {
    n.expanded = true;
    if (static_cast<int>(n.node_set.size()) <= cfg->n_min) return;
    // prunable nodes: removal keeps the rest connected; peripheral first
    std::vector<int> degree_in(n.node_set.size(), 0);
    std::vector<char> in_set(adj.size(), 0);
    for (int u : n.node_set) in_set[static_cast<std::size_t>(u)] = 1;
    std::vector<std::pair<int, int>> order;  // (degree within subgraph, node)
    for (int u : n.node_set) {
      if (u == center) continue;
      int d = 0;
      for (int w : adj[static_cast<std::size_t>(u)])
        if (in_set[static_cast<std::size_t>(w)]) ++d;
      if (connected_without(n.node_set, u, adj)) order.emplace_back(d, u);
    }
    std::sort(order.begin(), order.end());
    if (static_cast<int>(order.size()) > cfg->max_children)
      order.resize(static_cast<std::size_t>(cfg->max_children));
    for (const auto& [d, u] : order) {
      auto child = std::make_unique<TreeNode>();
      child->node_set.reserve(n.node_set.size() - 1);
      for (int w : n.node_set)
        if (w != u) child->node_set.push_back(w);
      EdgeStats s;
      s.immediate_reward = evaluate(*child);
      n.pruned.push_back(u);
      n.stats.push_back(s);
      n.children.push_back(std::move(child));
    }
  }

  // One iteration: descend through expanded nodes, expand the first
  // unexpanded one, step into the selected fresh child, then credit the
  // path with that leaf's similarity.
  void iterate(TreeNode& root) {
    std::vector<std::pair<TreeNode*, int>> path;
    TreeNode* node = &root;
    while (true) {
      if (!node->expanded) {
        expand(*node);
        if (node->children.empty()) break;
        const int a = select_action(*node, cfg->lambda_explore);
        path.emplace_back(node, a);
        node = node->children[static_cast<std::size_t>(a)].get();
        break;
      }
      if (node->children.empty()) break;
      const int a = select_action(*node, cfg->lambda_explore);
      path.emplace_back(node, a);
      node = node->children[static_cast<std::size_t>(a)].get();
    }
    const double leaf_reward = evaluate(*node);
    for (auto& [n, a] : path) {
      EdgeStats& s = n->stats[static_cast<std::size_t>(a)];
      s.visit_count += 1;
      s.total_reward += leaf_reward;
      s.mean_reward = s.total_reward / s.visit_count;
    }
  }
};

std::vector<int> root_node_set(const Graph& g, int center) {
  // largest connected component; the one holding the center when fixed
  const auto adj = g.adjacency_list();
  std::vector<int> comp(static_cast<std::size_t>(g.num_nodes), -1);
  int n_comp = 0;
  for (int s = 0; s < g.num_nodes; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack = {s};
    comp[static_cast<std::size_t>(s)] = n_comp;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : adj[static_cast<std::size_t>(u)])
        if (comp[static_cast<std::size_t>(w)] < 0) {
          comp[static_cast<std::size_t>(w)] = n_comp;
          stack.push_back(w);
        }
    }
    ++n_comp;
  }
  int keep;
  if (center >= 0) {
    keep = comp[static_cast<std::size_t>(center)];
  } else {
    std::vector<int> size(static_cast<std::size_t>(n_comp), 0);
    for (int u = 0; u < g.num_nodes; ++u) ++size[static_cast<std::size_t>(comp[static_cast<std::size_t>(u)])];
    keep = 0;
    for (int c = 1; c < n_comp; ++c)
      if (size[static_cast<std::size_t>(c)] > size[static_cast<std::size_t>(keep)]) keep = c;
  }
  std::vector<int> nodes;
  for (int u = 0; u < g.num_nodes; ++u)
    if (comp[static_cast<std::size_t>(u)] == keep) nodes.push_back(u);
  return nodes;
}

std::vector<std::size_t> shortlist(const Tensor& p, const std::vector<CandidateGraph>& graphs,
                                   const EncoderState& enc, const EncoderConfig& enc_cfg, int limit) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].whole_embedding != nullptr) {
      ranked.emplace_back(squared_distance(p, *graphs[i].whole_embedding), i);
      continue;
    }
    Embeddings e = encode_graph(*graphs[i].graph, enc, enc_cfg, nullptr, graphs[i].center);
    ranked.emplace_back(squared_distance(p, e.h), i);
  }
  std::sort(ranked.begin(), ranked.end());
  if (static_cast<int>(ranked.size()) > limit) ranked.resize(static_cast<std::size_t>(limit));
  std::vector<std::size_t> out;
  for (const auto& [d, i] : ranked) out.push_back(i);
  return out;
}

}  // namespace

SubgraphMatch project_prototype(const Tensor& p, const std::vector<CandidateGraph>& graphs,
                                const EncoderState& enc, const EncoderConfig& enc_cfg,
                                const MctsConfig& cfg, double eps_sim) {
  cfg.validate();
  if (graphs.empty()) throw DataError("project_prototype: no candidate graphs");

  SubgraphMatch best;
  bool has_best = false;
  for (std::size_t gi : shortlist(p, graphs, enc, enc_cfg, cfg.candidate_graphs)) {
    Search search;
    search.g = graphs[gi].graph;
    search.adj = search.g->adjacency_list();
    search.enc = &enc;
    search.enc_cfg = &enc_cfg;
    search.p = &p;
    search.cfg = &cfg;
    search.eps_sim = eps_sim;
    search.center = graphs[gi].center;
    search.graph_index = graphs[gi].index;

    TreeNode root;
    root.node_set = root_node_set(*search.g, search.center);
    search.evaluate(root);
    if (static_cast<int>(root.node_set.size()) > cfg.n_min) {
      for (int it = 0; it < cfg.iterations; ++it) search.iterate(root);
    }
    if (!has_best || search.best.score > best.score) {
      has_best = true;
      best = std::move(search.best);
    }
  }
  return best;
}

SubgraphMatch brute_force_nearest_subgraph(const Tensor& p, const std::vector<CandidateGraph>& graphs,
                                           int n_min, const EncoderState& enc,
                                           const EncoderConfig& enc_cfg, double eps_sim) {
  if (graphs.empty()) throw DataError("brute_force_nearest_subgraph: no candidate graphs");
  SubgraphMatch best;
  bool has_best = false;
  for (const CandidateGraph& cand : graphs) {
    const Graph& g = *cand.graph;
    if (g.num_nodes > 12)
      throw DataError("brute_force_nearest_subgraph: exhaustive enumeration capped at 12 nodes");
    const auto adj = g.adjacency_list();
    const int n = g.num_nodes;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      if (static_cast<int>(__builtin_popcount(mask)) < n_min) continue;
      if (cand.center >= 0 && !(mask & (1u << cand.center))) continue;
      std::vector<int> nodes;
      for (int u = 0; u < n; ++u)
        if (mask & (1u << u)) nodes.push_back(u);
      // connectivity over the induced set
      std::vector<char> in_set(static_cast<std::size_t>(n), 0);
      for (int u : nodes) in_set[static_cast<std::size_t>(u)] = 1;
      std::vector<int> stack = {nodes[0]};
      std::vector<char> seen(static_cast<std::size_t>(n), 0);
      seen[static_cast<std::size_t>(nodes[0])] = 1;
      std::size_t count = 1;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(u)])
          if (in_set[static_cast<std::size_t>(w)] && !seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            ++count;
            stack.push_back(w);
          }
      }
      if (count != nodes.size()) continue;

      auto [sub, origin] = induced_subgraph(g, nodes);
      int sub_center = -1;
      if (cand.center >= 0)
        sub_center =
            static_cast<int>(std::lower_bound(origin.begin(), origin.end(), cand.center) - origin.begin());
      Embeddings e = encode_graph(sub, enc, enc_cfg, nullptr, sub_center);
      const double score = similarity(p, e.h, eps_sim);
      const bool better =
          !has_best || score > best.score ||
          (score == best.score && cand.index == best.graph_index &&
           std::lexicographical_compare(nodes.begin(), nodes.end(), best.node_set.begin(), best.node_set.end()));
      if (better) {
        has_best = true;
        best.node_set = nodes;
        best.graph_index = cand.index;
        best.embedding = std::move(e.h);
        best.score = score;
        best.subgraph = std::move(sub);
      }
    }
  }
  return best;
}

}  // namespace protgnn
