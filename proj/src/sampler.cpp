#include "protgnn/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "protgnn/errors.hpp"

namespace protgnn {

namespace {

Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& x : t.v) x = rng.uniform(-a, a);
  return t;
}

}  // namespace

EdgeScorer EdgeScorer::init(int embed_dim, Rng& rng) {
  if (embed_dim < 1) throw ConfigError("edge scorer: embed_dim must be >= 1");
  EdgeScorer s;
  s.embed_dim = embed_dim;
  const std::size_t in = static_cast<std::size_t>(3 * embed_dim);
  s.w1 = Parameter("sampler.w1", xavier(in, hidden1, rng));
  s.b1 = Parameter("sampler.b1", Tensor::zeros({hidden1}));
  s.w2 = Parameter("sampler.w2", xavier(hidden1, hidden2, rng));
  s.b2 = Parameter("sampler.b2", Tensor::zeros({hidden2}));
  s.w3 = Parameter("sampler.w3", Tensor::zeros({hidden2, 1}));
  s.b3 = Parameter("sampler.b3", Tensor::zeros({1}));
  return s;
}

std::vector<Parameter*> EdgeScorer::params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

namespace {

Var scorer_forward(Tape& tape, Var z, const std::vector<std::pair<int, int>>& edges, Var p,
                   Var w1, Var b1, Var w2, Var b2, Var w3, Var b3) {
  Var x = tape.gather_edge_features(z, edges, p);
  Var h1 = tape.relu(tape.add_row_vector(tape.matmul(x, w1), b1));
  Var h2 = tape.relu(tape.add_row_vector(tape.matmul(h1, w2), b2));
  Var out = tape.add_row_vector(tape.matmul(h2, w3), b3);
  return tape.sigmoid(tape.reshape(out, {edges.size()}));
}

}  // namespace

Var EdgeScorer::scores_on_tape(Tape& tape, Var z, const std::vector<std::pair<int, int>>& edges,
                               Var p) {
  invocations += static_cast<long>(edges.size());
  return scorer_forward(tape, z, edges, p, tape.param(w1), tape.param(b1), tape.param(w2),
                        tape.param(b2), tape.param(w3), tape.param(b3));
}

Var EdgeScorer::frozen_scores_on_tape(Tape& tape, Var z,
                                      const std::vector<std::pair<int, int>>& edges, Var p) const {
  invocations += static_cast<long>(edges.size());
  return scorer_forward(tape, z, edges, p, tape.constant(w1.value), tape.constant(b1.value),
                        tape.constant(w2.value), tape.constant(b2.value), tape.constant(w3.value),
                        tape.constant(b3.value));
}

void SamplerConfig::validate() const {
  if (lambda_b < 0.0) throw ConfigError("sampler: lambda_b must be >= 0");
  if (budget <= 0.0) throw ConfigError("sampler: budget must be > 0");
  if (sgd_lr <= 0.0) throw ConfigError("sampler: sgd_lr must be > 0");
  if (sgd_steps < 0) throw ConfigError("sampler: sgd_steps must be >= 0");
}

EdgeWeights edge_weights(const Graph& g, const Tensor& z, const Tensor& p,
                         const EdgeScorer& scorer) {
  EdgeWeights out;
  const std::size_t n = static_cast<std::size_t>(g.num_nodes);
  out.matrix = Tensor::zeros({n, n});
  if (g.edges.empty()) {
    out.per_edge = Tensor::zeros({0});
    return out;
  }
  Tape tape;
  Var scores = scorer.frozen_scores_on_tape(tape, tape.constant(z), g.edges, tape.constant(p));
  out.per_edge = tape.value(scores);
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [u, v] = g.edges[k];
    out.matrix.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = out.per_edge.v[k];
    out.matrix.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = out.per_edge.v[k];
  }
  return out;
}

namespace {

struct SamplerTerms {
  Var sim;
  Var excess;
  Var loss;
};

// Shared by the training loss and the evaluation passes so both report the
// exact same numbers for a given scorer state.
SamplerTerms terms_from_scores(Tape& tape, const Graph& g, Var scores, Var p_var,
                               const EncoderState& enc, const EncoderConfig& enc_cfg,
                               const SamplerConfig& cfg, double eps_sim, int center) {
  Var a_hat = tape.weighted_adjacency(scores, g.edges, static_cast<std::size_t>(g.num_nodes));
  Var a_norm = tape.sym_normalize(a_hat);
  std::vector<Var> w;
  w.reserve(enc.weights.size());
  for (const Parameter& layer : enc.weights) w.push_back(tape.constant(layer.value));
  EncodeVars e = encode_on_tape(tape, g.node_features, a_norm, w, enc_cfg.readout, center);
  SamplerTerms t;
  t.sim = similarity_on_tape(tape, p_var, e.h, eps_sim);
  if (g.edges.empty()) {
    t.excess = tape.constant(Tensor::scalar(0.0));
  } else {
    t.excess = tape.relu(tape.add_const(tape.sum_elements(scores), -cfg.budget));
  }
  t.loss = tape.add(tape.scale(t.sim, -1.0), tape.scale(t.excess, cfg.lambda_b));
  return t;
}

}  // namespace

Var sampler_loss_on_tape(Tape& tape, const Graph& g, const Tensor& z_input, const Tensor& p,
                         EdgeScorer& scorer, const EncoderState& enc, const EncoderConfig& enc_cfg,
                         const SamplerConfig& cfg, double eps_sim, int center) {
  Var p_var = tape.constant(p);
  Var scores = g.edges.empty()
                   ? tape.constant(Tensor::zeros({0}))
                   : scorer.scores_on_tape(tape, tape.constant(z_input), g.edges, p_var);
  return terms_from_scores(tape, g, scores, p_var, enc, enc_cfg, cfg, eps_sim, center).loss;
}

SamplerStats optimize_sampler(EdgeScorer& scorer, const std::vector<Instance>& instances,
                              const std::vector<int>& train_indices, const PrototypeLayer& protos,
                              const EncoderState& enc, const EncoderConfig& enc_cfg,
                              const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<std::pair<int, int>> pairs;  // (instance index, prototype index)
  for (int idx : train_indices)
    for (int j : protos.of_class(instances[static_cast<std::size_t>(idx)].label))
      pairs.emplace_back(idx, j);
  SamplerStats stats;
  if (pairs.empty()) return stats;
  rng.shuffle(pairs);

  // node embeddings feeding the scorer; fixed while the encoder is frozen
  std::vector<Tensor> z_cache(instances.size());
  std::vector<char> z_ready(instances.size(), 0);
  auto z_of = [&](int idx) -> const Tensor& {
    const std::size_t i = static_cast<std::size_t>(idx);
    if (!z_ready[i]) {
      const Instance& inst = instances[i];
      z_cache[i] = encode_graph(inst.graph, enc, enc_cfg, nullptr, inst.center).z;
      z_ready[i] = 1;
    }
    return z_cache[i];
  };

  auto eval_pass = [&](double& mean_sim, double& mean_excess) {
    double sim_total = 0.0;
    double excess_total = 0.0;
    for (const auto& [idx, j] : pairs) {
      const Instance& inst = instances[static_cast<std::size_t>(idx)];
      Tape tape;
      Var p_var = tape.constant(matrix_row(protos.prototypes.value, static_cast<std::size_t>(j)));
      Var scores = inst.graph.edges.empty()
                       ? tape.constant(Tensor::zeros({0}))
                       : scorer.frozen_scores_on_tape(tape, tape.constant(z_of(idx)),
                                                      inst.graph.edges, p_var);
      SamplerTerms t = terms_from_scores(tape, inst.graph, scores, p_var, enc, enc_cfg, cfg,
                                         protos.eps_sim, inst.center);
      sim_total += tape.scalar(t.sim);
      excess_total += tape.scalar(t.excess);
    }
    mean_sim = sim_total / static_cast<double>(pairs.size());
    mean_excess = excess_total / static_cast<double>(pairs.size());
  };

  double excess_before = 0.0;
  eval_pass(stats.mean_sim_before, excess_before);

  std::vector<Parameter*> params = scorer.params();
  for (int step = 0; step < cfg.sgd_steps; ++step) {
    const auto& [idx, j] = pairs[static_cast<std::size_t>(step) % pairs.size()];
    const Instance& inst = instances[static_cast<std::size_t>(idx)];
    Tape tape;
    Var loss = sampler_loss_on_tape(tape, inst.graph, z_of(idx),
                                    matrix_row(protos.prototypes.value, static_cast<std::size_t>(j)),
                                    scorer, enc, enc_cfg, cfg, protos.eps_sim, inst.center);
    if (!std::isfinite(tape.scalar(loss)))
      throw NumericError("optimize_sampler: non-finite loss at step " + std::to_string(step));
    tape.backward(loss);
    for (Parameter* p : params) {
      for (std::size_t k = 0; k < p->value.v.size(); ++k) p->value.v[k] -= cfg.sgd_lr * p->grad.v[k];
      p->zero_grad();
    }
    ++stats.steps;
  }

  eval_pass(stats.mean_sim_after, stats.mean_budget_excess);
  return stats;
}

SubgraphSelection select_subgraph(const Graph& g, const Tensor& per_edge_weights, double budget) {
  if (per_edge_weights.rank() != 1 || per_edge_weights.v.size() != g.edges.size())
    throw std::invalid_argument("select_subgraph: one weight per stored edge required");
  SubgraphSelection out;
  const std::size_t keep =
      std::min(g.edges.size(), static_cast<std::size_t>(std::max(0.0, std::floor(budget))));
  if (keep == 0) return out;

  // edges are stored sorted, so index order is the lexicographic tiebreak
  std::vector<std::size_t> order(g.edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (per_edge_weights.v[a] != per_edge_weights.v[b])
      return per_edge_weights.v[a] > per_edge_weights.v[b];
    return a < b;
  });
  order.resize(keep);

  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.num_nodes));
  for (std::size_t k : order) {
    const auto [u, v] = g.edges[k];
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  std::vector<int> comp(static_cast<std::size_t>(g.num_nodes), -1);
  std::vector<std::vector<int>> members;
  for (std::size_t k : order) {
    for (int s : {g.edges[k].first, g.edges[k].second}) {
      if (comp[static_cast<std::size_t>(s)] >= 0) continue;
      const int c = static_cast<int>(members.size());
      members.emplace_back();
      std::vector<int> stack = {s};
      comp[static_cast<std::size_t>(s)] = c;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        members.back().push_back(u);
        for (int w : adj[static_cast<std::size_t>(u)])
          if (comp[static_cast<std::size_t>(w)] < 0) {
            comp[static_cast<std::size_t>(w)] = c;
            stack.push_back(w);
          }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < members.size(); ++c) {
    if (members[c].size() > members[best].size()) best = c;
    // equal sizes keep the component discovered first, seeded by a higher ranked edge
  }
  out.nodes = members[best];
  std::sort(out.nodes.begin(), out.nodes.end());
  for (std::size_t k : order) {
    const auto [u, v] = g.edges[k];
    if (comp[static_cast<std::size_t>(u)] == static_cast<int>(best)) out.edges.emplace_back(u, v);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace protgnn
