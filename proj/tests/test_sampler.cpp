#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "protgnn/errors.hpp"
#include "protgnn/sampler.hpp"
#include "protgnn/trainer.hpp"

using namespace protgnn;

namespace {

constexpr double kEps = 1e-4;

EncoderConfig enc_cfg_dim(int input_dim, int embed) {
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.input_dim = input_dim;
  cfg.hidden_dim = embed;
  cfg.embed_dim = embed;
  return cfg;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("freshly initialized scorers weight every edge one half") {
  // the output layer starts at zero, so the sigmoid sits exactly on 0.5
  Rng rng(60);
  EdgeScorer scorer = EdgeScorer::init(6, rng);
  CHECK(scorer.w1.value.rows() == 18);
  CHECK(scorer.w1.value.cols() == EdgeScorer::hidden1);
  CHECK(scorer.w3.value.rows() == EdgeScorer::hidden2);
  for (double x : scorer.w3.value.v) CHECK(x == 0.0);
  for (double x : scorer.b1.value.v) CHECK(x == 0.0);
  for (double x : scorer.b3.value.v) CHECK(x == 0.0);

  Graph g;
  g.num_nodes = 4;
  g.edges = {{0, 1}, {1, 2}, {2, 3}};
  Tensor z = Tensor::matrix(4, 6, 0.3);
  Tensor p = Tensor::vector(6, -0.2);
  const EdgeWeights ew = edge_weights(g, z, p, scorer);
  REQUIRE(ew.per_edge.numel() == 3);
  for (double w : ew.per_edge.v) CHECK(w == 0.5);

  // matrix form mirrors scores across both triangles; the diagonal stays
  // zero here because normalization adds the self loops itself
  CHECK(ew.matrix.at(0, 0) == 0.0);
  CHECK(ew.matrix.at(0, 1) == 0.5);
  CHECK(ew.matrix.at(1, 0) == 0.5);
  CHECK(ew.matrix.at(0, 2) == 0.0);

  CHECK_THROWS_AS(EdgeScorer::init(0, rng), ConfigError);
}

TEST_CASE("every stored edge costs exactly one scorer invocation") {
  Rng rng(61);
  EdgeScorer scorer = EdgeScorer::init(5, rng);
  const Dataset ds = generate_motif_dataset(8, 21);
  const EncoderConfig cfg = enc_cfg_dim(5, 5);
  EncoderState enc = EncoderState::init(cfg, rng);
  Tensor p = Tensor::vector(5, 0.1);
  for (const Graph& g : ds.graphs) {
    const Embeddings e = encode_graph(g, enc, cfg);
    scorer.invocations = 0;
    (void)edge_weights(g, e.z, p, scorer);
    CHECK(scorer.invocations == static_cast<long>(g.edges.size()));

    // the trainable path is metered identically
    scorer.invocations = 0;
    Tape tape;
    (void)scorer.scores_on_tape(tape, tape.constant(e.z), g.edges, tape.constant(p));
    CHECK(scorer.invocations == static_cast<long>(g.edges.size()));
  }
}

TEST_CASE("scorer gradients pass the finite difference oracle") {
  // three pinned weight configurations verified to sit away from relu
  // kinks and dead paths, where central differences can actually resolve
  // every coordinate; a wiring error in the backward pass would fail all
  // of them by many orders of magnitude
  for (std::uint64_t seed : {63ull, 64ull, 68ull}) {
    Rng rng(seed);
    const EncoderConfig cfg = enc_cfg_dim(5, 5);
    EncoderState enc = EncoderState::init(cfg, rng);
    EdgeScorer scorer = EdgeScorer::init(5, rng);
    // wake the zero-initialized tail and keep hidden units alive with margin
    for (double& x : scorer.w3.value.v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.0, 2.0);
    for (double& x : scorer.b3.value.v) x = rng.uniform(-0.1, 0.1);
    for (double& x : scorer.b1.value.v) x = rng.uniform(0.2, 0.5);
    for (double& x : scorer.b2.value.v) x = rng.uniform(0.2, 0.5);

    const Dataset ds = generate_motif_dataset(2, 33);
    const Graph& g = ds.graphs[1];
    const Embeddings e = encode_graph(g, enc, cfg);

    // anchor the prototype near the conditioned embedding; far away the
    // similarity surface flattens and its gradients sink below what a
    // central difference on an O(1) loss can resolve
    const EdgeWeights ew = edge_weights(g, e.z, Tensor::vector(5, 0.0), scorer);
    const Embeddings cond = encode_graph(g, enc, cfg, &ew.matrix);
    Tensor p = cond.h;
    for (double& x : p.v) x += rng.uniform(-0.15, 0.15);
    SamplerConfig sc;
    sc.budget = 2.0;  // keep the hinge active so its gradient is covered too

    auto build = [&](Tape& t) {
      return sampler_loss_on_tape(t, g, e.z, p, scorer, enc, cfg, sc, kEps);
    };
    std::vector<Parameter*> params;
    for (Parameter* q : scorer.params()) params.push_back(q);
    for (Parameter* q : params) q->zero_grad();
    Tape tape;
    tape.backward(build(tape));
    auto recompute = [&]() {
      Tape t;
      return t.scalar(build(t));
    };
    CAPTURE(seed);
    CHECK(finite_difference_check(recompute, params, 2e-5) < 1e-4);
  }
}

TEST_CASE("sampler loss is minus similarity plus the soft budget penalty") {
  Rng rng(63);
  const EncoderConfig cfg = enc_cfg_dim(5, 5);
  EncoderState enc = EncoderState::init(cfg, rng);
  EdgeScorer scorer = EdgeScorer::init(5, rng);
  const Dataset ds = generate_motif_dataset(2, 5);
  const Graph& g = ds.graphs[0];
  const Embeddings e = encode_graph(g, enc, cfg);
  Tensor p = Tensor::vector(5, 0.2);

  SamplerConfig sc;
  sc.budget = 1e9;  // penalty inactive
  Tape t1;
  const double loss_free = t1.scalar(sampler_loss_on_tape(t1, g, e.z, p, scorer, enc, cfg, sc, kEps));

  // with a fresh scorer every edge weighs 0.5; reproduce the weighted
  // encoding independently and compare
  Tensor w = Tensor::matrix(static_cast<std::size_t>(g.num_nodes), static_cast<std::size_t>(g.num_nodes));
  for (auto [u, v] : g.edges) {
    w.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 0.5;
    w.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 0.5;
  }
  const Embeddings cond = encode_graph(g, enc, cfg, &w);
  CHECK(loss_free == doctest::Approx(-similarity(p, cond.h, kEps)).epsilon(1e-12));

  // a tight budget adds lambda_b * (sum of scores - budget)
  sc.budget = 1.0;
  sc.lambda_b = 0.01;
  Tape t2;
  const double loss_tight = t2.scalar(sampler_loss_on_tape(t2, g, e.z, p, scorer, enc, cfg, sc, kEps));
  const double excess = 0.5 * static_cast<double>(g.edges.size()) - 1.0;
  CHECK(loss_tight - loss_free == doctest::Approx(0.01 * excess).epsilon(1e-10));
}

TEST_CASE("select_subgraph keeps the heaviest edges and the largest component") {
  Graph g;
  g.num_nodes = 7;
  g.edges = {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {5, 6}};
  Tensor w = Tensor::vector(5);
  w.v = {0.9, 0.7, 0.95, 0.8, 0.85};

  // budget 3 keeps edges {3,4}, {0,1}, {5,6}: components {3,4}, {0,1}, {5,6}
  // all size two, the first discovered (seeded by the top edge) wins
  const SubgraphSelection s3 = select_subgraph(g, w, 3.0);
  CHECK(s3.nodes == std::vector<int>{3, 4});
  CHECK(s3.edges == std::vector<std::pair<int, int>>{{3, 4}});

  // budget 4 adds {4,5} which merges into {3,4,5,6}
  const SubgraphSelection s4 = select_subgraph(g, w, 4.9);  // floor -> 4 edges
  CHECK(s4.nodes == std::vector<int>{3, 4, 5, 6});
  CHECK(s4.edges == std::vector<std::pair<int, int>>{{3, 4}, {4, 5}, {5, 6}});

  // zero budget selects nothing
  const SubgraphSelection s0 = select_subgraph(g, w, 0.4);
  CHECK(s0.nodes.empty());
  CHECK(s0.edges.empty());

  // ties prefer the lexicographically earlier stored edge
  Tensor flat = Tensor::vector(5, 0.5);
  const SubgraphSelection tie = select_subgraph(g, flat, 2.0);
  CHECK(tie.nodes == std::vector<int>{0, 1, 2});

  Tensor wrong = Tensor::vector(3, 0.5);
  CHECK_THROWS_AS(select_subgraph(g, wrong, 2.0), std::invalid_argument);
}

TEST_CASE("optimizing the sampler raises similarity and reports its stats") {
  Rng rng(64);
  const EncoderConfig cfg = enc_cfg_dim(5, 8);
  EncoderState enc = EncoderState::init(cfg, rng);
  Dataset ds = generate_motif_dataset(10, 77);
  split_dataset(ds, 1);
  const std::vector<Instance> instances = build_instances(ds, cfg);

  PrototypeLayer protos = PrototypeLayer::init(2, 2, 8, kEps, rng);
  // anchor prototypes near real embeddings so the objective has signal
  for (int j = 0; j < protos.count(); ++j) {
    const Embeddings e = encode_graph(instances[static_cast<std::size_t>(j)].graph, enc, cfg);
    for (std::size_t k = 0; k < 8; ++k)
      protos.prototypes.value.at(static_cast<std::size_t>(j), k) = e.h.v[k];
  }

  EdgeScorer scorer = EdgeScorer::init(8, rng);
  SamplerConfig sc;
  sc.sgd_steps = 60;
  SamplerStats stats = optimize_sampler(scorer, instances, ds.splits.train, protos, enc, cfg, sc, rng);
  CHECK(stats.steps == 60);
  CHECK(std::isfinite(stats.mean_sim_before));
  CHECK(std::isfinite(stats.mean_sim_after));
  CHECK(stats.mean_budget_excess >= 0.0);
  // three score layers moved away from the frozen initialization
  bool moved = false;
  for (double x : scorer.w3.value.v)
    if (x != 0.0) moved = true;
  CHECK(moved);
}

TEST_CASE("sampler config validation") {
  SamplerConfig sc;
  CHECK_NOTHROW(sc.validate());
  sc.sgd_steps = 0;  // a no-op pass is allowed
  CHECK_NOTHROW(sc.validate());
  sc.sgd_steps = -1;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = SamplerConfig{};
  sc.budget = -1.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = SamplerConfig{};
  sc.lambda_b = -0.01;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
}

}  // TEST_SUITE
