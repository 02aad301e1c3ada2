#include <cmath>
#include <vector>

#include "doctest.h"
#include "protgnn/encoder.hpp"
#include "protgnn/errors.hpp"

using namespace protgnn;

namespace {

Graph two_path() {
  Graph g;
  g.num_nodes = 2;
  g.edges = {{0, 1}};
  g.node_features = Tensor::matrix(2, 2);
  g.node_features.at(0, 0) = 1.0;
  g.node_features.at(1, 1) = 1.0;
  return g;
}

EncoderState identity_encoder() {
  EncoderState enc;
  Tensor w = Tensor::matrix(2, 2);
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;
  enc.weights.emplace_back("encoder.w0", std::move(w));
  return enc;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("config validation and layer dims") {
  EncoderConfig cfg;
  cfg.num_layers = 3;
  cfg.input_dim = 5;
  cfg.hidden_dim = 7;
  cfg.embed_dim = 4;
  CHECK(cfg.layer_dims() == std::vector<std::size_t>{5, 7, 7, 4});
  cfg.num_layers = 1;
  CHECK(cfg.layer_dims() == std::vector<std::size_t>{5, 4});
  cfg.num_layers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.num_layers = 2;
  cfg.hidden_dim = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("readout names round trip") {
  for (Readout r : {Readout::Sum, Readout::Max, Readout::CenterNode})
    CHECK(readout_from_name(readout_name(r)) == r);
  CHECK_THROWS_AS(readout_from_name("average"), ConfigError);
}

TEST_CASE("single identity layer on a two node path halves everything") {
  // A_norm of one edge with self loops is 0.5 in every cell; with identity
  // features and identity weights each row becomes [0.5, 0.5]
  const Graph g = two_path();
  const EncoderState enc = identity_encoder();
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.input_dim = 2;
  cfg.hidden_dim = 2;
  cfg.embed_dim = 2;
  cfg.readout = Readout::Sum;

  const Embeddings e = encode_graph(g, enc, cfg);
  REQUIRE(e.z.rows() == 2);
  for (double x : e.z.v) CHECK(x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.h.v[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.h.v[1] == doctest::Approx(1.0).epsilon(1e-15));

  cfg.readout = Readout::Max;
  const Embeddings em = encode_graph(g, enc, cfg);
  CHECK(em.h.v[0] == doctest::Approx(0.5).epsilon(1e-15));

  cfg.readout = Readout::CenterNode;
  const Embeddings ec = encode_graph(g, enc, cfg, nullptr, 1);
  CHECK(ec.h.v == std::vector<double>{ec.z.at(1, 0), ec.z.at(1, 1)});
}

TEST_CASE("negative pre-activations are cut by the relu") {
  Graph g = two_path();
  EncoderState enc = identity_encoder();
  enc.weights[0].value.at(0, 0) = -1.0;  // first output column now negative
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.input_dim = 2;
  cfg.hidden_dim = 2;
  cfg.embed_dim = 2;
  const Embeddings e = encode_graph(g, enc, cfg);
  CHECK(e.z.at(0, 0) == 0.0);  // relu output is exactly zero
  CHECK(e.z.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("center readout demands a center index") {
  const Graph g = two_path();
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.input_dim = 2;
  cfg.hidden_dim = 2;
  cfg.embed_dim = 2;
  cfg.readout = Readout::CenterNode;
  CHECK_THROWS_AS(encode_graph(g, identity_encoder(), cfg), ConfigError);
}

TEST_CASE("feature width mismatches are rejected") {
  const Graph g = two_path();
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.input_dim = 3;
  cfg.hidden_dim = 2;
  cfg.embed_dim = 2;
  Rng rng(0);
  CHECK_THROWS_AS(encode_graph(g, EncoderState::init(cfg, rng), cfg), DataError);
}

TEST_CASE("tape and direct encodings agree bit for bit") {
  Rng rng(31);
  EncoderConfig cfg;
  cfg.num_layers = 3;
  cfg.input_dim = 5;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 6;
  EncoderState enc = EncoderState::init(cfg, rng);
  const Dataset ds = generate_motif_dataset(6, 3);
  for (const Graph& g : ds.graphs) {
    const Embeddings direct = encode_graph(g, enc, cfg);
    Tape tape;
    Var a = tape.constant(normalize_adjacency(g));
    std::vector<Var> ws;
    for (Parameter& w : enc.weights) ws.push_back(tape.param(w));
    EncodeVars vars = encode_on_tape(tape, g.node_features, a, ws, cfg.readout, -1);
    CHECK(tape.value(vars.h).v == direct.h.v);
    CHECK(tape.value(vars.z).v == direct.z.v);
  }
}

TEST_CASE("unit edge weights reproduce the plain encoding exactly") {
  Rng rng(32);
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.input_dim = 5;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 6;
  EncoderState enc = EncoderState::init(cfg, rng);
  const Dataset ds = generate_motif_dataset(6, 13);
  for (const Graph& g : ds.graphs) {
    const std::size_t n = static_cast<std::size_t>(g.num_nodes);
    Tensor ones = Tensor::matrix(n, n);
    for (auto [u, v] : g.edges) {
      ones.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 1.0;
      ones.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) ones.at(i, i) = 1.0;
    const Embeddings plain = encode_graph(g, enc, cfg);
    const Embeddings weighted = encode_graph(g, enc, cfg, &ones);
    CHECK(weighted.h.v == plain.h.v);
    CHECK(weighted.z.v == plain.z.v);
  }
}

TEST_CASE("encoder weights take gradients that match finite differences") {
  Rng rng(33);
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.embed_dim = 4;
  Graph g;
  g.num_nodes = 4;
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  g.node_features = Tensor::matrix(4, 3);
  for (double& x : g.node_features.v) x = rng.uniform(0.1, 1.0);

  EncoderState enc = EncoderState::init(cfg, rng);
  Tensor target = Tensor::vector(4);
  for (double& x : target.v) x = rng.uniform(-1.0, 1.0);

  auto build = [&](Tape& t) {
    Var a = t.constant(normalize_adjacency(g));
    std::vector<Var> ws;
    for (Parameter& w : enc.weights) ws.push_back(t.param(w));
    EncodeVars vars = encode_on_tape(t, g.node_features, a, ws, Readout::Sum, -1);
    return t.squared_distance(vars.h, t.constant(target));
  };
  std::vector<Parameter*> params = {&enc.weights[0], &enc.weights[1]};
  for (Parameter* p : params) p->zero_grad();
  Tape tape;
  tape.backward(build(tape));
  auto recompute = [&]() {
    Tape t;
    return t.scalar(build(t));
  };
  CHECK(finite_difference_check(recompute, params) < 1e-4);
}

TEST_CASE("initialization is deterministic and Xavier bounded") {
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.input_dim = 3;
  cfg.hidden_dim = 16;
  cfg.embed_dim = 8;
  Rng r1(7), r2(7);
  const EncoderState a = EncoderState::init(cfg, r1);
  const EncoderState b = EncoderState::init(cfg, r2);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].value.v == b.weights[0].value.v);
  CHECK(a.weights[1].value.v == b.weights[1].value.v);
  CHECK(a.weights[0].value.rows() == 3);
  CHECK(a.weights[0].value.cols() == 16);
  CHECK(a.weights[1].value.rows() == 16);
  CHECK(a.weights[1].value.cols() == 8);
  const double bound0 = std::sqrt(6.0 / (3 + 16));
  for (double x : a.weights[0].value.v) CHECK(std::fabs(x) <= bound0);
}

}  // TEST_SUITE
