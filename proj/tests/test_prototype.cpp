#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "protgnn/errors.hpp"
#include "protgnn/prototype.hpp"
#include "protgnn/rng.hpp"

using namespace protgnn;

namespace {

constexpr double kEps = 1e-4;

PrototypeLayer layer_from_rows(const std::vector<std::vector<double>>& rows, int per_class) {
  PrototypeLayer layer;
  layer.per_class = per_class;
  layer.eps_sim = kEps;
  Tensor p = Tensor::matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) p.at(i, j) = rows[i][j];
  layer.prototypes = Parameter("prototypes", std::move(p));
  layer.class_of.resize(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    layer.class_of[j] = static_cast<int>(j) / per_class;
  return layer;
}

}  // namespace

TEST_SUITE("prototype") {

TEST_CASE("similarity at zero distance is ln(1e4) and decays monotonically") {
  // oracle: ln((d2+1)/(d2+eps)) evaluated independently
  CHECK(std::fabs(similarity_from_d2(0.0, kEps) - std::log(1e4)) < 1e-9);
  CHECK(similarity_from_d2(0.0, kEps) == doctest::Approx(9.210340371976184).epsilon(1e-12));

  for (double d2 : {0.01, 1.0, 7.5, 300.0}) {
    const double want = std::log((d2 + 1.0) / (d2 + kEps));
    CHECK(similarity_from_d2(d2, kEps) == doctest::Approx(want).epsilon(1e-15));
  }

  // strictly decreasing in d2, always positive
  Rng rng(40);
  std::vector<double> d2s;
  for (int i = 0; i < 1000; ++i) d2s.push_back(rng.uniform(0.0, 50.0));
  std::sort(d2s.begin(), d2s.end());
  for (std::size_t i = 1; i < d2s.size(); ++i) {
    if (d2s[i] == d2s[i - 1]) continue;
    CHECK(similarity_from_d2(d2s[i], kEps) < similarity_from_d2(d2s[i - 1], kEps));
  }
  CHECK(similarity_from_d2(1e9, kEps) > 0.0);
}

TEST_CASE("tensor similarity matches the scalar formula") {
  Rng rng(41);
  for (int c = 0; c < 10; ++c) {
    Tensor p = Tensor::vector(6), h = Tensor::vector(6);
    for (double& x : p.v) x = rng.uniform(-2.0, 2.0);
    for (double& x : h.v) x = rng.uniform(-2.0, 2.0);
    double d2 = 0.0;
    for (std::size_t k = 0; k < 6; ++k) d2 += (p.v[k] - h.v[k]) * (p.v[k] - h.v[k]);
    CHECK(similarity(p, h, kEps) == doctest::Approx(std::log((d2 + 1) / (d2 + kEps))).epsilon(1e-14));
  }
}

TEST_CASE("taped similarity agrees with the direct value and its fd gradient") {
  Rng rng(42);
  Parameter p("p", Tensor::vector(4)), h("h", Tensor::vector(4));
  for (double& x : p.value.v) x = rng.uniform(-1.0, 1.0);
  for (double& x : h.value.v) x = rng.uniform(-1.0, 1.0);
  auto build = [&](Tape& t) { return similarity_on_tape(t, t.param(p), t.param(h), kEps); };
  p.zero_grad();
  h.zero_grad();
  Tape tape;
  Var s = build(tape);
  CHECK(tape.scalar(s) == doctest::Approx(similarity(p.value, h.value, kEps)).epsilon(1e-15));
  tape.backward(s);
  auto recompute = [&]() {
    Tape t;
    return t.scalar(build(t));
  };
  CHECK(finite_difference_check(recompute, {&p, &h}) < 1e-4);
}

TEST_CASE("layer init assigns contiguous class blocks") {
  Rng rng(43);
  const PrototypeLayer layer = PrototypeLayer::init(3, 5, 8, kEps, rng);
  CHECK(layer.count() == 15);
  CHECK(layer.num_classes() == 3);
  CHECK(layer.prototypes.value.rows() == 15);
  CHECK(layer.prototypes.value.cols() == 8);
  CHECK(layer.of_class(1) == std::vector<int>{5, 6, 7, 8, 9});
  for (int j = 0; j < 15; ++j) CHECK(layer.class_of[static_cast<std::size_t>(j)] == j / 5);
  CHECK_THROWS_AS(PrototypeLayer::init(0, 5, 8, kEps, rng), ConfigError);
  CHECK_THROWS_AS(PrototypeLayer::init(2, 5, 8, 2.0, rng), ConfigError);
}

TEST_CASE("final layer connects each class to its own prototypes only") {
  const Tensor w = init_final_layer(3, 2);
  REQUIRE(w.rows() == 3);
  REQUIRE(w.cols() == 6);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(w.at(k, j) == ((j / 2 == k) ? 1.0 : 0.0));
}

TEST_CASE("head output matches a hand computed forward pass") {
  const PrototypeLayer layer = layer_from_rows({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}, 2);
  const Tensor w = init_final_layer(2, 2);
  Tensor h = Tensor::vector(2);
  h.v = {0.5, -0.25};

  const HeadOutput out = head_forward(h, layer, w);
  REQUIRE(out.similarities.size() == 4);
  REQUIRE(out.logits.size() == 2);

  // oracle computed from scratch
  std::vector<double> sims;
  for (const auto& row : {std::vector<double>{1, 0}, {0, 1}, {-1, 0}, {0, -1}}) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < 2; ++k) d2 += (row[k] - h.v[k]) * (row[k] - h.v[k]);
    sims.push_back(std::log((d2 + 1) / (d2 + kEps)));
  }
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(out.similarities[j] == doctest::Approx(sims[j]).epsilon(1e-14));
  CHECK(out.logits[0] == doctest::Approx(sims[0] + sims[1]).epsilon(1e-14));
  CHECK(out.logits[1] == doctest::Approx(sims[2] + sims[3]).epsilon(1e-14));

  const double mx = std::max(out.logits[0], out.logits[1]);
  const double z0 = std::exp(out.logits[0] - mx), z1 = std::exp(out.logits[1] - mx);
  CHECK(out.probabilities[0] == doctest::Approx(z0 / (z0 + z1)).epsilon(1e-12));
  CHECK(out.probabilities[0] + out.probabilities[1] == doctest::Approx(1.0).epsilon(1e-12));

  // the same wiring is reachable from precomputed similarities
  const HeadOutput again = head_from_similarities(out.similarities, w);
  CHECK(again.logits == out.logits);
  CHECK_THROWS_AS(head_from_similarities({1.0}, w), std::invalid_argument);
}

TEST_CASE("cluster cost is the mean nearest own-class squared distance") {
  const PrototypeLayer layer = layer_from_rows({{0, 0}, {2, 0}, {10, 0}, {0, 10}}, 2);
  Tensor batch = Tensor::matrix(2, 2);
  batch.v = {1, 0, 9, 1};
  const std::vector<int> y = {0, 1};
  // row 0 class 0: min(1, 1) = 1; row 1 class 1: min((9-10)^2+1, 81+81) = 2
  CHECK(cluster_cost(batch, y, layer) == doctest::Approx((1.0 + 2.0) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(cluster_cost(batch, {0}, layer), DataError);
}

TEST_CASE("separation cost is minus the mean nearest other-class squared distance") {
  const PrototypeLayer layer = layer_from_rows({{0, 0}, {2, 0}, {10, 0}, {0, 10}}, 2);
  Tensor batch = Tensor::matrix(1, 2);
  batch.v = {1, 0};
  // other class for label 0: prototypes at (10,0) and (0,10): min(81, 101) = 81
  CHECK(separation_cost(batch, {0}, layer) == doctest::Approx(-81.0).epsilon(1e-14));
}

TEST_CASE("diversity cost hinges on cosine above the cap, within classes only") {
  // class 0: parallel rows (cos 1); class 1: orthogonal rows (cos 0)
  const PrototypeLayer layer = layer_from_rows({{1, 0}, {2, 0}, {0, 1}, {1, 0}}, 2);
  const double got = diversity_cost(layer, 0.3);
  CHECK(got == doctest::Approx(1.0 - 0.3).epsilon(1e-14));
  // raising the cap above 1 silences it entirely
  CHECK(diversity_cost(layer, 1.0) == 0.0);
}

TEST_CASE("class cosine matrix is symmetric with unit diagonal") {
  Rng rng(44);
  const PrototypeLayer layer = PrototypeLayer::init(2, 3, 5, kEps, rng);
  for (int c = 0; c < 2; ++c) {
    const auto m = class_cosine_matrix(layer, c);
    REQUIRE(m.size() == 3);
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(m[a][a] == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t b = 0; b < 3; ++b) CHECK(m[a][b] == doctest::Approx(m[b][a]).epsilon(1e-12));
    }
  }
}

}  // TEST_SUITE
