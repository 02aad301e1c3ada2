#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "protgnn/errors.hpp"
#include "protgnn/model.hpp"
#include "protgnn/rng.hpp"
#include "protgnn/theorem.hpp"

using namespace protgnn;

namespace {

// Two-class model whose geometry is known in closed form: a single-node
// graph with an identity encoder makes h equal the feature row, so every
// distance in the report can be chosen by hand.
struct HandModel {
  ModelState model;
  Instance inst;
};

HandModel hand_model(double d_own, double d_other, bool with_scorer = false) {
  EncoderConfig enc;
  enc.num_layers = 1;
  enc.input_dim = 2;
  enc.hidden_dim = 2;
  enc.embed_dim = 2;
  enc.readout = Readout::Sum;

  Rng rng(11);
  HandModel hm;
  hm.model = ModelState::init(enc, /*num_classes=*/2, /*per_class=*/1,
                              /*eps_sim=*/1e-4, with_scorer, rng);
  Tensor& w = hm.model.encoder.weights[0].value;
  REQUIRE(w.rows() == 2);
  w.v = {1.0, 0.0, 0.0, 1.0};

  hm.inst.graph.num_nodes = 1;
  hm.inst.graph.node_features = Tensor::zeros({1, 2});
  hm.inst.graph.node_features.at(0, 0) = 0.6;
  hm.inst.graph.node_features.at(0, 1) = 0.8;
  hm.inst.graph.validate();
  hm.inst.a_norm = normalize_adjacency(hm.inst.graph);
  hm.inst.label = 0;
  hm.inst.center = -1;

  // h = [0.6, 0.8]; prototype 0 sits d_own away along x, prototype 1
  // d_other away along y.
  Tensor& p = hm.model.prototypes.prototypes.value;
  REQUIRE(p.rows() == 2);
  REQUIRE(p.cols() == 2);
  p.at(0, 0) = 0.6 + d_own;
  p.at(0, 1) = 0.8;
  p.at(1, 0) = 0.6;
  p.at(1, 1) = 0.8 + d_other;
  return hm;
}

double sim_of(double d2, double eps) { return std::log((d2 + 1.0) / (d2 + eps)); }

}  // namespace

TEST_SUITE("theorem") {

TEST_CASE("threshold and logit shift cap follow 2m ln((1+d)(2-d))") {
  HandModel hm = hand_model(0.1, 1.0);
  const TheoremReport r = check_theorem(hm.model, hm.inst, 0, 0.5);
  CHECK(r.logit_shift_cap == doctest::Approx(std::log(2.25)).epsilon(1e-15));
  CHECK(r.threshold == doctest::Approx(2.0 * std::log(2.25)).epsilon(1e-15));
  CHECK(r.threshold == doctest::Approx(1.6218604324326575).epsilon(1e-12));

  // Cap scales with the per-class prototype count.
  EncoderConfig enc;
  enc.num_layers = 1;
  enc.input_dim = 2;
  enc.hidden_dim = 2;
  enc.embed_dim = 2;
  enc.readout = Readout::Sum;
  Rng rng(3);
  ModelState wide = ModelState::init(enc, 2, /*per_class=*/3, 1e-4, false, rng);
  const TheoremReport rw = check_theorem(wide, hm.inst, 0, 0.3);
  CHECK(rw.logit_shift_cap == doctest::Approx(3.0 * std::log(1.3 * 1.7)).epsilon(1e-15));
  CHECK(rw.threshold == doctest::Approx(6.0 * std::log(1.3 * 1.7)).epsilon(1e-15));
}

TEST_CASE("without a scorer the conditioned embedding is the plain one") {
  HandModel hm = hand_model(0.1, 1.0);
  const TheoremReport r = check_theorem(hm.model, hm.inst, 0, 0.5);

  REQUIRE(r.plain_logits.size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(r.conditioned_logits[k] == r.plain_logits[k]);  // bit-exact
  for (const PrototypePremise& pr : r.premises) CHECK(pr.dist_cond == 0.0);
  for (const ClassDelta& cd : r.class_deltas) {
    CHECK(cd.delta_logit == 0.0);
    CHECK(cd.bound_holds);
  }
  CHECK(r.bounds_hold);
  CHECK(r.prediction_preserved);
}

TEST_CASE("premises and verdict on a hand-placed geometry") {
  HandModel hm = hand_model(0.1, 1.0);
  const double eps = 1e-4;
  const TheoremReport r = check_theorem(hm.model, hm.inst, 0, 0.5);

  CHECK(r.plain_logits[0] == doctest::Approx(sim_of(0.01, eps)).epsilon(1e-12));
  CHECK(r.plain_logits[1] == doctest::Approx(sim_of(1.0, eps)).epsilon(1e-12));
  CHECK(r.top2_gap ==
        doctest::Approx(sim_of(0.01, eps) - sim_of(1.0, eps)).epsilon(1e-12));

  REQUIRE(r.premises.size() == 2);
  const PrototypePremise& own = r.premises[0];
  CHECK(own.own_class);
  CHECK(own.dist_proto == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(own.cond_bound ==
        doctest::Approx((std::sqrt(1.5) - 1.0) * 0.1).epsilon(1e-12));
  CHECK(own.radius_bound == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(own.holds);

  const PrototypePremise& other = r.premises[1];
  CHECK_FALSE(other.own_class);
  CHECK(other.dist_proto == doctest::Approx(1.0).epsilon(1e-12));
  const double theta = std::min(std::sqrt(1.5) - 1.0, 1.0 - 1.0 / std::sqrt(1.5));
  CHECK(theta == doctest::Approx(1.0 - 1.0 / std::sqrt(1.5)).epsilon(1e-15));
  CHECK(other.cond_bound ==
        doctest::Approx(theta * 1.0 - std::sqrt(eps)).epsilon(1e-12));
  CHECK(other.radius_bound == 0.0);
  CHECK(other.holds);

  CHECK(r.premises_hold);
  // gap ~ 3.91 clears the 1.62 threshold
  CHECK(r.top2_gap > r.threshold);
  CHECK(r.applicable);
  CHECK(r.predicted_plain == 0);
  CHECK(r.prediction_preserved);
  CHECK(r.bounds_hold);
  CHECK(r.verdict);
}

TEST_CASE("a margin below the threshold makes the implication vacuous") {
  HandModel hm = hand_model(0.1, 1.0);
  // Same geometry checked against the wrong label: the gap flips sign.
  const TheoremReport r = check_theorem(hm.model, hm.inst, 1, 0.5);
  CHECK(r.top2_gap < 0.0);
  CHECK_FALSE(r.applicable);
  // The class-1 prototype is 1.0 away, outside the sqrt(1-delta) ball.
  CHECK_FALSE(r.premises[1].holds);
  CHECK_FALSE(r.premises_hold);
  CHECK(r.class_deltas[1].is_label);
  CHECK_FALSE(r.class_deltas[1].premises_hold);
  // Deltas are zero without a scorer, so the verdict stays vacuously true.
  CHECK(r.verdict);
}

TEST_CASE("a large delta shrinks the own-class ball until the premise fails") {
  HandModel hm = hand_model(0.1, 1.0);
  const TheoremReport r = check_theorem(hm.model, hm.inst, 0, 0.999);
  // sqrt(1 - 0.999) ~ 0.0316 < 0.1
  CHECK(r.premises[0].radius_bound < 0.1);
  CHECK_FALSE(r.premises[0].holds);
  CHECK_FALSE(r.premises_hold);
  CHECK_FALSE(r.applicable);
  CHECK(r.verdict);
}

TEST_CASE("premise flags agree with their reported distances and bounds") {
  // With a scorer present the conditioned embedding genuinely moves, so the
  // flags have to be recomputed from the report's own numbers.
  EncoderConfig enc;
  enc.num_layers = 2;
  enc.input_dim = 5;
  enc.hidden_dim = 6;
  enc.embed_dim = 4;
  enc.readout = Readout::Sum;
  Rng rng(5);
  ModelState model = ModelState::init(enc, 2, 2, 1e-4, /*with_scorer=*/true, rng);

  Instance inst;
  inst.graph.num_nodes = 5;
  inst.graph.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}};
  inst.graph.node_features = Tensor::zeros({5, 5});
  for (std::size_t i = 0; i < 5; ++i)
    inst.graph.node_features.at(i, i % 5) = 1.0;
  inst.graph.validate();
  inst.a_norm = normalize_adjacency(inst.graph);
  inst.label = 0;

  for (double delta : default_delta_grid()) {
    const TheoremReport r = check_theorem(model, inst, inst.label, delta);
    const double theta =
        std::min(std::sqrt(1.0 + delta) - 1.0, 1.0 - 1.0 / std::sqrt(2.0 - delta));
    bool all_hold = true;
    for (const PrototypePremise& pr : r.premises) {
      CHECK(pr.dist_cond > 0.0);  // 0.5-weighted propagation shifts h
      const bool expect =
          pr.own_class
              ? (pr.dist_cond <= (std::sqrt(1.0 + delta) - 1.0) * pr.dist_proto &&
                 pr.dist_proto <= std::sqrt(1.0 - delta))
              : (pr.dist_cond <= theta * pr.dist_proto - std::sqrt(1e-4));
      CHECK(pr.holds == expect);
      all_hold = all_hold && expect;
    }
    CHECK(r.premises_hold == all_hold);
    for (const ClassDelta& cd : r.class_deltas) {
      CHECK(cd.delta_logit ==
            r.conditioned_logits[static_cast<std::size_t>(cd.cls)] -
                r.plain_logits[static_cast<std::size_t>(cd.cls)]);
      const bool expect_bound = cd.is_label
                                    ? cd.delta_logit >= -r.logit_shift_cap - kTheoremTolerance
                                    : cd.delta_logit <= r.logit_shift_cap + kTheoremTolerance;
      CHECK(cd.bound_holds == expect_bound);
    }
  }
}

TEST_CASE("scan counts instance x delta pairs and stays violation free") {
  HandModel hm = hand_model(0.1, 1.0);
  std::vector<Instance> insts;
  for (int i = 0; i < 3; ++i) {
    Instance in = hm.inst;
    in.graph.node_features.at(0, 0) = 0.6 + 0.05 * i;
    in.a_norm = normalize_adjacency(in.graph);
    in.label = i % 2;
    insts.push_back(in);
  }
  const std::vector<int> idx = {0, 1, 2};
  const TheoremScan scan = scan_theorem(hm.model, insts, idx, default_delta_grid());
  CHECK(scan.instances == 3);
  CHECK(scan.checks == 15);
  CHECK(scan.premises_all_hold <= scan.checks);
  CHECK(scan.applicable <= scan.premises_all_hold);
  // No scorer: every logit delta is exactly zero.
  CHECK(scan.bound_violations == 0);
  CHECK(scan.prediction_flips == 0);
  CHECK(scan.deltas == default_delta_grid());

  // A subset of indices scans only that subset.
  const TheoremScan part = scan_theorem(hm.model, insts, {2}, {0.5});
  CHECK(part.instances == 1);
  CHECK(part.checks == 1);
}

TEST_CASE("delta grid default") {
  const std::vector<double> g = default_delta_grid();
  REQUIRE(g.size() == 5);
  CHECK(g == std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9});
}

TEST_CASE("rejects out-of-range delta and label") {
  HandModel hm = hand_model(0.1, 1.0);
  CHECK_THROWS_WITH_AS(check_theorem(hm.model, hm.inst, 0, 0.0),
                       "check_theorem: delta must lie in (0, 1)", ConfigError);
  CHECK_THROWS_AS(check_theorem(hm.model, hm.inst, 0, 1.0), ConfigError);
  CHECK_THROWS_AS(check_theorem(hm.model, hm.inst, 0, -0.3), ConfigError);
  CHECK_THROWS_WITH_AS(check_theorem(hm.model, hm.inst, 2, 0.5),
                       "check_theorem: label out of range", DataError);
  CHECK_THROWS_AS(check_theorem(hm.model, hm.inst, -1, 0.5), DataError);
  CHECK_THROWS_AS(scan_theorem(hm.model, {hm.inst}, {0}, {0.5, 1.5}), ConfigError);
}

}  // TEST_SUITE
