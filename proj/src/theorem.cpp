#include "protgnn/theorem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protgnn/errors.hpp"

namespace protgnn {

namespace {

struct PrototypeGeometry {
  double dist_cond = 0.0;   // ||h - h_cond||
  double dist_proto = 0.0;  // ||h - p||
  double sim_plain = 0.0;
  double sim_cond = 0.0;
};

// Delta independent part: embeddings and distances, computed once.
std::vector<PrototypeGeometry> geometry(const ModelState& model, const Instance& inst) {
  Embeddings base = encode_graph(inst.graph, model.encoder, model.encoder_cfg, nullptr, inst.center);
  const int np = model.prototypes.count();
  std::vector<PrototypeGeometry> out(static_cast<std::size_t>(np));
  Tensor ones;
  if (!model.has_scorer) {
    const std::size_t n = static_cast<std::size_t>(inst.graph.num_nodes);
    ones = Tensor::zeros({n, n});
    for (const auto& [u, v] : inst.graph.edges) {
      ones.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 1.0;
      ones.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 1.0;
    }
  }
  for (int j = 0; j < np; ++j) {
    const Tensor p = matrix_row(model.prototypes.prototypes.value, static_cast<std::size_t>(j));
    Tensor h_cond;
    if (model.has_scorer) {
      EdgeWeights ew = edge_weights(inst.graph, base.z, p, model.scorer);
      h_cond = encode_graph(inst.graph, model.encoder, model.encoder_cfg, &ew.matrix, inst.center).h;
    } else {
      h_cond = encode_graph(inst.graph, model.encoder, model.encoder_cfg, &ones, inst.center).h;
    }
    PrototypeGeometry& g = out[static_cast<std::size_t>(j)];
    g.dist_cond = std::sqrt(squared_distance(base.h, h_cond));
    g.dist_proto = std::sqrt(squared_distance(base.h, p));
    g.sim_plain = similarity(p, base.h, model.prototypes.eps_sim);
    g.sim_cond = similarity(p, h_cond, model.prototypes.eps_sim);
  }
  return out;
}

TheoremReport report_from_geometry(const std::vector<PrototypeGeometry>& geom,
                                   const ModelState& model, int label, double delta) {
  const int np = model.prototypes.count();
  const int nc = model.num_classes;
  const int m = model.prototypes.per_class;
  const double log_factor = std::log((1.0 + delta) * (2.0 - delta));
  const double stretch = std::sqrt(1.0 + delta) - 1.0;
  const double theta = std::min(stretch, 1.0 - 1.0 / std::sqrt(2.0 - delta));
  const double sqrt_eps = std::sqrt(model.prototypes.eps_sim);

  TheoremReport r;
  r.delta = delta;
  r.label = label;
  r.logit_shift_cap = static_cast<double>(m) * log_factor;
  r.threshold = 2.0 * r.logit_shift_cap;

  r.plain_logits.assign(static_cast<std::size_t>(nc), 0.0);
  r.conditioned_logits.assign(static_cast<std::size_t>(nc), 0.0);
  r.premises.resize(static_cast<std::size_t>(np));
  for (int j = 0; j < np; ++j) {
    const PrototypeGeometry& g = geom[static_cast<std::size_t>(j)];
    const int cls = model.prototypes.class_of[static_cast<std::size_t>(j)];
    r.plain_logits[static_cast<std::size_t>(cls)] += g.sim_plain;
    r.conditioned_logits[static_cast<std::size_t>(cls)] += g.sim_cond;

    PrototypePremise& pr = r.premises[static_cast<std::size_t>(j)];
    pr.prototype_index = j;
    pr.cls = cls;
    pr.own_class = cls == label;
    pr.dist_cond = g.dist_cond;
    pr.dist_proto = g.dist_proto;
    if (pr.own_class) {
      pr.cond_bound = stretch * g.dist_proto;
      pr.radius_bound = std::sqrt(1.0 - delta);
      pr.holds = g.dist_cond <= pr.cond_bound && g.dist_proto <= pr.radius_bound;
    } else {
      pr.cond_bound = theta * g.dist_proto - sqrt_eps;
      pr.radius_bound = 0.0;
      pr.holds = g.dist_cond <= pr.cond_bound;
    }
  }

  r.premises_hold = true;
  r.bounds_hold = true;
  r.class_deltas.resize(static_cast<std::size_t>(nc));
  for (int k = 0; k < nc; ++k) {
    ClassDelta& cd = r.class_deltas[static_cast<std::size_t>(k)];
    cd.cls = k;
    cd.is_label = k == label;
    cd.premises_hold = true;
    for (const PrototypePremise& pr : r.premises)
      if (pr.cls == k && !pr.holds) cd.premises_hold = false;
    cd.delta_logit =
        r.conditioned_logits[static_cast<std::size_t>(k)] - r.plain_logits[static_cast<std::size_t>(k)];
    if (cd.is_label) {
      cd.bound = -r.logit_shift_cap;
      cd.bound_holds = cd.delta_logit >= cd.bound - kTheoremTolerance;
    } else {
      cd.bound = r.logit_shift_cap;
      cd.bound_holds = cd.delta_logit <= cd.bound + kTheoremTolerance;
    }
    if (!cd.premises_hold) r.premises_hold = false;
    if (cd.premises_hold && !cd.bound_holds) r.bounds_hold = false;
  }

  auto arg_max = [](const std::vector<double>& v) {
    int best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
  };
  r.predicted_plain = arg_max(r.plain_logits);
  r.predicted_conditioned = arg_max(r.conditioned_logits);

  double best_other = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < nc; ++k)
    if (k != label) best_other = std::max(best_other, r.plain_logits[static_cast<std::size_t>(k)]);
  r.top2_gap = r.plain_logits[static_cast<std::size_t>(label)] - best_other;

  r.applicable = r.premises_hold && r.top2_gap > r.threshold;
  r.prediction_preserved = r.predicted_plain == r.predicted_conditioned;
  r.verdict = r.bounds_hold && (!r.applicable || (r.prediction_preserved && r.predicted_plain == label));
  return r;
}

}  // namespace

std::vector<double> default_delta_grid() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }

TheoremReport check_theorem(const ModelState& model, const Instance& inst, int label, double delta) {
  model.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("check_theorem: delta must lie in (0, 1)");
  if (label < 0 || label >= model.num_classes)
    throw DataError("check_theorem: label out of range");
  return report_from_geometry(geometry(model, inst), model, label, delta);
}

TheoremScan scan_theorem(const ModelState& model, const std::vector<Instance>& instances,
                         const std::vector<int>& indices, const std::vector<double>& deltas) {
  model.validate();
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("scan_theorem: delta must lie in (0, 1)");
  TheoremScan scan;
  scan.deltas = deltas;
  for (int idx : indices) {
    const Instance& inst = instances[static_cast<std::size_t>(idx)];
    const auto geom = geometry(model, inst);
    ++scan.instances;
    for (double d : deltas) {
      TheoremReport r = report_from_geometry(geom, model, inst.label, d);
      ++scan.checks;
      if (r.premises_hold) ++scan.premises_all_hold;
      if (r.applicable) ++scan.applicable;
      if (!r.bounds_hold) ++scan.bound_violations;
      if (r.applicable && !r.prediction_preserved) ++scan.prediction_flips;
    }
  }
  return scan;
}

}  // namespace protgnn
