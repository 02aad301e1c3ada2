#include "protgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "protgnn/adam.hpp"
#include "protgnn/dot_export.hpp"
#include "protgnn/errors.hpp"
#include "protgnn/mcts.hpp"

namespace protgnn {

Readout default_readout(Task task) {
  return task == Task::NodeClassification ? Readout::CenterNode : Readout::Sum;
}

std::vector<Instance> build_instances(const Dataset& ds, const EncoderConfig& enc_cfg) {
  ds.validate();
  std::vector<Instance> out;
  if (ds.task == Task::GraphClassification) {
    out.reserve(ds.graphs.size());
    for (const Graph& g : ds.graphs) {
      Instance inst;
      inst.graph = g;
      inst.label = *g.label;
      inst.center = -1;
      inst.a_norm = normalize_adjacency(inst.graph);
      out.push_back(std::move(inst));
    }
  } else {
    const Graph& g = ds.graphs[0];
    out.reserve(static_cast<std::size_t>(g.num_nodes));
    for (int v = 0; v < g.num_nodes; ++v) {
      EgoNet ego = extract_ego_net(g, v, enc_cfg.num_layers);
      Instance inst;
      inst.graph = std::move(ego.subgraph);
      inst.label = g.node_labels[static_cast<std::size_t>(v)];
      inst.center = ego.center;
      inst.a_norm = normalize_adjacency(inst.graph);
      out.push_back(std::move(inst));
    }
  }
  const std::size_t width = out.empty() ? 0 : out[0].graph.node_features.cols();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].graph.node_features.cols() != width)
      throw DataError("build_instances: instance " + std::to_string(i) +
                      " feature width differs from instance 0");
  return out;
}

namespace {

struct BatchTerms {
  Var loss, ce, clst, sep, div;
  int correct = 0;
};

// Composite objective over one batch: mean cross entropy, mean closest
// own-class squared distance, minus the mean closest other-class squared
// distance (clamped), plus the prototype diversity hinge (per batch, not
// per sample).
BatchTerms batch_objective(Tape& tape, ModelState& model, const std::vector<Instance>& instances,
                           const std::vector<int>& batch, const TrainConfig& cfg) {
  std::vector<Var> weights;
  weights.reserve(model.encoder.weights.size());
  for (Parameter& w : model.encoder.weights) weights.push_back(tape.param(w));
  Var proto = tape.param(model.prototypes.prototypes);
  const int np = model.prototypes.count();
  const int nc = model.num_classes;
  std::vector<Var> rows(static_cast<std::size_t>(np));
  for (int j = 0; j < np; ++j) rows[static_cast<std::size_t>(j)] = tape.row(proto, static_cast<std::size_t>(j));

  BatchTerms bt;
  std::vector<Var> ce_list, clst_list, sep_list;
  for (int idx : batch) {
    const Instance& inst = instances[static_cast<std::size_t>(idx)];
    EncodeVars ev = encode_on_tape(tape, inst.graph.node_features, tape.constant(inst.a_norm),
                                   weights, model.encoder_cfg.readout, inst.center);
    std::vector<Var> d2(static_cast<std::size_t>(np));
    std::vector<Var> sims(static_cast<std::size_t>(np));
    for (int j = 0; j < np; ++j) {
      d2[static_cast<std::size_t>(j)] = tape.squared_distance(ev.h, rows[static_cast<std::size_t>(j)]);
      sims[static_cast<std::size_t>(j)] =
          similarity_on_tape(tape, rows[static_cast<std::size_t>(j)], ev.h, cfg.eps_sim);
    }
    std::vector<Var> logit_parts(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k) {
      std::vector<Var> own;
      for (int j : model.prototypes.of_class(k)) own.push_back(sims[static_cast<std::size_t>(j)]);
      logit_parts[static_cast<std::size_t>(k)] = tape.sum(own);
    }
    Var logits = tape.stack(logit_parts);
    ce_list.push_back(tape.softmax_cross_entropy(logits, static_cast<std::size_t>(inst.label)));

    std::vector<Var> own_d2, other_d2;
    for (int j = 0; j < np; ++j) {
      if (model.prototypes.class_of[static_cast<std::size_t>(j)] == inst.label)
        own_d2.push_back(d2[static_cast<std::size_t>(j)]);
      else
        other_d2.push_back(tape.clamp_max(d2[static_cast<std::size_t>(j)], cfg.sep_clamp));
    }
    clst_list.push_back(tape.min_element(own_d2));
    sep_list.push_back(tape.min_element(other_d2));

    const Tensor& lv = tape.value(logits);
    int pred = 0;
    for (std::size_t k = 1; k < lv.v.size(); ++k)
      if (lv.v[k] > lv.v[static_cast<std::size_t>(pred)]) pred = static_cast<int>(k);
    if (pred == inst.label) ++bt.correct;
  }

  bt.ce = tape.mean(ce_list);
  bt.clst = tape.mean(clst_list);
  bt.sep = tape.scale(tape.mean(sep_list), -1.0);  // the separation cost itself is negative

  std::vector<Var> hinges;
  for (int c = 0; c < nc; ++c) {
    const std::vector<int> own = model.prototypes.of_class(c);
    for (std::size_t a = 0; a < own.size(); ++a)
      for (std::size_t b = a + 1; b < own.size(); ++b) {
        Var cos = tape.cosine(rows[static_cast<std::size_t>(own[a])], rows[static_cast<std::size_t>(own[b])]);
        hinges.push_back(tape.relu(tape.add_const(cos, -cfg.s_max)));
      }
  }
  bt.div = tape.sum(hinges);

  Var loss = tape.add(bt.ce, tape.scale(bt.clst, cfg.lambda1));
  loss = tape.add(loss, tape.scale(bt.sep, cfg.lambda2));
  loss = tape.add(loss, tape.scale(bt.div, cfg.lambda3));
  bt.loss = loss;
  return bt;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

int center_in_subset(const std::vector<int>& origin, int center) {
  if (center < 0) return -1;
  return static_cast<int>(std::lower_bound(origin.begin(), origin.end(), center) - origin.begin());
}

}  // namespace

TrainOutcome train(const Dataset& ds, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  ds.validate();
  if (ds.splits.empty()) throw DataError("train: dataset has no splits");
  if (ds.splits.train.empty()) throw DataError("train: empty training split");

  Rng rng(cfg.seed);
  EncoderConfig enc_cfg = cfg.encoder;
  if (!cfg.readout_set) enc_cfg.readout = default_readout(ds.task);
  enc_cfg.input_dim = static_cast<int>(ds.graphs[0].node_features.cols());
  enc_cfg.validate();
  cfg.encoder = enc_cfg;
  cfg.readout_set = true;  // the checkpoint echo carries the resolved readout

  const std::vector<Instance> instances = build_instances(ds, enc_cfg);
  ModelState model =
      ModelState::init(enc_cfg, ds.num_classes, cfg.per_class, cfg.eps_sim, cfg.protgnn_plus, rng);
  model.task = ds.task;
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  Adam adam(model.trainable_params(), opt_cfg);

  int first_projection = 0;
  for (int t = cfg.projection_start + 1; t <= cfg.epochs; ++t) {
    if (t % cfg.projection_every == 0) {
      first_projection = t;
      break;
    }
  }
  int eligible_start = first_projection > 0 ? first_projection : 1;
  if (cfg.protgnn_plus) eligible_start = std::max(eligible_start, cfg.sampler_start + 1);

  Metrics metrics;
  metrics.eligible_start = eligible_start;

  struct Snapshot {
    ModelState model;
    std::vector<ProjectionRecord> provenance;
    int epoch = 0;
    double val = 0.0;
    bool set = false;
  } best;

  const int np = model.prototypes.count();
  std::vector<ProjectionRecord> latest(static_cast<std::size_t>(np));  // index -1 marks unset
  auto provenance_list = [&]() {
    std::vector<ProjectionRecord> out;
    for (const ProjectionRecord& r : latest)
      if (r.prototype_index >= 0) out.push_back(r);
    return out;
  };

  int patience_used = 0;
  for (int t = 1; t <= cfg.epochs; ++t) {
    metrics.stopped_epoch = t;
    std::vector<int> order = ds.splits.train;
    rng.shuffle(order);

    EpochMetrics em;
    em.epoch = t;
    double n_seen = 0.0, loss_sum = 0.0, ce_sum = 0.0, clst_sum = 0.0, sep_sum = 0.0, div_sum = 0.0;
    int n_batches = 0, correct = 0;
    bool bad = false;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(b0),
                                   order.begin() + static_cast<std::ptrdiff_t>(b1));
      Tape tape;
      BatchTerms bt = batch_objective(tape, model, instances, batch, cfg);
      const double lv = tape.scalar(bt.loss);
      if (!std::isfinite(lv)) {
        bad = true;
        break;
      }
      const double bs = static_cast<double>(batch.size());
      loss_sum += lv * bs;
      ce_sum += tape.scalar(bt.ce) * bs;
      clst_sum += tape.scalar(bt.clst) * bs;
      sep_sum += tape.scalar(bt.sep) * bs;
      div_sum += tape.scalar(bt.div);
      ++n_batches;
      correct += bt.correct;
      n_seen += bs;
      tape.backward(bt.loss);
      adam.step();
    }
    if (n_seen > 0.0) {
      em.loss = loss_sum / n_seen;
      em.cross_entropy = ce_sum / n_seen;
      em.cluster = clst_sum / n_seen;
      em.separation = sep_sum / n_seen;
      em.diversity = div_sum / static_cast<double>(n_batches);
      em.train_accuracy = static_cast<double>(correct) / n_seen;
    }
    if (bad) {
      metrics.diverged = true;
      metrics.epochs.push_back(em);
      break;
    }

    if (t > cfg.projection_start && t % cfg.projection_every == 0) {
      em.projected = true;
      for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<int> members;
        for (int idx : ds.splits.train)
          if (instances[static_cast<std::size_t>(idx)].label == c) members.push_back(idx);
        if (members.empty())
          throw DataError("train: no training graphs of class " + std::to_string(c) +
                          " to project onto");
        std::vector<Tensor> whole(members.size());
        std::vector<CandidateGraph> cands(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
          const Instance& inst = instances[static_cast<std::size_t>(members[i])];
          whole[i] = encode_graph(inst.graph, model.encoder, enc_cfg, nullptr, inst.center).h;
          cands[i] = CandidateGraph{&inst.graph, members[i], inst.center, &whole[i]};
        }
        for (int j : model.prototypes.of_class(c)) {
          const Tensor p = matrix_row(model.prototypes.prototypes.value, static_cast<std::size_t>(j));
          SubgraphMatch match = project_prototype(p, cands, model.encoder, enc_cfg, cfg.mcts, cfg.eps_sim);
          for (std::size_t d = 0; d < match.embedding.v.size(); ++d)
            model.prototypes.prototypes.value.at(static_cast<std::size_t>(j), d) = match.embedding.v[d];

          ProjectionRecord rec;
          rec.prototype_index = j;
          rec.cls = c;
          rec.source_graph_index = match.graph_index;
          rec.node_set = match.node_set;
          rec.score = match.score;
          rec.epoch = t;

          // independent re-derivation: carve the recorded node set back out
          // of the source graph, re-embed, and demand bit equality
          const Instance& src = instances[static_cast<std::size_t>(match.graph_index)];
          auto [sub, origin] = induced_subgraph(src.graph, match.node_set);
          Tensor h2 = encode_graph(sub, model.encoder, enc_cfg, nullptr,
                                   center_in_subset(origin, src.center))
                          .h;
          ProjectionEvent ev;
          ev.record = rec;
          ev.max_abs_diff = max_abs_diff(
              h2, matrix_row(model.prototypes.prototypes.value, static_cast<std::size_t>(j)));
          ev.connected = is_connected(sub);
          if (ev.max_abs_diff != 0.0)
            throw NumericError("train: projected prototype " + std::to_string(j) +
                               " differs from its source subgraph embedding");
          if (!ev.connected)
            throw NumericError("train: projected subgraph for prototype " + std::to_string(j) +
                               " is not connected");
          metrics.projection_events.push_back(ev);
          latest[static_cast<std::size_t>(j)] = rec;
        }
      }
    }

    if (cfg.protgnn_plus && t > cfg.sampler_start) {
      em.sampler_pass = true;
      SamplerPass pass;
      pass.epoch = t;
      pass.stats = optimize_sampler(model.scorer, instances, ds.splits.train, model.prototypes,
                                    model.encoder, enc_cfg, cfg.sampler, rng);
      metrics.sampler_passes.push_back(pass);
    }

    const bool conditioned_val = cfg.protgnn_plus && t > cfg.sampler_start;
    em.val_accuracy = evaluate_instances(model, instances, ds.splits.val, conditioned_val).accuracy;
    em.eligible = t >= eligible_start;

    bool stop = false;
    if (em.eligible) {
      if (!best.set || em.val_accuracy > best.val) {
        best.model = model;
        best.provenance = provenance_list();
        best.epoch = t;
        best.val = em.val_accuracy;
        best.set = true;
        patience_used = 0;
      } else if (cfg.patience > 0 && ++patience_used >= cfg.patience) {
        stop = true;
      }
    }
    metrics.epochs.push_back(em);
    if (stop) break;
  }

  if (!best.set) {
    best.model = model;
    best.provenance = provenance_list();
    best.epoch = metrics.stopped_epoch;
    best.val = metrics.epochs.empty() ? 0.0 : metrics.epochs.back().val_accuracy;
  }

  Checkpoint ck;
  ck.config = cfg;
  ck.task = ds.task;
  ck.num_classes = ds.num_classes;
  ck.input_dim = enc_cfg.input_dim;
  ck.epoch = best.epoch;
  ck.best_val_accuracy = best.val;
  ck.model = std::move(best.model);
  ck.provenance = std::move(best.provenance);

  metrics.best_epoch = ck.epoch;
  metrics.best_val_accuracy = ck.best_val_accuracy;
  const bool conditioned_test = cfg.protgnn_plus && ck.epoch > cfg.sampler_start;
  metrics.test_accuracy =
      evaluate_instances(ck.model, instances, ds.splits.test, conditioned_test).accuracy;

  return {std::move(ck), std::move(metrics)};
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["best_epoch"] = m.best_epoch;
  j["best_val_accuracy"] = m.best_val_accuracy;
  j["test_accuracy"] = m.test_accuracy;
  j["eligible_start"] = m.eligible_start;
  j["diverged"] = m.diverged;
  j["stopped_epoch"] = m.stopped_epoch;
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochMetrics& e : m.epochs) {
    nlohmann::json row;
    row["epoch"] = e.epoch;
    row["loss"] = e.loss;
    row["cross_entropy"] = e.cross_entropy;
    row["cluster"] = e.cluster;
    row["separation"] = e.separation;
    row["diversity"] = e.diversity;
    row["train_accuracy"] = e.train_accuracy;
    row["val_accuracy"] = e.val_accuracy;
    row["projected"] = e.projected;
    row["sampler_pass"] = e.sampler_pass;
    row["eligible"] = e.eligible;
    epochs.push_back(std::move(row));
  }
  j["epochs"] = std::move(epochs);
  nlohmann::json events = nlohmann::json::array();
  for (const ProjectionEvent& ev : m.projection_events) {
    nlohmann::json row;
    row["epoch"] = ev.record.epoch;
    row["prototype_index"] = ev.record.prototype_index;
    row["class"] = ev.record.cls;
    row["source_graph_index"] = ev.record.source_graph_index;
    row["node_set"] = ev.record.node_set;
    row["score"] = ev.record.score;
    row["max_abs_diff"] = ev.max_abs_diff;
    row["connected"] = ev.connected;
    events.push_back(std::move(row));
  }
  j["projection_events"] = std::move(events);
  nlohmann::json passes = nlohmann::json::array();
  for (const SamplerPass& p : m.sampler_passes) {
    nlohmann::json row;
    row["epoch"] = p.epoch;
    row["mean_sim_before"] = p.stats.mean_sim_before;
    row["mean_sim_after"] = p.stats.mean_sim_after;
    row["mean_budget_excess"] = p.stats.mean_budget_excess;
    row["steps"] = p.stats.steps;
    passes.push_back(std::move(row));
  }
  j["sampler_passes"] = std::move(passes);
  return j;
}

EvalResult evaluate_instances(const ModelState& model, const std::vector<Instance>& instances,
                              const std::vector<int>& indices, bool conditioned) {
  EvalResult r;
  r.conditioned = conditioned;
  const std::size_t nc = static_cast<std::size_t>(model.num_classes);
  r.confusion = Tensor::zeros({nc, nc});
  int correct = 0;
  for (int idx : indices) {
    const Instance& inst = instances[static_cast<std::size_t>(idx)];
    const HeadOutput out =
        conditioned ? model_forward_conditioned(model, inst) : model_forward(model, inst);
    const int pred = argmax_class(out);
    r.predictions.push_back(pred);
    r.logits.push_back(out.logits);
    r.confusion.at(static_cast<std::size_t>(inst.label), static_cast<std::size_t>(pred)) += 1.0;
    if (pred == inst.label) ++correct;
  }
  r.accuracy = indices.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(indices.size());
  return r;
}

std::vector<int> split_indices(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.splits.train;
  if (split == "val") return ds.splits.val;
  if (split == "test") return ds.splits.test;
  throw ConfigError("unknown split '" + split + "' (expected train, val or test)");
}

EvalResult evaluate_split(const Checkpoint& ck, const Dataset& ds, const std::string& split) {
  const std::vector<Instance> instances = build_instances(ds, ck.model.encoder_cfg);
  return evaluate_instances(ck.model, instances, split_indices(ds, split), ck.model.has_scorer);
}

BaselineOutcome train_gcn_baseline(const Dataset& ds, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  ds.validate();
  if (ds.splits.empty()) throw DataError("baseline: dataset has no splits");

  Rng rng(cfg.seed);
  EncoderConfig enc_cfg = cfg.encoder;
  if (!cfg.readout_set) enc_cfg.readout = default_readout(ds.task);
  enc_cfg.input_dim = static_cast<int>(ds.graphs[0].node_features.cols());
  enc_cfg.validate();

  const std::vector<Instance> instances = build_instances(ds, enc_cfg);
  EncoderState enc = EncoderState::init(enc_cfg, rng);
  const std::size_t d = static_cast<std::size_t>(enc_cfg.embed_dim);
  const std::size_t nc = static_cast<std::size_t>(ds.num_classes);
  Tensor w0 = Tensor::zeros({d, nc});
  const double a = std::sqrt(6.0 / static_cast<double>(d + nc));
  for (double& x : w0.v) x = rng.uniform(-a, a);
  Parameter head_w("baseline.head_w", std::move(w0));
  Parameter head_b("baseline.head_b", Tensor::zeros({nc}));

  std::vector<Parameter*> params = enc.params();
  params.push_back(&head_w);
  params.push_back(&head_b);
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  Adam adam(params, opt_cfg);

  auto logits_of = [&](const EncoderState& e, const Tensor& hw, const Tensor& hb,
                       const Instance& inst) {
    Embeddings emb = encode_graph(inst.graph, e, enc_cfg, nullptr, inst.center);
    Tensor row = Tensor::zeros({1, d});
    row.v = emb.h.v;
    Tensor lg = protgnn::matmul(row, hw);
    for (std::size_t k = 0; k < nc; ++k) lg.v[k] += hb.v[k];
    return lg.v;
  };
  auto accuracy_on = [&](const EncoderState& e, const Tensor& hw, const Tensor& hb,
                         const std::vector<int>& idxs) {
    if (idxs.empty()) return 0.0;
    int correct = 0;
    for (int i : idxs) {
      const Instance& inst = instances[static_cast<std::size_t>(i)];
      const std::vector<double> lg = logits_of(e, hw, hb, inst);
      int pred = 0;
      for (std::size_t k = 1; k < lg.size(); ++k)
        if (lg[k] > lg[static_cast<std::size_t>(pred)]) pred = static_cast<int>(k);
      if (pred == inst.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idxs.size());
  };

  BaselineOutcome out;
  struct Snap {
    std::vector<Tensor> enc_w;
    Tensor hw, hb;
    int epoch = 0;
    double val = -1.0;
    bool set = false;
  } bestp;
  int patience_used = 0;

  for (int t = 1; t <= cfg.epochs; ++t) {
    std::vector<int> order = ds.splits.train;
    rng.shuffle(order);
    bool bad = false;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      Tape tape;
      std::vector<Var> weights;
      for (Parameter& w : enc.weights) weights.push_back(tape.param(w));
      Var hw = tape.param(head_w);
      Var hb = tape.param(head_b);
      std::vector<Var> ce_list;
      for (std::size_t i = b0; i < b1; ++i) {
        const Instance& inst = instances[static_cast<std::size_t>(order[i])];
        EncodeVars ev = encode_on_tape(tape, inst.graph.node_features, tape.constant(inst.a_norm),
                                       weights, enc_cfg.readout, inst.center);
        Var row = tape.reshape(ev.h, {1, d});
        Var logits = tape.row(tape.add_row_vector(tape.matmul(row, hw), hb), 0);
        ce_list.push_back(tape.softmax_cross_entropy(logits, static_cast<std::size_t>(inst.label)));
      }
      Var loss = tape.mean(ce_list);
      if (!std::isfinite(tape.scalar(loss))) {
        bad = true;
        break;
      }
      tape.backward(loss);
      adam.step();
    }
    if (bad) {
      out.diverged = true;
      break;
    }
    const double val = accuracy_on(enc, head_w.value, head_b.value, ds.splits.val);
    if (!bestp.set || val > bestp.val) {
      bestp.enc_w.clear();
      for (const Parameter& w : enc.weights) bestp.enc_w.push_back(w.value);
      bestp.hw = head_w.value;
      bestp.hb = head_b.value;
      bestp.epoch = t;
      bestp.val = val;
      bestp.set = true;
      patience_used = 0;
    } else if (cfg.patience > 0 && ++patience_used >= cfg.patience) {
      break;
    }
  }

  if (bestp.set) {
    for (std::size_t l = 0; l < enc.weights.size(); ++l) enc.weights[l].value = bestp.enc_w[l];
    head_w.value = bestp.hw;
    head_b.value = bestp.hb;
    out.best_epoch = bestp.epoch;
    out.best_val_accuracy = bestp.val;
  }
  out.test_accuracy = accuracy_on(enc, head_w.value, head_b.value, ds.splits.test);
  return out;
}

namespace {

nlohmann::json head_to_json(const HeadOutput& h) {
  nlohmann::json j;
  j["similarities"] = h.similarities;
  j["logits"] = h.logits;
  j["probabilities"] = h.probabilities;
  return j;
}

}  // namespace

nlohmann::json explain_instance(const Checkpoint& ck, const Dataset& ds, int index,
                                const std::string& out_dir) {
  const std::vector<Instance> instances = build_instances(ds, ck.model.encoder_cfg);
  if (index < 0 || index >= static_cast<int>(instances.size()))
    throw DataError("explain: instance index " + std::to_string(index) + " out of range");
  std::filesystem::create_directories(out_dir);
  const Instance& inst = instances[static_cast<std::size_t>(index)];

  nlohmann::json j;
  j["instance"] = index;
  j["label"] = inst.label;
  const HeadOutput plain = model_forward(ck.model, inst);
  j["plain"] = head_to_json(plain);

  HeadOutput active = plain;
  if (ck.model.has_scorer) {
    const HeadOutput cond = model_forward_conditioned(ck.model, inst);
    j["conditioned"] = head_to_json(cond);
    active = cond;
  }
  const int predicted = argmax_class(active);
  j["predicted"] = predicted;
  j["class_scores"] = active.logits;  // per class: the sum of its prototypes' similarities

  if (ck.model.has_scorer) {
    const Embeddings base =
        encode_graph(inst.graph, ck.model.encoder, ck.model.encoder_cfg, nullptr, inst.center);
    nlohmann::json sels = nlohmann::json::array();
    for (int p = 0; p < ck.model.prototypes.count(); ++p) {
      const Tensor proto = matrix_row(ck.model.prototypes.prototypes.value, static_cast<std::size_t>(p));
      const EdgeWeights ew = edge_weights(inst.graph, base.z, proto, ck.model.scorer);
      const SubgraphSelection sel = select_subgraph(inst.graph, ew.per_edge, ck.config.sampler.budget);
      double mass = 0.0;
      for (double w : ew.per_edge.v) mass += w;
      nlohmann::json e;
      e["prototype"] = p;
      e["class"] = ck.model.prototypes.class_of[static_cast<std::size_t>(p)];
      e["nodes"] = sel.nodes;
      e["edges"] = sel.edges;
      e["total_edge_mass"] = mass;
      sels.push_back(std::move(e));
      if (ck.model.prototypes.class_of[static_cast<std::size_t>(p)] == predicted) {
        write_dot(inst.graph, "match", out_dir + "/match_p" + std::to_string(p) + ".dot", sel.edges,
                  sel.nodes);
      }
    }
    j["selections"] = std::move(sels);
  }

  nlohmann::json prov = nlohmann::json::array();
  for (const ProjectionRecord& r : ck.provenance) {
    nlohmann::json e;
    e["prototype_index"] = r.prototype_index;
    e["class"] = r.cls;
    e["source_graph_index"] = r.source_graph_index;
    e["node_set"] = r.node_set;
    e["score"] = r.score;
    e["epoch"] = r.epoch;
    prov.push_back(std::move(e));
    if (r.cls == predicted && r.source_graph_index >= 0 &&
        r.source_graph_index < static_cast<int>(instances.size())) {
      const Graph& src = instances[static_cast<std::size_t>(r.source_graph_index)].graph;
      std::vector<std::pair<int, int>> hot;
      for (const auto& [u, v] : src.edges) {
        const bool uin = std::binary_search(r.node_set.begin(), r.node_set.end(), u);
        const bool vin = std::binary_search(r.node_set.begin(), r.node_set.end(), v);
        if (uin && vin) hot.emplace_back(u, v);
      }
      write_dot(src, "proto_source",
                out_dir + "/prototype_p" + std::to_string(r.prototype_index) + "_source.dot", hot,
                r.node_set);
    }
  }
  j["prototype_provenance"] = std::move(prov);

  write_dot(inst.graph, "instance", out_dir + "/instance.dot");
  std::ofstream f(out_dir + "/explanation.json", std::ios::binary);
  if (!f) throw DataError("explain: cannot write '" + out_dir + "/explanation.json'");
  f << j.dump(2) << "\n";
  return j;
}

void export_embeddings(const Checkpoint& ck, const Dataset& ds, const std::string& out_path) {
  const std::vector<Instance> instances = build_instances(ds, ck.model.encoder_cfg);
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw DataError("export-embeddings: cannot write '" + out_path + "'");
  const std::size_t dim = ck.model.prototypes.prototypes.value.cols();
  f << "kind,index,class";
  for (std::size_t k = 0; k < dim; ++k) f << ",e" << k;
  f << "\n";
  char buf[40];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    f << ',' << buf;
  };
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const Embeddings e =
        encode_graph(inst.graph, ck.model.encoder, ck.model.encoder_cfg, nullptr, inst.center);
    f << "graph," << i << ',' << inst.label;
    for (std::size_t k = 0; k < dim; ++k) put(e.h.v[k]);
    f << "\n";
  }
  for (int p = 0; p < ck.model.prototypes.count(); ++p) {
    f << "prototype," << p << ',' << ck.model.prototypes.class_of[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < dim; ++k)
      put(ck.model.prototypes.prototypes.value.at(static_cast<std::size_t>(p), k));
    f << "\n";
  }
  if (!f) throw DataError("export-embeddings: write to '" + out_path + "' failed");
}

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<double> same_class_cosines(const PrototypeLayer& layer) {
  std::vector<double> out;
  for (int c = 0; c < layer.num_classes(); ++c) {
    const auto m = class_cosine_matrix(layer, c);
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m[a].size(); ++b) out.push_back(m[a][b]);
  }
  return out;
}

// Final-model loss-term values on the training split, for grid reports.
std::pair<double, double> train_cluster_sep(const Checkpoint& ck, const Dataset& ds) {
  const std::vector<Instance> instances = build_instances(ds, ck.model.encoder_cfg);
  const std::vector<int>& idxs = ds.splits.train;
  const std::size_t d = ck.model.prototypes.prototypes.value.cols();
  Tensor h = Tensor::zeros({idxs.size(), d});
  std::vector<int> y(idxs.size());
  for (std::size_t i = 0; i < idxs.size(); ++i) {
    const Instance& inst = instances[static_cast<std::size_t>(idxs[i])];
    const Embeddings e =
        encode_graph(inst.graph, ck.model.encoder, ck.model.encoder_cfg, nullptr, inst.center);
    for (std::size_t k = 0; k < d; ++k) h.at(i, k) = e.h.v[k];
    y[i] = inst.label;
  }
  return {cluster_cost(h, y, ck.model.prototypes), separation_cost(h, y, ck.model.prototypes)};
}

}  // namespace

nlohmann::json run_hparam_study(const std::string& kind, const Dataset& ds,
                                const TrainConfig& base_cfg) {
  nlohmann::json report;
  report["kind"] = kind;
  nlohmann::json rows = nlohmann::json::array();

  if (kind == "m-sweep") {
    for (int m = 1; m <= 10; ++m) {
      TrainConfig cfg = base_cfg;
      cfg.per_class = m;
      const TrainOutcome o = train(ds, cfg);
      nlohmann::json row;
      row["per_class"] = m;
      row["best_val_accuracy"] = o.metrics.best_val_accuracy;
      row["test_accuracy"] = o.metrics.test_accuracy;
      row["best_epoch"] = o.metrics.best_epoch;
      rows.push_back(std::move(row));
    }
  } else if (kind == "div-ablation") {
    const double on = base_cfg.lambda3 > 0.0 ? base_cfg.lambda3 : 0.01;
    for (double l3 : {0.0, on}) {
      TrainConfig cfg = base_cfg;
      cfg.lambda3 = l3;
      const TrainOutcome o = train(ds, cfg);
      nlohmann::json row;
      row["lambda3"] = l3;
      row["test_accuracy"] = o.metrics.test_accuracy;
      const std::vector<double> cosines = same_class_cosines(o.checkpoint.model.prototypes);
      row["median_same_class_cosine"] = median(cosines);
      nlohmann::json mats = nlohmann::json::array();
      for (int c = 0; c < o.checkpoint.model.prototypes.num_classes(); ++c)
        mats.push_back(class_cosine_matrix(o.checkpoint.model.prototypes, c));
      row["cosine_matrices"] = std::move(mats);
      rows.push_back(std::move(row));
    }
  } else if (kind == "cluster-sep") {
    for (double l1 : {0.0, 0.05, 0.10}) {
      for (double l2 : {0.0, 0.05}) {
        TrainConfig cfg = base_cfg;
        cfg.lambda1 = l1;
        cfg.lambda2 = l2;
        const TrainOutcome o = train(ds, cfg);
        const auto [clst, sep] = train_cluster_sep(o.checkpoint, ds);
        nlohmann::json row;
        row["lambda1"] = l1;
        row["lambda2"] = l2;
        row["test_accuracy"] = o.metrics.test_accuracy;
        row["train_cluster_cost"] = clst;
        row["train_separation_cost"] = sep;
        rows.push_back(std::move(row));
      }
    }
  } else {
    throw ConfigError("study: unknown kind '" + kind +
                      "' (expected m-sweep, div-ablation or cluster-sep)");
  }
  report["rows"] = std::move(rows);
  return report;
}

}  // namespace protgnn
