#include "protgnn/prototype.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "protgnn/errors.hpp"

namespace protgnn {

std::vector<int> PrototypeLayer::of_class(int c) const {
  std::vector<int> out;
  for (int j = 0; j < count(); ++j)
    if (class_of[static_cast<std::size_t>(j)] == c) out.push_back(j);
  return out;
}

PrototypeLayer PrototypeLayer::init(int num_classes, int per_class, int embed_dim, double eps_sim, Rng& rng) {
  if (num_classes < 1 || per_class < 1 || embed_dim < 1)
    throw ConfigError("prototype layer: classes, prototypes per class and embed_dim must be >= 1");
  if (eps_sim <= 0.0 || eps_sim >= 1.0) throw ConfigError("prototype layer: eps_sim must lie in (0,1)");
  PrototypeLayer layer;
  layer.per_class = per_class;
  layer.eps_sim = eps_sim;
  Tensor p = Tensor::matrix(static_cast<std::size_t>(num_classes * per_class), static_cast<std::size_t>(embed_dim));
  for (double& x : p.v) x = rng.uniform();
  layer.prototypes = Parameter("prototypes", std::move(p));
  layer.class_of.resize(static_cast<std::size_t>(num_classes * per_class));
  for (int j = 0; j < num_classes * per_class; ++j)
    layer.class_of[static_cast<std::size_t>(j)] = j / per_class;
  return layer;
}

Tensor init_final_layer(int num_classes, int per_class) {
  Tensor w = Tensor::matrix(static_cast<std::size_t>(num_classes),
                            static_cast<std::size_t>(num_classes * per_class));
  for (int k = 0; k < num_classes; ++k)
    for (int j = 0; j < per_class; ++j)
      w.at(static_cast<std::size_t>(k), static_cast<std::size_t>(k * per_class + j)) = 1.0;
  return w;
}

double similarity_from_d2(double d2, double eps_sim) {
  return std::log(d2 + 1.0) - std::log(d2 + eps_sim);
}

double similarity(const Tensor& p, const Tensor& h, double eps_sim) {
  return similarity_from_d2(squared_distance(p, h), eps_sim);
}

Var similarity_on_tape(Tape& tape, Var p, Var h, double eps_sim) {
  Var d2 = tape.squared_distance(p, h);
  return tape.sub(tape.log(tape.add_const(d2, 1.0)), tape.log(tape.add_const(d2, eps_sim)));
}

HeadOutput head_from_similarities(std::vector<double> sims, const Tensor& final_weights) {
  const std::size_t nc = final_weights.rows();
  if (final_weights.cols() != sims.size())
    throw std::invalid_argument("head_from_similarities: one similarity per prototype required");
  HeadOutput out;
  out.similarities = std::move(sims);
  out.logits.assign(nc, 0.0);
  for (std::size_t k = 0; k < nc; ++k)
    for (std::size_t j = 0; j < out.similarities.size(); ++j)
      out.logits[k] += final_weights.at(k, j) * out.similarities[j];
  double mx = out.logits[0];
  for (double l : out.logits) mx = std::max(mx, l);
  double se = 0.0;
  for (double l : out.logits) se += std::exp(l - mx);
  out.probabilities.resize(out.logits.size());
  for (std::size_t k = 0; k < out.logits.size(); ++k)
    out.probabilities[k] = std::exp(out.logits[k] - mx) / se;
  return out;
}

HeadOutput head_forward(const Tensor& h, const PrototypeLayer& layer, const Tensor& final_weights) {
  const int np = layer.count();
  std::vector<double> sims(static_cast<std::size_t>(np));
  const std::size_t d = layer.prototypes.value.cols();
  for (int j = 0; j < np; ++j) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = layer.prototypes.value.at(static_cast<std::size_t>(j), k) - h.v[k];
      d2 += diff * diff;
    }
    sims[static_cast<std::size_t>(j)] = similarity_from_d2(d2, layer.eps_sim);
  }
  return head_from_similarities(std::move(sims), final_weights);
}

namespace {

Tensor row_of(const Tensor& m, int i) {
  Tensor r = Tensor::vector(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) r.v[j] = m.at(static_cast<std::size_t>(i), j);
  return r;
}

double min_d2_over(const Tensor& h, const Tensor& protos, const std::vector<int>& idx) {
  double best = std::numeric_limits<double>::infinity();
  for (int j : idx) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < protos.cols(); ++k) {
      const double diff = protos.at(static_cast<std::size_t>(j), k) - h.v[k];
      d2 += diff * diff;
    }
    best = std::min(best, d2);
  }
  return best;
}

}  // namespace

double cluster_cost(const Tensor& h_batch, const std::vector<int>& y, const PrototypeLayer& layer) {
  if (h_batch.rows() != y.size()) throw DataError("cluster_cost: batch and label sizes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Tensor h = row_of(h_batch, static_cast<int>(i));
    total += min_d2_over(h, layer.prototypes.value, layer.of_class(y[i]));
  }
  return total / static_cast<double>(y.size());
}

double separation_cost(const Tensor& h_batch, const std::vector<int>& y, const PrototypeLayer& layer) {
  if (h_batch.rows() != y.size()) throw DataError("separation_cost: batch and label sizes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Tensor h = row_of(h_batch, static_cast<int>(i));
    std::vector<int> others;
    for (int j = 0; j < layer.count(); ++j)
      if (layer.class_of[static_cast<std::size_t>(j)] != y[i]) others.push_back(j);
    if (others.empty()) throw DataError("separation_cost: no other-class prototypes");
    total += min_d2_over(h, layer.prototypes.value, others);
  }
  return -total / static_cast<double>(y.size());
}

namespace {

double cosine_rows(const Tensor& m, int a, int b) {
  double na2 = 0.0, nb2 = 0.0, d = 0.0;
  for (std::size_t k = 0; k < m.cols(); ++k) {
    const double x = m.at(static_cast<std::size_t>(a), k);
    const double y = m.at(static_cast<std::size_t>(b), k);
    na2 += x * x;
    nb2 += y * y;
    d += x * y;
  }
  if (na2 == 0.0 || nb2 == 0.0) return 0.0;
  return d / (std::sqrt(na2) * std::sqrt(nb2));
}

}  // namespace

double diversity_cost(const PrototypeLayer& layer, double s_max) {
  double total = 0.0;
  for (int c = 0; c < layer.num_classes(); ++c) {
    const std::vector<int> idx = layer.of_class(c);
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        total += std::max(0.0, cosine_rows(layer.prototypes.value, idx[a], idx[b]) - s_max);
  }
  return total;
}

std::vector<std::vector<double>> class_cosine_matrix(const PrototypeLayer& layer, int c) {
  const std::vector<int> idx = layer.of_class(c);
  std::vector<std::vector<double>> m(idx.size(), std::vector<double>(idx.size(), 1.0));
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      m[a][b] = cosine_rows(layer.prototypes.value, idx[a], idx[b]);
  return m;
}

}  // namespace protgnn
