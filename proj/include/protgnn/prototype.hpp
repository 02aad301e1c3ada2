#pragma once

#include <vector>

#include "protgnn/autodiff.hpp"
#include "protgnn/rng.hpp"

namespace protgnn {

// Class-tagged prototype vectors living in the graph embedding space.
// Layout: prototypes.value is (per_class * num_classes) x embed_dim with
// prototype j belonging to class class_of[j] = j / per_class.
struct PrototypeLayer {
  Parameter prototypes;
  std::vector<int> class_of;
  int per_class = 5;
  double eps_sim = 1e-4;

  int count() const { return static_cast<int>(class_of.size()); }
  int num_classes() const { return count() / per_class; }
  std::vector<int> of_class(int c) const;

  // entries drawn uniform [0,1) so the positive region overlaps ReLU outputs
  static PrototypeLayer init(int num_classes, int per_class, int embed_dim, double eps_sim, Rng& rng);
};

// Frozen 0/1 class-wiring matrix: weights[k][j] = 1 iff prototype j belongs
// to class k. Kept fixed for the whole training run.
Tensor init_final_layer(int num_classes, int per_class);

// log((d2 + 1) / (d2 + eps)), natural log, strictly positive and strictly
// decreasing in the squared distance d2.
double similarity_from_d2(double d2, double eps_sim);
double similarity(const Tensor& p, const Tensor& h, double eps_sim);
Var similarity_on_tape(Tape& tape, Var p, Var h, double eps_sim);

struct LossWeights {
  double lambda1 = 0.10;  // cluster
  double lambda2 = 0.05;  // separation
  double lambda3 = 0.01;  // diversity
  double s_max = 0.3;
};

struct HeadOutput {
  std::vector<double> similarities;  // per prototype
  std::vector<double> logits;        // per class
  std::vector<double> probabilities;
};

// Inference-path head: similarities to every prototype, class logits via
// the frozen 0/1 wiring, softmax probabilities.
HeadOutput head_forward(const Tensor& h, const PrototypeLayer& layer, const Tensor& final_weights);

// Same wiring applied to externally computed similarity scores, for paths
// where each prototype sees its own conditioned embedding.
HeadOutput head_from_similarities(std::vector<double> sims, const Tensor& final_weights);

// Batch loss terms over graph embeddings (rows of H) with labels y.
// Cluster: mean over samples of min squared distance to an own-class
// prototype. Separation: minus the mean of min squared distance to other
// class prototypes. Diversity: hinge on pairwise same-class cosine above
// s_max, summed over unordered pairs.
double cluster_cost(const Tensor& h_batch, const std::vector<int>& y, const PrototypeLayer& layer);
double separation_cost(const Tensor& h_batch, const std::vector<int>& y, const PrototypeLayer& layer);
double diversity_cost(const PrototypeLayer& layer, double s_max);

std::vector<std::vector<double>> class_cosine_matrix(const PrototypeLayer& layer, int c);

}  // namespace protgnn
