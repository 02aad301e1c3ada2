#pragma once

#include <string>
#include <vector>

#include "protgnn/encoder.hpp"
#include "protgnn/graph.hpp"
#include "protgnn/prototype.hpp"
#include "protgnn/sampler.hpp"

namespace protgnn {

// Everything a trained classifier carries: the message-passing encoder,
// the class-tagged prototypes, the frozen 0/1 wiring into class logits,
// and optionally the conditional edge scorer.
struct ModelState {
  EncoderConfig encoder_cfg;
  EncoderState encoder;
  PrototypeLayer prototypes;
  Tensor final_weights;  // num_classes x num_prototypes, fixed 0/1
  EdgeScorer scorer;
  bool has_scorer = false;
  Task task = Task::GraphClassification;
  int num_classes = 0;

  static ModelState init(const EncoderConfig& enc_cfg, int num_classes, int per_class,
                         double eps_sim, bool with_scorer, Rng& rng);

  std::vector<Parameter*> trainable_params();  // encoder layers + prototypes
  std::vector<Parameter*> all_params();        // + scorer when present

  void validate() const;
};

// Plain forward: one shared embedding scored against every prototype.
HeadOutput model_forward(const ModelState& model, const Instance& inst);

// Conditioned forward: each prototype sees the graph reweighted by its own
// edge scores; logits are the per-class sums of those similarities.
HeadOutput model_forward_conditioned(const ModelState& model, const Instance& inst);

int argmax_class(const HeadOutput& out);

}  // namespace protgnn
