#include "protgnn/model.hpp"

#include "protgnn/errors.hpp"

namespace protgnn {

ModelState ModelState::init(const EncoderConfig& enc_cfg, int num_classes, int per_class,
                            double eps_sim, bool with_scorer, Rng& rng) {
  enc_cfg.validate();
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  ModelState m;
  m.encoder_cfg = enc_cfg;
  m.encoder = EncoderState::init(enc_cfg, rng);
  m.prototypes = PrototypeLayer::init(num_classes, per_class, enc_cfg.embed_dim, eps_sim, rng);
  m.final_weights = init_final_layer(num_classes, per_class);
  m.num_classes = num_classes;
  m.has_scorer = with_scorer;
  if (with_scorer) m.scorer = EdgeScorer::init(enc_cfg.embed_dim, rng);
  return m;
}

std::vector<Parameter*> ModelState::trainable_params() {
  std::vector<Parameter*> out = encoder.params();
  out.push_back(&prototypes.prototypes);
  return out;
}

std::vector<Parameter*> ModelState::all_params() {
  std::vector<Parameter*> out = trainable_params();
  if (has_scorer)
    for (Parameter* p : scorer.params()) out.push_back(p);
  return out;
}

void ModelState::validate() const {
  encoder_cfg.validate();
  if (num_classes != prototypes.num_classes())
    throw ConfigError("model: prototype layer class count mismatch");
  if (final_weights.rows() != static_cast<std::size_t>(num_classes) ||
      final_weights.cols() != static_cast<std::size_t>(prototypes.count()))
    throw ConfigError("model: final layer shape mismatch");
  for (double w : final_weights.v)
    if (w != 0.0 && w != 1.0) throw ConfigError("model: final layer must stay 0/1");
}

HeadOutput model_forward(const ModelState& model, const Instance& inst) {
  Embeddings e = encode_graph(inst.graph, model.encoder, model.encoder_cfg, nullptr, inst.center);
  return head_forward(e.h, model.prototypes, model.final_weights);
}

HeadOutput model_forward_conditioned(const ModelState& model, const Instance& inst) {
  if (!model.has_scorer)
    throw ConfigError("model_forward_conditioned: model carries no edge scorer");
  Embeddings base = encode_graph(inst.graph, model.encoder, model.encoder_cfg, nullptr, inst.center);
  const int np = model.prototypes.count();
  std::vector<double> sims(static_cast<std::size_t>(np));
  for (int j = 0; j < np; ++j) {
    const Tensor p = matrix_row(model.prototypes.prototypes.value, static_cast<std::size_t>(j));
    EdgeWeights ew = edge_weights(inst.graph, base.z, p, model.scorer);
    Embeddings cond =
        encode_graph(inst.graph, model.encoder, model.encoder_cfg, &ew.matrix, inst.center);
    sims[static_cast<std::size_t>(j)] = similarity(p, cond.h, model.prototypes.eps_sim);
  }
  return head_from_similarities(std::move(sims), model.final_weights);
}

int argmax_class(const HeadOutput& out) {
  int best = 0;
  for (std::size_t k = 1; k < out.logits.size(); ++k)
    if (out.logits[k] > out.logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

}  // namespace protgnn
