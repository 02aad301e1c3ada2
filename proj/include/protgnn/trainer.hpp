#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "protgnn/checkpoint.hpp"
#include "protgnn/config.hpp"
#include "protgnn/dataset_io.hpp"
#include "protgnn/model.hpp"
#include "protgnn/sampler.hpp"

namespace protgnn {

// Graph tasks become one instance per graph; node tasks become one L-hop
// ego-net per node (L = encoder depth) with center-node readout. The
// normalized adjacency is cached on each instance.
std::vector<Instance> build_instances(const Dataset& ds, const EncoderConfig& enc_cfg);

// Readout to use when the config does not pin one explicitly.
Readout default_readout(Task task);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double cross_entropy = 0.0;
  double cluster = 0.0;
  double separation = 0.0;
  double diversity = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  bool projected = false;
  bool sampler_pass = false;
  bool eligible = false;  // epoch may become the best-validation snapshot
};

// One projection event as it was verified during training: the re-encoded
// source subgraph must match the stored prototype bit for bit.
struct ProjectionEvent {
  ProjectionRecord record;
  double max_abs_diff = 0.0;
  bool connected = false;
};

struct SamplerPass {
  int epoch = 0;
  SamplerStats stats;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  std::vector<ProjectionEvent> projection_events;
  std::vector<SamplerPass> sampler_passes;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;  // best-validation parameters on the test split
  int eligible_start = 0;      // first epoch the snapshot window covers
  bool diverged = false;
  int stopped_epoch = 0;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  Metrics metrics;
};

nlohmann::json metrics_to_json(const Metrics& m);

// Full optimization loop: every epoch minimizes the composite objective;
// past projection_start each projection_every-th epoch re-anchors every
// prototype onto its best-matching training subgraph; in plus mode each
// epoch past sampler_start also runs one scorer optimization pass. Best
// parameters by validation accuracy are snapshot within the window that
// starts at the first projection (and after the scorer warm-up in plus
// mode), so saved prototypes are always projected ones when projection is
// configured to happen.
TrainOutcome train(const Dataset& ds, const TrainConfig& cfg);

struct EvalResult {
  double accuracy = 0.0;
  Tensor confusion;  // rows: truth, cols: prediction
  std::vector<int> predictions;
  std::vector<std::vector<double>> logits;  // per evaluated instance
  bool conditioned = false;
};

EvalResult evaluate_instances(const ModelState& model, const std::vector<Instance>& instances,
                              const std::vector<int>& indices, bool conditioned);

// Split is "train", "val" or "test"; plus checkpoints evaluate through the
// conditioned forward, plain ones through the shared embedding.
EvalResult evaluate_split(const Checkpoint& ck, const Dataset& ds, const std::string& split);

std::vector<int> split_indices(const Dataset& ds, const std::string& split);

// Same encoder with a plain linear softmax head, for accuracy parity runs.
struct BaselineOutcome {
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int best_epoch = 0;
  bool diverged = false;
};

BaselineOutcome train_gcn_baseline(const Dataset& ds, const TrainConfig& cfg);

// Explanation bundle: JSON with per-prototype similarities, class score
// sums, and (in plus mode) the selected subgraph per prototype; DOT files
// for the instance and the predicted class's prototype sources.
nlohmann::json explain_instance(const Checkpoint& ck, const Dataset& ds, int index,
                                const std::string& out_dir);

// CSV: kind,index,class,e0..e{D-1} for every instance embedding plus every
// prototype, %.17g so values survive a round-trip.
void export_embeddings(const Checkpoint& ck, const Dataset& ds, const std::string& out_path);

// kind: m-sweep (per-class count 1..10), div-ablation (diversity weight on
// and off, with same-class cosine matrices), cluster-sep (weight grid
// including the defaults).
nlohmann::json run_hparam_study(const std::string& kind, const Dataset& ds,
                                const TrainConfig& base_cfg);

}  // namespace protgnn
