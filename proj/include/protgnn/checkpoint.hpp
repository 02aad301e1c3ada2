#pragma once

#include <string>
#include <vector>

#include "protgnn/config.hpp"
#include "protgnn/model.hpp"

namespace protgnn {

// Where a projected prototype came from: the training graph, the node set
// of the matched subgraph, and the similarity it scored at that epoch.
struct ProjectionRecord {
  int prototype_index = -1;
  int cls = -1;
  int source_graph_index = -1;  // instance index within the training data
  std::vector<int> node_set;
  double score = 0.0;
  int epoch = -1;
};

struct Checkpoint {
  int version = 1;
  TrainConfig config;
  Task task = Task::GraphClassification;
  int num_classes = 0;
  int input_dim = 0;
  int epoch = 0;  // epoch the saved parameters come from
  double best_val_accuracy = 0.0;
  ModelState model;
  std::vector<ProjectionRecord> provenance;
};

// JSON with alphabetically ordered keys and shortest round-trip doubles,
// so identical states serialize to identical bytes.
std::string checkpoint_to_string(const Checkpoint& ck);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace protgnn
