#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "protgnn/encoder.hpp"
#include "protgnn/mcts.hpp"
#include "protgnn/sampler.hpp"

namespace protgnn {

// Full training recipe. Text form is flat key=value lines ('#' comments);
// dotted keys reach the encoder/search/scorer blocks. Unknown keys are
// rejected so typos fail loudly instead of training a different model.
struct TrainConfig {
  std::uint64_t seed = 0;
  int epochs = 500;
  int batch_size = 32;
  double lr = 0.005;
  int patience = 50;  // epochs without val improvement before stopping; <= 0 disables
  int per_class = 5;
  double lambda1 = 0.10;  // cluster
  double lambda2 = 0.05;  // separation
  double lambda3 = 0.01;  // diversity
  double s_max = 0.3;
  double eps_sim = 1e-4;
  double sep_clamp = 100.0;  // cap on squared distances inside the separation term
  int projection_start = 100;  // prototypes project when epoch > this ...
  int projection_every = 50;   // ... at this cadence
  bool protgnn_plus = false;
  int sampler_start = 200;  // scorer optimizes each epoch > this (plus mode)

  EncoderConfig encoder;
  bool readout_set = false;  // explicit encoder.readout overrides the task default
  MctsConfig mcts;
  SamplerConfig sampler;

  void validate() const;
};

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace protgnn
