#include "protgnn/config.hpp"

#include <fstream>
#include <sstream>

#include "protgnn/errors.hpp"

namespace protgnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

void assign(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "epochs") c.epochs = static_cast<int>(to_int(key, v));
  else if (key == "batch_size") c.batch_size = static_cast<int>(to_int(key, v));
  else if (key == "lr") c.lr = to_double(key, v);
  else if (key == "patience") c.patience = static_cast<int>(to_int(key, v));
  else if (key == "per_class") c.per_class = static_cast<int>(to_int(key, v));
  else if (key == "lambda1") c.lambda1 = to_double(key, v);
  else if (key == "lambda2") c.lambda2 = to_double(key, v);
  else if (key == "lambda3") c.lambda3 = to_double(key, v);
  else if (key == "s_max") c.s_max = to_double(key, v);
  else if (key == "eps_sim") c.eps_sim = to_double(key, v);
  else if (key == "sep_clamp") c.sep_clamp = to_double(key, v);
  else if (key == "projection_start") c.projection_start = static_cast<int>(to_int(key, v));
  else if (key == "projection_every") c.projection_every = static_cast<int>(to_int(key, v));
  else if (key == "protgnn_plus") c.protgnn_plus = to_bool(key, v);
  else if (key == "sampler_start") c.sampler_start = static_cast<int>(to_int(key, v));
  else if (key == "encoder.num_layers") c.encoder.num_layers = static_cast<int>(to_int(key, v));
  else if (key == "encoder.hidden_dim") c.encoder.hidden_dim = static_cast<int>(to_int(key, v));
  else if (key == "encoder.embed_dim") c.encoder.embed_dim = static_cast<int>(to_int(key, v));
  else if (key == "encoder.readout") {
    c.encoder.readout = readout_from_name(v);
    c.readout_set = true;
  } else if (key == "mcts.lambda") c.mcts.lambda_explore = to_double(key, v);
  else if (key == "mcts.iterations") c.mcts.iterations = static_cast<int>(to_int(key, v));
  else if (key == "mcts.max_children") c.mcts.max_children = static_cast<int>(to_int(key, v));
  else if (key == "mcts.n_min") c.mcts.n_min = static_cast<int>(to_int(key, v));
  else if (key == "mcts.candidate_graphs") c.mcts.candidate_graphs = static_cast<int>(to_int(key, v));
  else if (key == "sampler.lambda_b") c.sampler.lambda_b = to_double(key, v);
  else if (key == "sampler.budget") c.sampler.budget = to_double(key, v);
  else if (key == "sampler.lr") c.sampler.sgd_lr = to_double(key, v);
  else if (key == "sampler.steps") c.sampler.sgd_steps = static_cast<int>(to_int(key, v));
  else throw ConfigError("config: unknown key '" + key + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("config: lr must be > 0");
  if (per_class < 1) throw ConfigError("config: per_class must be >= 1");
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
    throw ConfigError("config: loss weights must be >= 0");
  if (s_max < -1.0 || s_max > 1.0) throw ConfigError("config: s_max must lie in [-1, 1]");
  if (eps_sim <= 0.0 || eps_sim >= 1.0) throw ConfigError("config: eps_sim must lie in (0, 1)");
  if (sep_clamp <= 0.0) throw ConfigError("config: sep_clamp must be > 0");
  if (projection_start < 0) throw ConfigError("config: projection_start must be >= 0");
  if (projection_every < 1) throw ConfigError("config: projection_every must be >= 1");
  if (sampler_start < 0) throw ConfigError("config: sampler_start must be >= 0");
  // projection_start/sampler_start at or past epochs simply never fire
  encoder.validate();
  mcts.validate();
  sampler.validate();
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key=value: '" + line + "'");
    assign(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_train_config(buf.str());
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["patience"] = cfg.patience;
  j["per_class"] = cfg.per_class;
  j["lambda1"] = cfg.lambda1;
  j["lambda2"] = cfg.lambda2;
  j["lambda3"] = cfg.lambda3;
  j["s_max"] = cfg.s_max;
  j["eps_sim"] = cfg.eps_sim;
  j["sep_clamp"] = cfg.sep_clamp;
  j["projection_start"] = cfg.projection_start;
  j["projection_every"] = cfg.projection_every;
  j["protgnn_plus"] = cfg.protgnn_plus;
  j["sampler_start"] = cfg.sampler_start;
  j["encoder.num_layers"] = cfg.encoder.num_layers;
  j["encoder.hidden_dim"] = cfg.encoder.hidden_dim;
  j["encoder.embed_dim"] = cfg.encoder.embed_dim;
  j["encoder.readout"] = readout_name(cfg.encoder.readout);
  j["mcts.lambda"] = cfg.mcts.lambda_explore;
  j["mcts.iterations"] = cfg.mcts.iterations;
  j["mcts.max_children"] = cfg.mcts.max_children;
  j["mcts.n_min"] = cfg.mcts.n_min;
  j["mcts.candidate_graphs"] = cfg.mcts.candidate_graphs;
  j["sampler.lambda_b"] = cfg.sampler.lambda_b;
  j["sampler.budget"] = cfg.sampler.budget;
  j["sampler.lr"] = cfg.sampler.sgd_lr;
  j["sampler.steps"] = cfg.sampler.sgd_steps;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.patience = j.at("patience").get<int>();
  c.per_class = j.at("per_class").get<int>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.lambda3 = j.at("lambda3").get<double>();
  c.s_max = j.at("s_max").get<double>();
  c.eps_sim = j.at("eps_sim").get<double>();
  c.sep_clamp = j.at("sep_clamp").get<double>();
  c.projection_start = j.at("projection_start").get<int>();
  c.projection_every = j.at("projection_every").get<int>();
  c.protgnn_plus = j.at("protgnn_plus").get<bool>();
  c.sampler_start = j.at("sampler_start").get<int>();
  c.encoder.num_layers = j.at("encoder.num_layers").get<int>();
  c.encoder.hidden_dim = j.at("encoder.hidden_dim").get<int>();
  c.encoder.embed_dim = j.at("encoder.embed_dim").get<int>();
  c.encoder.readout = readout_from_name(j.at("encoder.readout").get<std::string>());
  c.readout_set = true;  // the echo stores the resolved readout
  c.mcts.lambda_explore = j.at("mcts.lambda").get<double>();
  c.mcts.iterations = j.at("mcts.iterations").get<int>();
  c.mcts.max_children = j.at("mcts.max_children").get<int>();
  c.mcts.n_min = j.at("mcts.n_min").get<int>();
  c.mcts.candidate_graphs = j.at("mcts.candidate_graphs").get<int>();
  c.sampler.lambda_b = j.at("sampler.lambda_b").get<double>();
  c.sampler.budget = j.at("sampler.budget").get<double>();
  c.sampler.sgd_lr = j.at("sampler.lr").get<double>();
  c.sampler.sgd_steps = j.at("sampler.steps").get<int>();
  return c;
}

}  // namespace protgnn
