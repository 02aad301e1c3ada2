#include "protgnn/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "protgnn/errors.hpp"

namespace protgnn {

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  nlohmann::json j;
  j["shape"] = t.shape;
  j["values"] = t.v;
  return j;
}

Tensor tensor_from_json(const nlohmann::json& j, const std::string& name) {
  Tensor t;
  try {
    t.shape = j.at("shape").get<std::vector<std::size_t>>();
    t.v = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: tensor '" + name + "': " + e.what());
  }
  std::size_t n = 1;
  for (std::size_t s : t.shape) n *= s;
  if (t.v.size() != n)
    throw DataError("checkpoint: tensor '" + name + "' has " + std::to_string(t.v.size()) +
                    " values for shape " + t.shape_str());
  return t;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ck) {
  nlohmann::json j;
  j["version"] = ck.version;
  j["config"] = train_config_to_json(ck.config);
  j["task"] = ck.task == Task::GraphClassification ? "graph" : "node";
  j["num_classes"] = ck.num_classes;
  j["input_dim"] = ck.input_dim;
  j["epoch"] = ck.epoch;
  j["best_val_accuracy"] = ck.best_val_accuracy;
  j["has_scorer"] = ck.model.has_scorer;

  nlohmann::json tensors;
  for (const Parameter& w : ck.model.encoder.weights) tensors[w.name] = tensor_to_json(w.value);
  tensors[ck.model.prototypes.prototypes.name] = tensor_to_json(ck.model.prototypes.prototypes.value);
  tensors["final_weights"] = tensor_to_json(ck.model.final_weights);
  if (ck.model.has_scorer) {
    for (const Parameter* p :
         {&ck.model.scorer.w1, &ck.model.scorer.b1, &ck.model.scorer.w2, &ck.model.scorer.b2,
          &ck.model.scorer.w3, &ck.model.scorer.b3})
      tensors[p->name] = tensor_to_json(p->value);
  }
  j["tensors"] = std::move(tensors);

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
  }
  j["provenance"] = std::move(prov);
  return j.dump();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.version = j.at("version").get<int>();
    if (ck.version != 1)
      throw DataError("checkpoint: unsupported version " + std::to_string(ck.version));
    ck.config = train_config_from_json(j.at("config"));
    const std::string task = j.at("task").get<std::string>();
    if (task == "graph") ck.task = Task::GraphClassification;
    else if (task == "node") ck.task = Task::NodeClassification;
    else throw DataError("checkpoint: unknown task '" + task + "'");
    ck.num_classes = j.at("num_classes").get<int>();
    ck.input_dim = j.at("input_dim").get<int>();
    ck.epoch = j.at("epoch").get<int>();
    ck.best_val_accuracy = j.at("best_val_accuracy").get<double>();
    ck.model.has_scorer = j.at("has_scorer").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  ck.model.encoder_cfg = ck.config.encoder;
  ck.model.encoder_cfg.input_dim = ck.input_dim;
  ck.model.encoder_cfg.validate();
  ck.model.task = ck.task;
  ck.model.num_classes = ck.num_classes;

  const nlohmann::json& tensors = j.at("tensors");
  auto take = [&](const std::string& name) -> Tensor {
    if (!tensors.contains(name)) throw DataError("checkpoint: missing tensor '" + name + "'");
    return tensor_from_json(tensors.at(name), name);
  };

  const auto dims = ck.model.encoder_cfg.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::string name = "encoder.w" + std::to_string(l);
    Tensor w = take(name);
    if (w.rank() != 2 || w.shape[0] != dims[l] || w.shape[1] != dims[l + 1])
      throw DataError("checkpoint: tensor '" + name + "' has shape " + w.shape_str() +
                      ", layer expects " + std::to_string(dims[l]) + "x" + std::to_string(dims[l + 1]));
    ck.model.encoder.weights.emplace_back(name, std::move(w));
  }

  Tensor protos = take("prototypes");
  const std::size_t np = static_cast<std::size_t>(ck.num_classes * ck.config.per_class);
  if (protos.rank() != 2 || protos.shape[0] != np ||
      protos.shape[1] != static_cast<std::size_t>(ck.model.encoder_cfg.embed_dim))
    throw DataError("checkpoint: prototype tensor has shape " + protos.shape_str());
  ck.model.prototypes.prototypes = Parameter("prototypes", std::move(protos));
  ck.model.prototypes.per_class = ck.config.per_class;
  ck.model.prototypes.eps_sim = ck.config.eps_sim;
  ck.model.prototypes.class_of.resize(np);
  for (std::size_t jdx = 0; jdx < np; ++jdx)
    ck.model.prototypes.class_of[jdx] = static_cast<int>(jdx) / ck.config.per_class;

  ck.model.final_weights = take("final_weights");
  if (ck.model.final_weights.rows() != static_cast<std::size_t>(ck.num_classes) ||
      ck.model.final_weights.cols() != np)
    throw DataError("checkpoint: final layer has shape " + ck.model.final_weights.shape_str());

  if (ck.model.has_scorer) {
    ck.model.scorer.embed_dim = ck.model.encoder_cfg.embed_dim;
    ck.model.scorer.w1 = Parameter("sampler.w1", take("sampler.w1"));
    ck.model.scorer.b1 = Parameter("sampler.b1", take("sampler.b1"));
    ck.model.scorer.w2 = Parameter("sampler.w2", take("sampler.w2"));
    ck.model.scorer.b2 = Parameter("sampler.b2", take("sampler.b2"));
    ck.model.scorer.w3 = Parameter("sampler.w3", take("sampler.w3"));
    ck.model.scorer.b3 = Parameter("sampler.b3", take("sampler.b3"));
  }

  if (j.contains("provenance")) {
    for (const auto& e : j.at("provenance")) {
      ProjectionRecord r;
      try {
        r.prototype_index = e.at("prototype_index").get<int>();
        r.cls = e.at("class").get<int>();
        r.source_graph_index = e.at("source_graph_index").get<int>();
        r.node_set = e.at("node_set").get<std::vector<int>>();
        r.score = e.at("score").get<double>();
        r.epoch = e.at("epoch").get<int>();
      } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("checkpoint: provenance entry: ") + ex.what());
      }
      ck.provenance.push_back(std::move(r));
    }
  }

  ck.model.validate();
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot write '" + path + "'");
  const std::string s = checkpoint_to_string(ck);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  f.put('\n');
  if (!f) throw DataError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return checkpoint_from_string(text);
}

}  // namespace protgnn
