#include "protgnn/dataset_io.hpp"

#include <fstream>

#include "json.hpp"
#include "protgnn/errors.hpp"

namespace protgnn {

using nlohmann::json;

namespace {

json tensor_rows(const Tensor& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  json j;
  j["name"] = ds.name;
  j["task"] = ds.task == Task::GraphClassification ? "graph" : "node";
  j["num_classes"] = ds.num_classes;
  json graphs = json::array();
  for (const Graph& g : ds.graphs) {
    json jg;
    jg["num_nodes"] = g.num_nodes;
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back(json::array({u, v}));
    jg["edges"] = std::move(edges);
    jg["x"] = tensor_rows(g.node_features);
    if (g.label) jg["y"] = *g.label;
    if (!g.node_labels.empty()) jg["node_labels"] = g.node_labels;
    graphs.push_back(std::move(jg));
  }
  j["graphs"] = std::move(graphs);
  if (!ds.splits.empty()) {
    j["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  }
  std::ofstream out(path);
  if (!out) throw DataError("save_dataset: cannot open '" + path + "' for writing");
  out << j.dump() << "\n";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("load_dataset: '" + path + "' is not valid JSON: " + e.what());
  }

  Dataset ds;
  try {
    ds.name = require(j, "name", "dataset").get<std::string>();
    const std::string task = require(j, "task", "dataset").get<std::string>();
    if (task == "graph")
      ds.task = Task::GraphClassification;
    else if (task == "node")
      ds.task = Task::NodeClassification;
    else
      throw DataError("dataset.task: expected \"graph\" or \"node\", got \"" + task + "\"");
    ds.num_classes = require(j, "num_classes", "dataset").get<int>();

    const json& graphs = require(j, "graphs", "dataset");
    if (!graphs.is_array()) throw DataError("dataset.graphs: expected an array");
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const std::string where = "dataset.graphs[" + std::to_string(gi) + "]";
      const json& jg = graphs[gi];
      Graph g;
      g.num_nodes = require(jg, "num_nodes", where).get<int>();
      const json& edges = require(jg, "edges", where);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const json& e = edges[k];
        if (!e.is_array() || e.size() != 2)
          throw DataError(where + ".edges[" + std::to_string(k) + "]: expected [u,v]");
        g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
      const json& x = require(jg, "x", where);
      if (!x.is_array() || x.size() != static_cast<std::size_t>(g.num_nodes))
        throw DataError(where + ".x: expected one feature row per node");
      const std::size_t dim = x.empty() ? 0 : x[0].size();
      g.node_features = Tensor::matrix(static_cast<std::size_t>(g.num_nodes), dim);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i].is_array() || x[i].size() != dim)
          throw DataError(where + ".x[" + std::to_string(i) + "]: inconsistent feature width");
        for (std::size_t d = 0; d < dim; ++d) g.node_features.at(i, d) = x[i][d].get<double>();
      }
      if (jg.contains("y")) g.label = jg["y"].get<int>();
      if (jg.contains("node_labels")) g.node_labels = jg["node_labels"].get<std::vector<int>>();
      try {
        g.validate();
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
      ds.graphs.push_back(std::move(g));
    }

    if (j.contains("splits")) {
      const json& s = j["splits"];
      ds.splits.train = require(s, "train", "dataset.splits").get<std::vector<int>>();
      ds.splits.val = require(s, "val", "dataset.splits").get<std::vector<int>>();
      ds.splits.test = require(s, "test", "dataset.splits").get<std::vector<int>>();
    }
  } catch (const json::exception& e) {
    throw DataError("load_dataset: '" + path + "': malformed value: " + e.what());
  }

  ds.validate();
  return ds;
}

}  // namespace protgnn
