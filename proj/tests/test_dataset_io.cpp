#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "protgnn/dataset_io.hpp"
#include "protgnn/errors.hpp"

using namespace protgnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("protgnn_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

void write_text(const std::string& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("graph dataset round trips exactly") {
  TempDir tmp;
  Dataset ds = generate_motif_dataset(12, 42);
  split_dataset(ds, 1);
  const std::string p = tmp.file("motif.json");
  save_dataset(ds, p);
  const Dataset back = load_dataset(p);

  CHECK(back.name == ds.name);
  CHECK(back.task == ds.task);
  CHECK(back.num_classes == ds.num_classes);
  REQUIRE(back.graphs.size() == ds.graphs.size());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    CHECK(back.graphs[i].num_nodes == ds.graphs[i].num_nodes);
    CHECK(back.graphs[i].edges == ds.graphs[i].edges);
    CHECK(back.graphs[i].node_features.shape == ds.graphs[i].node_features.shape);
    CHECK(back.graphs[i].node_features.v == ds.graphs[i].node_features.v);
    CHECK(back.graphs[i].label == ds.graphs[i].label);
  }
  CHECK(back.splits.train == ds.splits.train);
  CHECK(back.splits.val == ds.splits.val);
  CHECK(back.splits.test == ds.splits.test);
}

TEST_CASE("node dataset round trips with node labels") {
  TempDir tmp;
  Dataset ds;
  ds.name = "shapes";
  ds.task = Task::NodeClassification;
  ds.num_classes = 4;
  ds.graphs.push_back(generate_ba_shapes(30, 2, 3));
  split_dataset(ds, 5);
  const std::string p = tmp.file("shapes.json");
  save_dataset(ds, p);
  const Dataset back = load_dataset(p);
  CHECK(back.task == Task::NodeClassification);
  CHECK(back.num_instances() == 40);
  CHECK(back.graphs[0].node_labels == ds.graphs[0].node_labels);
  CHECK(back.graphs[0].edges == ds.graphs[0].edges);
}

TEST_CASE("missing file and invalid json give actionable errors") {
  TempDir tmp;
  CHECK_THROWS_AS(load_dataset(tmp.file("absent.json")), DataError);

  const std::string bad = tmp.file("bad.json");
  write_text(bad, "{not json");
  CHECK_THROWS_AS(load_dataset(bad), DataError);
}

TEST_CASE("missing fields name the offending path") {
  TempDir tmp;
  const std::string p = tmp.file("broken.json");

  write_text(p, R"({"task":"graph","num_classes":2,"graphs":[]})");
  CHECK_THROWS_WITH_AS(load_dataset(p), "dataset: missing field 'name'", DataError);

  write_text(p, R"({"name":"x","task":"maze","num_classes":2,"graphs":[]})");
  CHECK_THROWS_AS(load_dataset(p), DataError);

  write_text(p, R"({"name":"x","task":"graph","num_classes":2,
                    "graphs":[{"edges":[],"x":[],"y":0}]})");
  CHECK_THROWS_AS(load_dataset(p), DataError);
}

TEST_CASE("structurally invalid content is rejected on load") {
  TempDir tmp;
  const std::string p = tmp.file("invalid.json");
  // edge endpoint out of range
  write_text(p, R"({"name":"x","task":"graph","num_classes":2,
    "graphs":[{"num_nodes":2,"edges":[[0,5]],"x":[[1],[1]],"y":0}]})");
  CHECK_THROWS_AS(load_dataset(p), DataError);
  // label outside num_classes
  write_text(p, R"({"name":"x","task":"graph","num_classes":2,
    "graphs":[{"num_nodes":1,"edges":[],"x":[[1]],"y":7}]})");
  CHECK_THROWS_AS(load_dataset(p), DataError);
}

TEST_CASE("save refuses an invalid dataset and an unwritable path") {
  TempDir tmp;
  Dataset ds;
  ds.name = "x";
  ds.num_classes = 0;  // invalid
  CHECK_THROWS_AS(save_dataset(ds, tmp.file("out.json")), DataError);

  Dataset ok = generate_motif_dataset(4, 0);
  CHECK_THROWS_AS(save_dataset(ok, (tmp.path / "no_dir" / "out.json").string()), DataError);
}

}  // TEST_SUITE
