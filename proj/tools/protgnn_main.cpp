#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "protgnn/checkpoint.hpp"
#include "protgnn/config.hpp"
#include "protgnn/dataset_io.hpp"
#include "protgnn/errors.hpp"
#include "protgnn/graph.hpp"
#include "protgnn/theorem.hpp"
#include "protgnn/trainer.hpp"

namespace {

using protgnn::Checkpoint;
using protgnn::Dataset;
using protgnn::TrainConfig;

int cmd_gen(const std::string& kind, const std::string& out, std::uint64_t seed, int graphs,
            int min_nodes, int max_nodes, int base_nodes, int motifs) {
  Dataset ds;
  if (kind == "ba-shapes") {
    ds.name = "ba-shapes";
    ds.task = protgnn::Task::NodeClassification;
    ds.num_classes = 4;
    ds.graphs.push_back(protgnn::generate_ba_shapes(base_nodes, motifs, seed));
  } else if (kind == "motif") {
    protgnn::MotifDatasetParams params;
    params.min_nodes = min_nodes;
    params.max_nodes = max_nodes;
    ds = protgnn::generate_motif_dataset(graphs, seed, params);
  } else {
    throw protgnn::ConfigError("gen: unknown kind '" + kind + "' (expected ba-shapes or motif)");
  }
  protgnn::split_dataset(ds, seed);
  protgnn::save_dataset(ds, out);
  std::cout << "wrote " << out << " (" << ds.num_instances() << " instances, " << ds.num_classes
            << " classes)\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& config, const std::string& out,
              bool plus, const std::string& metrics_path) {
  Dataset ds = protgnn::load_dataset(data);
  TrainConfig cfg = protgnn::load_train_config(config);
  if (plus) cfg.protgnn_plus = true;
  protgnn::TrainOutcome o = protgnn::train(ds, cfg);
  protgnn::save_checkpoint(o.checkpoint, out);
  if (!metrics_path.empty()) {
    std::ofstream f(metrics_path, std::ios::binary);
    if (!f) throw protgnn::DataError("train: cannot write '" + metrics_path + "'");
    f << protgnn::metrics_to_json(o.metrics).dump(2) << "\n";
  }
  std::cout << "epochs run: " << o.metrics.stopped_epoch << "\n"
            << "best epoch: " << o.metrics.best_epoch << " (val accuracy "
            << o.metrics.best_val_accuracy << ")\n"
            << "test accuracy: " << o.metrics.test_accuracy << "\n"
            << "checkpoint: " << out << "\n";
  if (o.metrics.diverged) {
    std::cerr << "error: loss became non-finite; saved the last good parameters\n";
    return 4;
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split) {
  Checkpoint ck = protgnn::load_checkpoint(ckpt);
  Dataset ds = protgnn::load_dataset(data);
  protgnn::EvalResult r = protgnn::evaluate_split(ck, ds, split);
  nlohmann::json j;
  j["split"] = split;
  j["mode"] = r.conditioned ? "conditioned" : "plain";
  j["accuracy"] = r.accuracy;
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t a = 0; a < r.confusion.rows(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < r.confusion.cols(); ++b)
      row.push_back(static_cast<long>(r.confusion.at(a, b)));
    confusion.push_back(std::move(row));
  }
  j["confusion"] = std::move(confusion);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_explain(const std::string& ckpt, const std::string& data, int graph,
                const std::string& out_dir) {
  Checkpoint ck = protgnn::load_checkpoint(ckpt);
  Dataset ds = protgnn::load_dataset(data);
  protgnn::explain_instance(ck, ds, graph, out_dir);
  std::cout << "wrote explanation bundle to " << out_dir << "\n";
  return 0;
}

int cmd_check_theorem(const std::string& ckpt, const std::string& data, double delta,
                      const std::string& split) {
  Checkpoint ck = protgnn::load_checkpoint(ckpt);
  Dataset ds = protgnn::load_dataset(data);
  const std::vector<protgnn::Instance> instances = protgnn::build_instances(ds, ck.model.encoder_cfg);
  const std::vector<int> idxs = protgnn::split_indices(ds, split);
  const std::vector<double> deltas =
      delta > 0.0 ? std::vector<double>{delta} : protgnn::default_delta_grid();
  protgnn::TheoremScan scan = protgnn::scan_theorem(ck.model, instances, idxs, deltas);
  nlohmann::json j;
  j["split"] = split;
  j["deltas"] = scan.deltas;
  j["instances"] = scan.instances;
  j["checks"] = scan.checks;
  j["premises_all_hold"] = scan.premises_all_hold;
  j["applicable"] = scan.applicable;
  j["bound_violations"] = scan.bound_violations;
  j["prediction_flips"] = scan.prediction_flips;
  std::cout << j.dump(2) << "\n";
  if (scan.bound_violations > 0 || scan.prediction_flips > 0) {
    std::cerr << "error: robustness guarantee violated on this data\n";
    return 4;
  }
  return 0;
}

int cmd_export(const std::string& ckpt, const std::string& data, const std::string& out) {
  Checkpoint ck = protgnn::load_checkpoint(ckpt);
  Dataset ds = protgnn::load_dataset(data);
  protgnn::export_embeddings(ck, ds, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_study(const std::string& kind, const std::string& config, const std::string& out_dir,
              const std::string& data, int graphs) {
  TrainConfig cfg = protgnn::load_train_config(config);
  Dataset ds;
  if (!data.empty()) {
    ds = protgnn::load_dataset(data);
  } else {
    protgnn::MotifDatasetParams params;
    ds = protgnn::generate_motif_dataset(graphs, cfg.seed, params);
    protgnn::split_dataset(ds, cfg.seed);
  }
  std::filesystem::create_directories(out_dir);
  if (data.empty()) protgnn::save_dataset(ds, out_dir + "/dataset.json");
  nlohmann::json report = protgnn::run_hparam_study(kind, ds, cfg);
  const std::string path = out_dir + "/" + kind + ".json";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw protgnn::DataError("study: cannot write '" + path + "'");
  f << report.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prototype-based graph classifier: training, evaluation, explanation"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  int gen_graphs = 500, gen_min_nodes = 12, gen_max_nodes = 20, gen_base = 300, gen_motifs = 80;
  gen->add_option("--kind", gen_kind, "ba-shapes or motif")->required();
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--graphs", gen_graphs, "motif: number of graphs");
  gen->add_option("--min-nodes", gen_min_nodes, "motif: smallest graph");
  gen->add_option("--max-nodes", gen_max_nodes, "motif: largest graph");
  gen->add_option("--base", gen_base, "ba-shapes: base graph size");
  gen->add_option("--motifs", gen_motifs, "ba-shapes: number of house motifs");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_data, tr_config, tr_out, tr_metrics;
  bool tr_plus = false;
  tr->add_option("--data", tr_data, "dataset path")->required();
  tr->add_option("--config", tr_config, "key=value config path")->required();
  tr->add_option("--out", tr_out, "checkpoint output path")->required();
  tr->add_option("--metrics", tr_metrics, "optional metrics JSON output path");
  tr->add_flag("--protgnn-plus", tr_plus, "train the conditional edge scorer as well");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string ev_ckpt, ev_data, ev_split = "test";
  ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "dataset path")->required();
  ev->add_option("--split", ev_split, "train, val or test");

  // explain
  auto* ex = app.add_subcommand("explain", "export an explanation bundle for one instance");
  std::string ex_ckpt, ex_data, ex_out;
  int ex_graph = 0;
  ex->add_option("--ckpt", ex_ckpt, "checkpoint path")->required();
  ex->add_option("--data", ex_data, "dataset path")->required();
  ex->add_option("--graph", ex_graph, "instance index")->required();
  ex->add_option("--out", ex_out, "output directory")->required();

  // check-theorem
  auto* th = app.add_subcommand("check-theorem", "check the robustness guarantee on a split");
  std::string th_ckpt, th_data, th_split = "test";
  double th_delta = 0.0;
  th->add_option("--ckpt", th_ckpt, "checkpoint path")->required();
  th->add_option("--data", th_data, "dataset path")->required();
  th->add_option("--delta", th_delta, "single delta in (0,1); omit to scan the default grid");
  th->add_option("--split", th_split, "train, val or test");

  // export-embeddings
  auto* em = app.add_subcommand("export-embeddings", "write instance and prototype embeddings as CSV");
  std::string em_ckpt, em_data, em_out;
  em->add_option("--ckpt", em_ckpt, "checkpoint path")->required();
  em->add_option("--data", em_data, "dataset path")->required();
  em->add_option("--out", em_out, "CSV output path")->required();

  // study
  auto* st = app.add_subcommand("study", "hyper-parameter study");
  std::string st_kind, st_config, st_out, st_data;
  int st_graphs = 120;
  st->add_option("--kind", st_kind, "m-sweep, div-ablation or cluster-sep")->required();
  st->add_option("--config", st_config, "base config path")->required();
  st->add_option("--out", st_out, "output directory")->required();
  st->add_option("--data", st_data, "dataset path (default: a generated motif set)");
  st->add_option("--graphs", st_graphs, "generated motif set size when --data is absent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_kind, gen_out, gen_seed, gen_graphs, gen_min_nodes, gen_max_nodes, gen_base,
                     gen_motifs);
    if (tr->parsed()) return cmd_train(tr_data, tr_config, tr_out, tr_plus, tr_metrics);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_split);
    if (ex->parsed()) return cmd_explain(ex_ckpt, ex_data, ex_graph, ex_out);
    if (th->parsed()) return cmd_check_theorem(th_ckpt, th_data, th_delta, th_split);
    if (em->parsed()) return cmd_export(em_ckpt, em_data, em_out);
    if (st->parsed()) return cmd_study(st_kind, st_config, st_out, st_data, st_graphs);
  } catch (const protgnn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const protgnn::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const protgnn::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
