#pragma once

#include <string>

#include "protgnn/graph.hpp"

namespace protgnn {

// JSON dataset schema:
// {
//   "name": str, "task": "graph"|"node", "num_classes": int,
//   "graphs": [{"num_nodes": int, "edges": [[u,v],...] with u < v,
//               "x": [[...],...], "y": int | "node_labels": [int,...]}],
//   "splits": {"train": [...], "val": [...], "test": [...]}   (optional)
// }
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace protgnn
