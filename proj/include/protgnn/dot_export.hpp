#pragma once

#include <string>
#include <utility>
#include <vector>

#include "protgnn/graph.hpp"

namespace protgnn {

// Graphviz rendering of one graph with an optional highlighted edge set
// (undirected, matched in either orientation) and highlighted nodes.
std::string to_dot(const Graph& g, const std::string& name,
                   const std::vector<std::pair<int, int>>& highlight_edges = {},
                   const std::vector<int>& highlight_nodes = {});

void write_dot(const Graph& g, const std::string& name, const std::string& path,
               const std::vector<std::pair<int, int>>& highlight_edges = {},
               const std::vector<int>& highlight_nodes = {});

}  // namespace protgnn
