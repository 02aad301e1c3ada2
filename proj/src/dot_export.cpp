#include "protgnn/dot_export.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "protgnn/errors.hpp"

namespace protgnn {

std::string to_dot(const Graph& g, const std::string& name,
                   const std::vector<std::pair<int, int>>& highlight_edges,
                   const std::vector<int>& highlight_nodes) {
  std::set<std::pair<int, int>> hot_edges;
  for (auto [u, v] : highlight_edges) hot_edges.insert({std::min(u, v), std::max(u, v)});
  std::set<int> hot_nodes(highlight_nodes.begin(), highlight_nodes.end());

  std::ostringstream out;
  out << "graph " << (name.empty() ? "g" : name) << " {\n";
  out << "  node [shape=circle fontsize=10];\n";
  for (int u = 0; u < g.num_nodes; ++u) {
    out << "  n" << u << " [label=\"" << u;
    if (!g.node_labels.empty()) out << ":" << g.node_labels[static_cast<std::size_t>(u)];
    out << "\"";
    if (hot_nodes.count(u)) out << " style=filled fillcolor=gold";
    out << "];\n";
  }
  for (const auto& [u, v] : g.edges) {
    out << "  n" << u << " -- n" << v;
    if (hot_edges.count({u, v})) out << " [color=red penwidth=2.5]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

void write_dot(const Graph& g, const std::string& name, const std::string& path,
               const std::vector<std::pair<int, int>>& highlight_edges,
               const std::vector<int>& highlight_nodes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("dot export: cannot write '" + path + "'");
  const std::string s = to_dot(g, name, highlight_edges, highlight_nodes);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw DataError("dot export: write to '" + path + "' failed");
}

}  // namespace protgnn
