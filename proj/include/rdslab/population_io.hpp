#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rdslab/population.hpp"

namespace rdslab {

/// "u v" per line, 0-based, each undirected edge once, ascending u then v.
void write_edge_list(const PopulationGraph& g, std::ostream& out);

/// CSV with header `id,degree,e1,e2,infected,subpop`.
void write_node_csv(const PopulationGraph& g, std::ostream& out);

/// Rebuilds a graph from an edge list and a node CSV. The node file fixes
/// n, the attributes and the subpopulation labels; its degree column must
/// agree with the edge list.
PopulationGraph read_population(std::istream& edges, std::istream& nodes);

// Directory layout used by the CLI: <dir>/edges.txt and <dir>/nodes.csv.
void save_population(const PopulationGraph& g, const std::filesystem::path& dir);
PopulationGraph load_population(const std::filesystem::path& dir);

/// Writes `content` to `path` through a temporary file and a rename, so a
/// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace rdslab
