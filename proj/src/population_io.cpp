#include "rdslab/population_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "rdslab/csv.hpp"
#include "rdslab/error.hpp"

namespace rdslab {

void write_edge_list(const PopulationGraph& g, std::ostream& out) {
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void write_node_csv(const PopulationGraph& g, std::ostream& out) {
  out << "id,degree,e1,e2,infected,subpop\n";
  for (NodeId u = 0; u < g.size(); ++u) {
    out << u << ',' << g.degree(u) << ',' << int(g.e1(u)) << ',' << int(g.e2(u)) << ','
        << int(g.infected(u)) << ',' << g.subpop(u) << '\n';
  }
}

PopulationGraph read_population(std::istream& edge_in, std::istream& node_in) {
  std::string line;
  if (!csv::next_line(node_in, line)) throw Error("schema", "node file is empty");
  const csv::Header header(csv::split(line));
  const std::size_t c_id = header.index("id");
  const std::size_t c_deg = header.index("degree");
  const std::size_t c_e1 = header.index("e1");
  const std::size_t c_e2 = header.index("e2");
  const std::size_t c_inf = header.index("infected");
  const std::size_t c_sub = header.index("subpop");

  std::vector<std::uint32_t> declared_degree;
  std::vector<std::uint8_t> e1, e2, infected;
  std::vector<std::uint32_t> subpop;
  std::size_t row = 1;
  while (csv::next_line(node_in, line)) {
    ++row;
    const auto f = csv::split(line);
    if (f.size() != header.names().size()) {
      throw Error("parse", fmt::format("node file line {}: expected {} fields", row,
                                       header.names().size()));
    }
    const auto id = csv::parse_int(f[c_id], "id");
    if (id != static_cast<long long>(e1.size())) {
      throw Error("parse", fmt::format("node file line {}: ids must be 0..n-1 in order", row));
    }
    declared_degree.push_back(static_cast<std::uint32_t>(csv::parse_int(f[c_deg], "degree")));
    e1.push_back(csv::parse_bool01(f[c_e1], "e1"));
    e2.push_back(csv::parse_bool01(f[c_e2], "e2"));
    infected.push_back(csv::parse_bool01(f[c_inf], "infected"));
    subpop.push_back(static_cast<std::uint32_t>(csv::parse_int(f[c_sub], "subpop")));
  }
  const auto n = static_cast<std::uint32_t>(e1.size());

  std::vector<Edge> edges;
  std::size_t lineno = 0;
  while (std::getline(edge_in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(ls >> u >> v) || (ls >> extra) || u < 0 || v < 0) {
      throw Error("parse", fmt::format("edge list line {}: expected 'u v'", lineno));
    }
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }

  NetModelConfig provenance;
  provenance.n = n;
  PopulationGraph g = PopulationGraph::from_edges(n, edges, std::move(subpop), provenance);
  for (NodeId u = 0; u < n; ++u) {
    if (g.degree(u) != declared_degree[u]) {
      throw Error("parse", fmt::format("node {}: degree column {} disagrees with edge list ({})",
                                       u, declared_degree[u], g.degree(u)));
    }
  }
  return g.with_attributes(std::move(e1), std::move(e2)).with_infection(std::move(infected));
}

void save_population(const PopulationGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream edges, nodes;
  write_edge_list(g, edges);
  write_node_csv(g, nodes);
  write_file_atomic(dir / "edges.txt", edges.str());
  write_file_atomic(dir / "nodes.csv", nodes.str());
}

PopulationGraph load_population(const std::filesystem::path& dir) {
  std::ifstream edges(dir / "edges.txt");
  std::ifstream nodes(dir / "nodes.csv");
  if (!edges || !nodes) {
    throw Error("io", fmt::format("cannot open {}/edges.txt and nodes.csv", dir.string()));
  }
  return read_population(edges, nodes);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw Error("io", fmt::format("write failed for {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("io", fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(),
                                  ec.message()));
  }
}

}  // namespace rdslab
