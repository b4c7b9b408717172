#include "rdslab/population.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "rdslab/error.hpp"

namespace rdslab {

std::string_view to_string(NetModel model) {
  switch (model) {
    case NetModel::ER1: return "er1";
    case NetModel::ER2: return "er2";
    case NetModel::BA1: return "ba1";
    case NetModel::BA2: return "ba2";
  }
  return "unknown";
}

NetModel parse_net_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "er1") return NetModel::ER1;
  if (lower == "er2") return NetModel::ER2;
  if (lower == "ba1") return NetModel::BA1;
  if (lower == "ba2") return NetModel::BA2;
  throw invalid_argument(fmt::format("unknown network model '{}'", name));
}

PopulationGraph PopulationGraph::from_edges(std::uint32_t n, std::span<const Edge> edges,
                                            std::vector<std::uint32_t> subpop,
                                            NetModelConfig provenance) {
  if (subpop.empty()) subpop.assign(n, 0);
  if (subpop.size() != n) {
    throw invalid_argument("subpopulation labels do not match node count");
  }

  std::vector<std::uint32_t> counts(n, 0);
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw invalid_argument(fmt::format("edge ({}, {}) out of range for n={}", e.u, e.v, n));
    }
    if (e.u == e.v) throw invalid_argument(fmt::format("self-loop on node {}", e.u));
    ++counts[e.u];
    ++counts[e.v];
  }

  std::vector<std::uint32_t> offsets(n + 1, 0);
  for (std::uint32_t u = 0; u < n; ++u) offsets[u + 1] = offsets[u] + counts[u];
  std::vector<NodeId> adjacency(offsets[n]);
  std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Edge& e : edges) {
    adjacency[cursor[e.u]++] = e.v;
    adjacency[cursor[e.v]++] = e.u;
  }

  // Sort and deduplicate each neighbor list, then compact.
  std::vector<std::uint32_t> compact_offsets(n + 1, 0);
  std::size_t write = 0;
  for (std::uint32_t u = 0; u < n; ++u) {
    auto first = adjacency.begin() + offsets[u];
    auto last = adjacency.begin() + offsets[u + 1];
    std::sort(first, last);
    last = std::unique(first, last);
    for (auto it = first; it != last; ++it) adjacency[write++] = *it;
    compact_offsets[u + 1] = static_cast<std::uint32_t>(write);
  }
  adjacency.resize(write);
  adjacency.shrink_to_fit();

  PopulationGraph g;
  g.n_ = n;
  g.topo_ = std::make_shared<const Topology>(
      Topology{std::move(compact_offsets), std::move(adjacency), std::move(subpop)});
  g.e1_.assign(n, 0);
  g.e2_.assign(n, 0);
  g.infected_.assign(n, 0);
  g.provenance_ = provenance;
  return g;
}

std::size_t PopulationGraph::edge_count() const noexcept {
  return topo_ ? topo_->neighbors.size() / 2 : 0;
}

std::span<const NodeId> PopulationGraph::neighbors(NodeId u) const {
  const auto& t = *topo_;
  return std::span<const NodeId>(t.neighbors).subspan(t.offsets[u],
                                                      t.offsets[u + 1] - t.offsets[u]);
}

std::uint32_t PopulationGraph::degree(NodeId u) const {
  return topo_->offsets[u + 1] - topo_->offsets[u];
}

std::uint32_t PopulationGraph::subpop(NodeId u) const { return topo_->subpop[u]; }

std::size_t PopulationGraph::infected_count() const {
  return static_cast<std::size_t>(std::count(infected_.begin(), infected_.end(), 1));
}

PopulationGraph PopulationGraph::with_attributes(std::vector<std::uint8_t> e1,
                                                 std::vector<std::uint8_t> e2) const {
  if (e1.size() != n_ || e2.size() != n_) {
    throw invalid_argument("attribute vectors do not match node count");
  }
  PopulationGraph g = *this;
  g.e1_ = std::move(e1);
  g.e2_ = std::move(e2);
  g.attributes_assigned_ = true;
  return g;
}

PopulationGraph PopulationGraph::with_infection(std::vector<std::uint8_t> infected) const {
  if (infected.size() != n_) throw invalid_argument("infection vector does not match node count");
  PopulationGraph g = *this;
  g.infected_ = std::move(infected);
  return g;
}

std::vector<Edge> PopulationGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId u = 0; u < n_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

bool operator==(const PopulationGraph& a, const PopulationGraph& b) {
  if (a.n_ != b.n_ || a.attributes_assigned_ != b.attributes_assigned_) return false;
  if (a.e1_ != b.e1_ || a.e2_ != b.e2_ || a.infected_ != b.infected_) return false;
  if (a.topo_ == b.topo_) return true;
  if (!a.topo_ || !b.topo_) return false;
  return a.topo_->offsets == b.topo_->offsets && a.topo_->neighbors == b.topo_->neighbors &&
         a.topo_->subpop == b.topo_->subpop;
}

std::uint32_t count_components(const PopulationGraph& g) {
  const std::uint32_t n = g.size();
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<NodeId> stack;
  std::uint32_t components = 0;
  for (NodeId start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.neighbors(u)) {
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return components;
}

DegreeSummary degree_summary(const PopulationGraph& g) {
  DegreeSummary s;
  const std::uint32_t n = g.size();
  if (n == 0) return s;
  std::vector<std::uint32_t> degrees(n);
  for (NodeId u = 0; u < n; ++u) degrees[u] = g.degree(u);
  std::sort(degrees.begin(), degrees.end());
  s.min = degrees.front();
  s.max = degrees.back();
  s.mean = std::accumulate(degrees.begin(), degrees.end(), 0.0) / n;
  s.median = n % 2 == 1 ? degrees[n / 2] : 0.5 * (degrees[n / 2 - 1] + degrees[n / 2]);
  return s;
}

}  // namespace rdslab
