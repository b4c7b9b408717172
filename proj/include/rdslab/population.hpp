#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rdslab {

using NodeId = std::uint32_t;

enum class NetModel { ER1, ER2, BA1, BA2 };

std::string_view to_string(NetModel model);
NetModel parse_net_model(std::string_view name);

inline bool is_clustered(NetModel model) {
  return model == NetModel::ER2 || model == NetModel::BA2;
}

/// Parameters of one synthetic population. When `er_p` (ER models) or
/// `ba_m` (BA models) is set it drives generation; otherwise the value is
/// derived from `target_mean_degree`.
struct NetModelConfig {
  NetModel model = NetModel::ER1;
  std::uint32_t n = 10000;
  double target_mean_degree = 20.0;
  std::optional<double> er_p;
  std::optional<double> ba_m;
  std::uint32_t n_subpops = 5;
  std::uint32_t bridges_per_subpop = 10;
  std::uint64_t seed = 1;

  friend bool operator==(const NetModelConfig&, const NetModelConfig&) = default;
};

struct Edge {
  NodeId u;
  NodeId v;
};

/// Undirected simple graph in compressed adjacency form plus per-node
/// attributes. The topology is shared between copies; attribute updates
/// return a new graph and never touch the original.
class PopulationGraph {
 public:
  PopulationGraph() = default;

  /// Builds the graph from an edge list. Duplicate edges are merged;
  /// self-loops and out-of-range endpoints are rejected.
  static PopulationGraph from_edges(std::uint32_t n, std::span<const Edge> edges,
                                    std::vector<std::uint32_t> subpop,
                                    NetModelConfig provenance);

  std::uint32_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept;

  std::span<const NodeId> neighbors(NodeId u) const;
  std::uint32_t degree(NodeId u) const;
  std::uint32_t subpop(NodeId u) const;

  bool e1(NodeId u) const { return e1_[u] != 0; }
  bool e2(NodeId u) const { return e2_[u] != 0; }
  bool infected(NodeId u) const { return infected_[u] != 0; }

  std::span<const std::uint8_t> e1_flags() const { return e1_; }
  std::span<const std::uint8_t> e2_flags() const { return e2_; }
  std::span<const std::uint8_t> infected_flags() const { return infected_; }

  bool attributes_assigned() const noexcept { return attributes_assigned_; }
  std::size_t infected_count() const;
  const NetModelConfig& provenance() const noexcept { return provenance_; }

  PopulationGraph with_attributes(std::vector<std::uint8_t> e1,
                                  std::vector<std::uint8_t> e2) const;
  PopulationGraph with_infection(std::vector<std::uint8_t> infected) const;

  /// Each undirected edge once, u < v, ascending by (u, v).
  std::vector<Edge> edges() const;

  friend bool operator==(const PopulationGraph& a, const PopulationGraph& b);

 private:
  struct Topology {
    std::vector<std::uint32_t> offsets;
    std::vector<NodeId> neighbors;
    std::vector<std::uint32_t> subpop;
  };

  std::uint32_t n_ = 0;
  std::shared_ptr<const Topology> topo_;
  std::vector<std::uint8_t> e1_;
  std::vector<std::uint8_t> e2_;
  std::vector<std::uint8_t> infected_;
  bool attributes_assigned_ = false;
  NetModelConfig provenance_;
};

/// Number of connected components (isolated nodes count as components).
std::uint32_t count_components(const PopulationGraph& g);

struct DegreeSummary {
  double mean = 0.0;
  double median = 0.0;
  std::uint32_t min = 0;
  std::uint32_t max = 0;
};

DegreeSummary degree_summary(const PopulationGraph& g);

}  // namespace rdslab
