#pragma once

#include <cstdint>

#include "rdslab/population.hpp"

namespace rdslab {

/// Edge probability actually used by an ER model: `er_p` when set, otherwise
/// the value giving `target_mean_degree` within one block (the whole graph
/// for ER1, one subpopulation for ER2).
double effective_er_p(const NetModelConfig& cfg);

/// Links per new node used by a BA model: `ba_m` when set, otherwise half
/// the target mean degree.
double effective_ba_m(const NetModelConfig& cfg);

// Each generator validates its config, retries with seed+1 (up to 50
// attempts) until the graph is connected, and throws Error("disconnected")
// afterwards. Attributes are left unassigned.
PopulationGraph generate_er1(const NetModelConfig& cfg);
PopulationGraph generate_er2(const NetModelConfig& cfg);
PopulationGraph generate_ba1(const NetModelConfig& cfg);
PopulationGraph generate_ba2(const NetModelConfig& cfg);

/// Dispatches on cfg.model.
PopulationGraph generate(const NetModelConfig& cfg);

/// Marks exactly floor(n/2) uniformly chosen nodes E1-positive and,
/// independently, floor(n/2) nodes E2-positive.
PopulationGraph assign_attributes(const PopulationGraph& g, std::uint64_t seed);

/// Nodes that carry at least one edge into another subpopulation.
std::vector<NodeId> cross_subpop_nodes(const PopulationGraph& g);

inline constexpr int kMaxConnectivityAttempts = 50;

}  // namespace rdslab
