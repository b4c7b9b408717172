#include "rdslab/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "rdslab/error.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {
namespace {

std::uint32_t block_size(const NetModelConfig& cfg) {
  return is_clustered(cfg.model) ? cfg.n / cfg.n_subpops : cfg.n;
}

void check_model(const NetModelConfig& cfg, NetModel expected) {
  if (cfg.model != expected) {
    throw invalid_argument(fmt::format("config is for model {}, generator expects {}",
                                       to_string(cfg.model), to_string(expected)));
  }
  if (cfg.n == 0) throw invalid_argument("population size must be positive");
  if (!cfg.er_p && !cfg.ba_m && !(cfg.target_mean_degree > 0.0)) {
    throw invalid_argument("target mean degree must be positive");
  }
  if (is_clustered(cfg.model)) {
    if (cfg.n_subpops == 0) throw invalid_argument("n_subpops must be positive");
    if (cfg.n % cfg.n_subpops != 0) {
      throw invalid_argument(
          fmt::format("n={} is not divisible by n_subpops={}", cfg.n, cfg.n_subpops));
    }
    if (cfg.bridges_per_subpop < 1 || cfg.bridges_per_subpop > cfg.n / cfg.n_subpops) {
      throw invalid_argument(fmt::format("bridges_per_subpop={} outside [1, {}]",
                                         cfg.bridges_per_subpop, cfg.n / cfg.n_subpops));
    }
  }
}

// G(size, p) on nodes [offset, offset + size) by geometric skipping over the
// lower-triangular pair sequence; O(size + edges).
void er_block(NodeId offset, std::uint32_t size, double p, Rng& rng, std::vector<Edge>& edges) {
  if (size < 2) return;
  if (p >= 1.0) {
    for (std::uint32_t v = 1; v < size; ++v) {
      for (std::uint32_t w = 0; w < v; ++w) edges.push_back({offset + v, offset + w});
    }
    return;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_q = std::log1p(-p);
  std::int64_t v = 1;
  std::int64_t w = -1;
  const auto n = static_cast<std::int64_t>(size);
  while (v < n) {
    const double skip = std::floor(std::log1p(-unif(rng)) / log_q);
    w += 1 + static_cast<std::int64_t>(std::min(skip, 1e15));
    while (w >= v && v < n) {
      w -= v;
      ++v;
    }
    if (v < n) {
      edges.push_back({offset + static_cast<NodeId>(v), offset + static_cast<NodeId>(w)});
    }
  }
}

// Preferential attachment on nodes [offset, offset + size). Starts from a
// clique on ceil(m)+1 nodes; each later node attaches to floor(m) distinct
// targets, plus one more with probability frac(m), drawn from the urn of
// edge endpoints (probability proportional to degree).
void ba_block(NodeId offset, std::uint32_t size, double m, Rng& rng, std::vector<Edge>& edges) {
  const auto m_floor = static_cast<std::uint32_t>(std::floor(m));
  const double frac = m - m_floor;
  const auto clique = static_cast<std::uint32_t>(std::ceil(m)) + 1;

  std::vector<NodeId> urn;
  urn.reserve(2 * static_cast<std::size_t>(std::ceil(m)) * size + clique * clique);
  for (NodeId i = 0; i < clique; ++i) {
    for (NodeId j = 0; j < i; ++j) {
      edges.push_back({offset + i, offset + j});
      urn.push_back(i);
      urn.push_back(j);
    }
  }

  std::bernoulli_distribution extra(frac);
  std::vector<NodeId> chosen;
  for (NodeId t = clique; t < size; ++t) {
    std::uint32_t k = m_floor + ((frac > 0.0 && extra(rng)) ? 1 : 0);
    chosen.clear();
    std::uniform_int_distribution<std::size_t> pick(0, urn.size() - 1);
    while (chosen.size() < k) {
      NodeId c = urn[pick(rng)];
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    for (NodeId c : chosen) {
      edges.push_back({offset + t, offset + c});
      urn.push_back(t);
      urn.push_back(c);
    }
  }
}

void check_ba_m(double m, std::uint32_t size) {
  if (!(m >= 1.0)) throw invalid_argument(fmt::format("BA links per node m={} must be >= 1", m));
  if (m >= size || std::ceil(m) + 1 > size) {
    throw invalid_argument(fmt::format("BA links per node m={} too large for {} nodes", m, size));
  }
}

std::vector<std::uint32_t> block_labels(std::uint32_t n, std::uint32_t blocks) {
  std::vector<std::uint32_t> labels(n);
  const std::uint32_t size = n / blocks;
  for (NodeId u = 0; u < n; ++u) labels[u] = u / size;
  return labels;
}

template <class Build>
PopulationGraph regenerate_until_connected(const NetModelConfig& cfg, Build build) {
  for (int attempt = 0; attempt < kMaxConnectivityAttempts; ++attempt) {
    PopulationGraph g = build(cfg.seed + static_cast<std::uint64_t>(attempt));
    if (count_components(g) == 1) return g;
  }
  throw Error("disconnected",
              fmt::format("{} graph with n={} still disconnected after {} attempts",
                          to_string(cfg.model), cfg.n, kMaxConnectivityAttempts));
}

}  // namespace

double effective_er_p(const NetModelConfig& cfg) {
  if (cfg.er_p) return *cfg.er_p;
  const std::uint32_t size = block_size(cfg);
  if (size < 2) return 1.0;
  return cfg.target_mean_degree / static_cast<double>(size - 1);
}

double effective_ba_m(const NetModelConfig& cfg) {
  return cfg.ba_m ? *cfg.ba_m : cfg.target_mean_degree / 2.0;
}

PopulationGraph generate_er1(const NetModelConfig& cfg) {
  check_model(cfg, NetModel::ER1);
  if (cfg.n < 2) throw invalid_argument("ER1 requires n >= 2");
  const double p = effective_er_p(cfg);
  if (!(p > 0.0 && p <= 1.0)) throw invalid_argument(fmt::format("ER link probability {} outside (0, 1]", p));

  return regenerate_until_connected(cfg, [&](std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(p * cfg.n * (cfg.n - 1) / 2 * 1.05) + 16);
    er_block(0, cfg.n, p, rng, edges);
    return PopulationGraph::from_edges(cfg.n, edges, {}, cfg);
  });
}

PopulationGraph generate_er2(const NetModelConfig& cfg) {
  check_model(cfg, NetModel::ER2);
  const std::uint32_t blocks = cfg.n_subpops;
  const std::uint32_t size = cfg.n / blocks;
  if (size < 2) throw invalid_argument("ER2 requires at least two nodes per subpopulation");
  const double p = effective_er_p(cfg);
  if (!(p > 0.0 && p <= 1.0)) throw invalid_argument(fmt::format("ER link probability {} outside (0, 1]", p));

  return regenerate_until_connected(cfg, [&](std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<Edge> edges;
    for (std::uint32_t b = 0; b < blocks; ++b) er_block(b * size, size, p, rng, edges);

    // Bridge nodes, chosen uniformly within each block.
    std::vector<std::vector<NodeId>> bridges(blocks);
    std::vector<NodeId> local(size);
    std::iota(local.begin(), local.end(), 0);
    for (std::uint32_t b = 0; b < blocks; ++b) {
      std::sample(local.begin(), local.end(), std::back_inserter(bridges[b]),
                  cfg.bridges_per_subpop, rng);
      for (NodeId& u : bridges[b]) u += b * size;
    }

    // Ring wiring: each bridge links to one random bridge in each adjacent block.
    if (blocks > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, cfg.bridges_per_subpop - 1);
      for (std::uint32_t b = 0; b < blocks; ++b) {
        const std::uint32_t prev = (b + blocks - 1) % blocks;
        const std::uint32_t next = (b + 1) % blocks;
        for (NodeId u : bridges[b]) {
          edges.push_back({u, bridges[prev][pick(rng)]});
          if (next != prev) edges.push_back({u, bridges[next][pick(rng)]});
        }
      }
    }
    return PopulationGraph::from_edges(cfg.n, edges, block_labels(cfg.n, blocks), cfg);
  });
}

PopulationGraph generate_ba1(const NetModelConfig& cfg) {
  check_model(cfg, NetModel::BA1);
  const double m = effective_ba_m(cfg);
  check_ba_m(m, cfg.n);

  return regenerate_until_connected(cfg, [&](std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<Edge> edges;
    ba_block(0, cfg.n, m, rng, edges);
    return PopulationGraph::from_edges(cfg.n, edges, {}, cfg);
  });
}

PopulationGraph generate_ba2(const NetModelConfig& cfg) {
  check_model(cfg, NetModel::BA2);
  const std::uint32_t blocks = cfg.n_subpops;
  const std::uint32_t size = cfg.n / blocks;
  const double m = effective_ba_m(cfg);
  check_ba_m(m, size);

  return regenerate_until_connected(cfg, [&](std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<Edge> edges;
    for (std::uint32_t b = 0; b < blocks; ++b) ba_block(b * size, size, m, rng, edges);

    std::vector<std::uint32_t> degree(cfg.n, 0);
    for (const Edge& e : edges) {
      ++degree[e.u];
      ++degree[e.v];
    }

    // Hubs: highest within-block degree, ties to the lower node id.
    std::vector<std::vector<NodeId>> hubs(blocks);
    for (std::uint32_t b = 0; b < blocks; ++b) {
      std::vector<NodeId> ids(size);
      std::iota(ids.begin(), ids.end(), b * size);
      std::partial_sort(ids.begin(), ids.begin() + cfg.bridges_per_subpop, ids.end(),
                        [&](NodeId a, NodeId c) {
                          return degree[a] != degree[c] ? degree[a] > degree[c] : a < c;
                        });
      hubs[b].assign(ids.begin(), ids.begin() + cfg.bridges_per_subpop);
    }

    // Every hub links to one random hub in every other block; this includes
    // the ring neighbours, so the blocks are always joined.
    std::uniform_int_distribution<std::size_t> pick(0, cfg.bridges_per_subpop - 1);
    for (std::uint32_t b = 0; b < blocks; ++b) {
      for (NodeId u : hubs[b]) {
        for (std::uint32_t c = 0; c < blocks; ++c) {
          if (c != b) edges.push_back({u, hubs[c][pick(rng)]});
        }
      }
    }
    return PopulationGraph::from_edges(cfg.n, edges, block_labels(cfg.n, blocks), cfg);
  });
}

PopulationGraph generate(const NetModelConfig& cfg) {
  switch (cfg.model) {
    case NetModel::ER1: return generate_er1(cfg);
    case NetModel::ER2: return generate_er2(cfg);
    case NetModel::BA1: return generate_ba1(cfg);
    case NetModel::BA2: return generate_ba2(cfg);
  }
  throw invalid_argument("unknown network model");
}

PopulationGraph assign_attributes(const PopulationGraph& g, std::uint64_t seed) {
  if (g.attributes_assigned()) throw Error("attributes_assigned", "attributes already assigned");
  const std::uint32_t n = g.size();
  Rng rng = make_rng(seed);
  std::vector<NodeId> ids(n);

  auto half_positive = [&] {
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::uint8_t> flags(n, 0);
    for (std::uint32_t i = 0; i < n / 2; ++i) flags[ids[i]] = 1;
    return flags;
  };
  auto e1 = half_positive();
  auto e2 = half_positive();
  return g.with_attributes(std::move(e1), std::move(e2));
}

std::vector<NodeId> cross_subpop_nodes(const PopulationGraph& g) {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < g.size(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (g.subpop(v) != g.subpop(u)) {
        out.push_back(u);
        break;
      }
    }
  }
  return out;
}

}  // namespace rdslab
