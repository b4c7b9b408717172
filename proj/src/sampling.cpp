#include "rdslab/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

#include "rdslab/csv.hpp"
#include "rdslab/error.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

std::string_view to_string(SamplingMethod m) {
  switch (m) {
    case SamplingMethod::SRS: return "srs";
    case SamplingMethod::RDS: return "rds";
    case SamplingMethod::TreeResample: return "tree";
  }
  return "unknown";
}

SamplingMethod parse_sampling_method(std::string_view name) {
  if (name == "srs") return SamplingMethod::SRS;
  if (name == "rds") return SamplingMethod::RDS;
  if (name == "tree") return SamplingMethod::TreeResample;
  throw invalid_argument(fmt::format("unknown sampling method '{}'", name));
}

namespace {

SampleUnit unit_for(const PopulationGraph& g, NodeId u, std::optional<NodeId> recruiter,
                    std::uint32_t wave) {
  SampleUnit s;
  s.node_id = u;
  s.reported_degree = g.degree(u);
  s.recruiter = recruiter;
  s.wave = wave;
  s.outcome = g.infected(u);
  s.e1 = g.e1(u);
  s.e2 = g.e2(u);
  return s;
}

}  // namespace

RdsSample srs_sample(const PopulationGraph& g, std::uint32_t n, std::uint64_t seed) {
  const std::uint32_t population = g.size();
  if (n > population) {
    throw invalid_argument(fmt::format("sample size {} exceeds population {}", n, population));
  }
  Rng rng = make_rng(seed);
  std::vector<NodeId> ids(population);
  std::iota(ids.begin(), ids.end(), 0);

  RdsSample s;
  s.method = SamplingMethod::SRS;
  s.target_n = n;
  s.rng_seed = seed;
  s.units.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, population - 1);
    std::swap(ids[i], ids[pick(rng)]);
    s.units.push_back(unit_for(g, ids[i], std::nullopt, 0));
  }
  return s;
}

RdsSample rds_sample(const PopulationGraph& g, std::uint32_t n, std::uint64_t seed) {
  const std::uint32_t population = g.size();
  if (n < kRdsSeeds) throw invalid_argument(fmt::format("RDS needs n >= {}, got {}", kRdsSeeds, n));
  if (n > population) {
    throw invalid_argument(fmt::format("sample size {} exceeds population {}", n, population));
  }

  Rng rng = make_rng(seed);
  std::uniform_int_distribution<NodeId> any_node(0, population - 1);
  std::discrete_distribution<int> coupon_dist(kCouponProbabilities.begin(),
                                              kCouponProbabilities.end());
  std::vector<std::uint8_t> in_sample(population, 0);

  RdsSample s;
  s.method = SamplingMethod::RDS;
  s.target_n = n;
  s.rng_seed = seed;
  s.units.reserve(n);

  auto add_seed = [&] {
    NodeId u;
    do {
      u = any_node(rng);
    } while (in_sample[u]);
    in_sample[u] = 1;
    s.units.push_back(unit_for(g, u, std::nullopt, 0));
    ++s.seeds_used;
  };

  for (std::uint32_t i = 0; i < kRdsSeeds; ++i) add_seed();

  // The recruitment queue is the sample itself, processed in arrival order.
  std::size_t cursor = 0;
  std::vector<NodeId> available;
  while (s.units.size() < n) {
    if (cursor == s.units.size()) {
      add_seed();
      continue;
    }
    const SampleUnit recruiter = s.units[cursor++];
    const int coupons = coupon_dist(rng) + 1;

    available.clear();
    for (NodeId v : g.neighbors(recruiter.node_id)) {
      if (!in_sample[v]) available.push_back(v);
    }
    s.coupon_log.push_back({recruiter.node_id, static_cast<std::uint8_t>(coupons),
                            static_cast<std::uint32_t>(available.size())});

    const std::size_t k = std::min<std::size_t>(coupons, available.size());
    for (std::size_t i = 0; i < k && s.units.size() < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, available.size() - 1);
      std::swap(available[i], available[pick(rng)]);
      const NodeId v = available[i];
      in_sample[v] = 1;
      s.units.push_back(unit_for(g, v, recruiter.node_id, recruiter.wave + 1));
    }
  }
  return s;
}

void write_sample_csv(const RdsSample& s, std::ostream& out, std::span<const std::string> labels) {
  auto label = [&](NodeId id) -> std::string {
    return labels.empty() ? std::to_string(id) : labels[id];
  };
  out << "id,recruiter_id,degree,outcome,e1,e2,wave,is_seed\n";
  for (const SampleUnit& u : s.units) {
    out << label(u.node_id) << ',' << (u.recruiter ? label(*u.recruiter) : std::string()) << ','
        << u.reported_degree << ',' << int(u.outcome) << ',' << int(u.e1) << ',' << int(u.e2)
        << ',' << u.wave << ',' << int(u.is_seed()) << '\n';
  }
}

RdsSample read_sample_csv(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw Error("schema", "sample file is empty");
  const csv::Header h(csv::split(line));
  const std::size_t c_id = h.index("id"), c_rec = h.index("recruiter_id"),
                    c_deg = h.index("degree"), c_out = h.index("outcome"), c_e1 = h.index("e1"),
                    c_e2 = h.index("e2");
  const bool has_wave = h.has("wave");
  const std::size_t c_wave = has_wave ? h.index("wave") : 0;

  RdsSample s;
  bool any_recruiter = false;
  std::size_t row = 1;
  while (csv::next_line(in, line)) {
    ++row;
    const auto f = csv::split(line);
    if (f.size() != h.names().size()) {
      throw Error("parse", fmt::format("sample line {}: expected {} fields", row, h.names().size()));
    }
    SampleUnit u;
    const auto id = csv::parse_int(f[c_id], "id");
    if (id < 0) throw Error("parse", fmt::format("sample line {}: negative id", row));
    u.node_id = static_cast<NodeId>(id);
    if (!f[c_rec].empty()) {
      u.recruiter = static_cast<NodeId>(csv::parse_int(f[c_rec], "recruiter_id"));
      any_recruiter = true;
    }
    const auto degree = csv::parse_int(f[c_deg], "degree");
    if (degree < 1) throw Error("dataset", fmt::format("sample line {}: degree {} < 1", row, degree));
    u.reported_degree = static_cast<std::uint32_t>(degree);
    u.outcome = csv::parse_bool01(f[c_out], "outcome");
    u.e1 = csv::parse_bool01(f[c_e1], "e1");
    u.e2 = csv::parse_bool01(f[c_e2], "e2");
    if (has_wave) u.wave = static_cast<std::uint32_t>(csv::parse_int(f[c_wave], "wave"));
    if (u.is_seed()) ++s.seeds_used;
    s.units.push_back(u);
  }
  s.method = any_recruiter ? SamplingMethod::RDS : SamplingMethod::SRS;
  s.target_n = static_cast<std::uint32_t>(s.units.size());
  return s;
}

std::string validate_sample(const RdsSample& s) {
  std::unordered_map<NodeId, std::uint32_t> wave_of;
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const SampleUnit& u = s.units[i];
    if (u.reported_degree < 1) return fmt::format("unit {} has degree < 1", i);
    if (u.recruiter) {
      auto it = wave_of.find(*u.recruiter);
      if (it == wave_of.end()) {
        return fmt::format("unit {} (node {}) recruited by {} which is not earlier in the sample",
                           i, u.node_id, *u.recruiter);
      }
      if (u.wave != it->second + 1) {
        return fmt::format("unit {} has wave {} but its recruiter has wave {}", i, u.wave,
                           it->second);
      }
    } else if (u.wave != 0) {
      return fmt::format("seed unit {} has wave {}", i, u.wave);
    }
    if (!wave_of.emplace(u.node_id, u.wave).second) {
      return fmt::format("node {} appears twice", u.node_id);
    }
  }
  return {};
}

}  // namespace rdslab
