#include "rdslab/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "rdslab/rng.hpp"

namespace rdslab {

std::string_view to_string(InfectionProcess p) {
  return p == InfectionProcess::Random ? "random" : "si";
}

std::string_view to_string(E1Effect e) {
  switch (e) {
    case E1Effect::OddsDouble: return "odds";
    case E1Effect::RiskDouble: return "risk";
    case E1Effect::None: return "none";
  }
  return "unknown";
}

InfectionProcess parse_infection_process(std::string_view name) {
  if (name == "random") return InfectionProcess::Random;
  if (name == "si") return InfectionProcess::SI;
  throw invalid_argument(fmt::format("unknown infection process '{}'", name));
}

E1Effect parse_e1_effect(std::string_view name) {
  if (name == "odds" || name == "odds_double") return E1Effect::OddsDouble;
  if (name == "risk" || name == "risk_double") return E1Effect::RiskDouble;
  if (name == "none") return E1Effect::None;
  throw invalid_argument(fmt::format("unknown E1 effect '{}'", name));
}

GroupRates solve_group_rates(double prevalence, double e1_fraction, E1Effect effect) {
  const double pi = prevalence;
  const double f = e1_fraction;
  switch (effect) {
    case E1Effect::None:
      return {pi, pi};
    case E1Effect::RiskDouble: {
      const double p0 = pi / (1.0 + f);
      if (2.0 * p0 > 1.0) {
        throw invalid_argument(
            fmt::format("risk doubling impossible at prevalence {} (p1 would exceed 1)", pi));
      }
      return {p0, 2.0 * p0};
    }
    case E1Effect::OddsDouble: {
      // p1 = 2 p0 / (1 + p0) and f p1 + (1 - f) p0 = pi give
      // (1 - f) p0^2 + (1 + f - pi) p0 - pi = 0; rationalized root.
      const double b = 1.0 + f - pi;
      const double p0 = 2.0 * pi / (b + std::sqrt(b * b + 4.0 * (1.0 - f) * pi));
      return {p0, 2.0 * p0 / (1.0 + p0)};
    }
  }
  return {pi, pi};
}

double e1_contact_prob(double base, E1Effect effect) {
  switch (effect) {
    case E1Effect::OddsDouble: return 2.0 * base / (1.0 + base);
    case E1Effect::RiskDouble: return std::min(1.0, 2.0 * base);
    case E1Effect::None: return base;
  }
  return base;
}

std::uint32_t target_infected(std::uint32_t n, double prevalence) {
  return static_cast<std::uint32_t>(std::floor(n * prevalence + 1e-9));
}

InfectionRun infect_random(const PopulationGraph& g, const InfectionConfig& cfg) {
  if (cfg.process != InfectionProcess::Random) throw invalid_argument("config is not a random infection");
  if (!(cfg.target_prevalence >= 0.0 && cfg.target_prevalence <= 1.0)) {
    throw invalid_argument(fmt::format("prevalence {} outside [0, 1]", cfg.target_prevalence));
  }
  if (g.infected_count() != 0) throw Error("already_infected", "population already has infected nodes");

  const std::uint32_t n = g.size();
  const std::uint32_t target = target_infected(n, cfg.target_prevalence);
  Rng rng = make_rng(cfg.seed);
  std::vector<std::uint8_t> infected(n, 0);

  std::vector<NodeId> positives, negatives;
  for (NodeId u = 0; u < n; ++u) (g.e1(u) ? positives : negatives).push_back(u);

  auto infect_subset = [&](const std::vector<NodeId>& pool, std::uint32_t count) {
    std::vector<NodeId> chosen;
    std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), count, rng);
    for (NodeId u : chosen) infected[u] = 1;
  };

  if (cfg.e1_effect == E1Effect::None || positives.empty() || negatives.empty()) {
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 0);
    infect_subset(all, target);
  } else {
    // Exact allocation of the target count between the two E1 groups at
    // their calibrated rates, uniform within each group.
    const auto n1 = static_cast<double>(positives.size());
    const auto n0 = static_cast<std::uint32_t>(negatives.size());
    const GroupRates rates = solve_group_rates(cfg.target_prevalence, n1 / n, cfg.e1_effect);
    auto k1 = static_cast<std::int64_t>(std::llround(n1 * rates.p1));
    k1 = std::clamp<std::int64_t>(k1, std::max<std::int64_t>(0, std::int64_t(target) - n0),
                                  std::min<std::int64_t>(std::int64_t(positives.size()), target));
    infect_subset(positives, static_cast<std::uint32_t>(k1));
    infect_subset(negatives, target - static_cast<std::uint32_t>(k1));
  }

  InfectionRun run;
  run.population = g.with_infection(std::move(infected));
  run.infected = target;
  run.prevalence = n ? static_cast<double>(target) / n : 0.0;
  run.seed = cfg.seed;
  return run;
}

InfectionRun infect_si(const PopulationGraph& g, const InfectionConfig& cfg) {
  if (cfg.process != InfectionProcess::SI) throw invalid_argument("config is not an SI infection");
  if (!(cfg.target_prevalence > 0.0 && cfg.target_prevalence < 1.0)) {
    throw invalid_argument(fmt::format("prevalence {} outside (0, 1)", cfg.target_prevalence));
  }
  if (!(cfg.base_contact_prob >= 0.0 && cfg.base_contact_prob < 1.0)) {
    throw invalid_argument(fmt::format("contact probability {} outside [0, 1)", cfg.base_contact_prob));
  }
  const std::uint32_t n = g.size();
  const std::uint32_t target = target_infected(n, cfg.target_prevalence);
  if (cfg.initial_infected < 1 || cfg.initial_infected >= target) {
    throw invalid_argument(fmt::format("initial_infected={} must be in [1, {})",
                                       cfg.initial_infected, target));
  }
  if (g.infected_count() != 0) throw Error("already_infected", "population already has infected nodes");

  Rng rng = make_rng(cfg.seed);
  std::vector<std::uint8_t> infected(n, 0);
  std::vector<std::uint32_t> exposure(n, 0);  // infected neighbours
  auto mark = [&](NodeId u) {
    infected[u] = 1;
    for (NodeId v : g.neighbors(u)) ++exposure[v];
  };

  {
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<NodeId> index_cases;
    std::sample(all.begin(), all.end(), std::back_inserter(index_cases), cfg.initial_infected, rng);
    for (NodeId u : index_cases) mark(u);
  }

  const double q0 = cfg.base_contact_prob;
  const double q1 = e1_contact_prob(q0, cfg.e1_effect);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uint32_t count = cfg.initial_infected;
  std::uint32_t waves = 0;
  std::vector<NodeId> fresh, kept;

  while (count < target) {
    if (waves >= kMaxInfectionWaves) {
      throw InfectionStalled(
          fmt::format("SI process hit the wave limit ({}) at prevalence {:.4f}", waves,
                      double(count) / n),
          double(count) / n, waves);
    }
    // Synchronous wave: every trial uses the infected set from the previous wave.
    fresh.clear();
    bool reachable = false;
    for (NodeId v = 0; v < n; ++v) {
      if (infected[v] || exposure[v] == 0) continue;
      const double q = g.e1(v) ? q1 : q0;
      if (q <= 0.0) continue;
      reachable = true;
      const double p = 1.0 - std::pow(1.0 - q, exposure[v]);
      if (unif(rng) < p) fresh.push_back(v);
    }
    if (!reachable) {
      throw InfectionStalled(
          fmt::format("SI process stalled after {} waves at prevalence {:.4f}: no susceptible "
                      "node can be reached",
                      waves, double(count) / n),
          double(count) / n, waves);
    }
    ++waves;
    if (count + fresh.size() > target) {
      kept.clear();
      std::sample(fresh.begin(), fresh.end(), std::back_inserter(kept), target - count, rng);
      fresh.swap(kept);
    }
    for (NodeId v : fresh) mark(v);
    count += static_cast<std::uint32_t>(fresh.size());
  }

  InfectionRun run;
  run.population = g.with_infection(std::move(infected));
  run.waves = waves;
  run.infected = count;
  run.prevalence = static_cast<double>(count) / n;
  run.seed = cfg.seed;
  return run;
}

InfectionRun infect(const PopulationGraph& g, const InfectionConfig& cfg) {
  return cfg.process == InfectionProcess::Random ? infect_random(g, cfg) : infect_si(g, cfg);
}

std::string infection_metadata_json(const InfectionRun& run, const InfectionConfig& cfg) {
  nlohmann::ordered_json j;
  j["process"] = std::string(to_string(cfg.process));
  j["initial_infected"] = cfg.process == InfectionProcess::SI ? cfg.initial_infected : 0;
  j["target_prevalence"] = cfg.target_prevalence;
  j["base_contact_prob"] = cfg.base_contact_prob;
  j["e1_effect"] = std::string(to_string(cfg.e1_effect));
  j["seed"] = run.seed;
  j["n"] = run.population.size();
  j["waves"] = run.waves;
  j["infected"] = run.infected;
  j["prevalence"] = run.prevalence;
  return j.dump(2) + "\n";
}

}  // namespace rdslab
