#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rdslab/error.hpp"
#include "rdslab/population.hpp"

namespace rdslab {

enum class InfectionProcess { Random, SI };

/// How E1-positive nodes get "twice the chance" of infection.
///   OddsDouble: the infection odds are doubled (population OR close to 2).
///   RiskDouble: the infection probability is doubled.
///   None:       no E1 effect (null scenario).
enum class E1Effect { OddsDouble, RiskDouble, None };

std::string_view to_string(InfectionProcess p);
std::string_view to_string(E1Effect e);
InfectionProcess parse_infection_process(std::string_view name);
E1Effect parse_e1_effect(std::string_view name);

struct InfectionConfig {
  InfectionProcess process = InfectionProcess::Random;
  std::uint32_t initial_infected = 10;  // SI only
  double target_prevalence = 0.30;
  double base_contact_prob = 0.005;     // SI only, per infected neighbour per wave
  E1Effect e1_effect = E1Effect::OddsDouble;
  std::uint64_t seed = 1;
};

struct InfectionRun {
  PopulationGraph population;
  std::uint32_t waves = 0;  // 0 for the random process
  std::uint32_t infected = 0;
  double prevalence = 0.0;
  std::uint64_t seed = 0;
};

/// Thrown when an SI process can no longer reach its target.
class InfectionStalled : public Error {
 public:
  InfectionStalled(const std::string& message, double achieved_prevalence, std::uint32_t waves)
      : Error("stalled", message), achieved_prevalence_(achieved_prevalence), waves_(waves) {}

  double achieved_prevalence() const noexcept { return achieved_prevalence_; }
  std::uint32_t waves() const noexcept { return waves_; }

 private:
  double achieved_prevalence_;
  std::uint32_t waves_;
};

/// Infection probabilities for E1-negative (p0) and E1-positive (p1) nodes
/// whose mix over a population with E1 fraction `e1_fraction` averages to
/// `prevalence`.
struct GroupRates {
  double p0 = 0.0;
  double p1 = 0.0;
};

GroupRates solve_group_rates(double prevalence, double e1_fraction, E1Effect effect);

/// Per-contact probability for an E1-positive node given the base rate.
double e1_contact_prob(double base, E1Effect effect);

/// Target infected count floor(n * prevalence).
std::uint32_t target_infected(std::uint32_t n, double prevalence);

InfectionRun infect_random(const PopulationGraph& g, const InfectionConfig& cfg);
InfectionRun infect_si(const PopulationGraph& g, const InfectionConfig& cfg);
InfectionRun infect(const PopulationGraph& g, const InfectionConfig& cfg);

/// JSON sidecar describing a finished run (process, waves, prevalence, seed).
std::string infection_metadata_json(const InfectionRun& run, const InfectionConfig& cfg);

inline constexpr std::uint32_t kMaxInfectionWaves = 100000;

}  // namespace rdslab
