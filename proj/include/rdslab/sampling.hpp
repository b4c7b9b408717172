#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdslab/population.hpp"

namespace rdslab {

enum class SamplingMethod { SRS, RDS, TreeResample };

std::string_view to_string(SamplingMethod m);
SamplingMethod parse_sampling_method(std::string_view name);

struct SampleUnit {
  NodeId node_id = 0;
  std::uint32_t reported_degree = 1;
  std::optional<NodeId> recruiter;  // empty for seeds
  std::uint32_t wave = 0;
  bool outcome = false;
  bool e1 = false;
  bool e2 = false;

  bool is_seed() const { return !recruiter.has_value(); }
};

/// One coupon draw during simulated recruitment: the participant, the
/// number of coupons drawn and how many unrecruited neighbours were left.
struct CouponDraw {
  NodeId node = 0;
  std::uint8_t coupons = 0;
  std::uint32_t available = 0;
};

struct RdsSample {
  std::vector<SampleUnit> units;
  SamplingMethod method = SamplingMethod::SRS;
  std::uint32_t target_n = 0;
  std::uint32_t seeds_used = 0;
  std::uint64_t rng_seed = 0;
  std::vector<CouponDraw> coupon_log;  // RDS only

  std::size_t size() const { return units.size(); }
};

/// Probabilities of handing out 1, 2 or 3 coupons.
inline constexpr std::array<double, 3> kCouponProbabilities = {0.40, 0.40, 0.20};
inline constexpr std::uint32_t kRdsSeeds = 3;

/// n distinct nodes drawn uniformly without replacement.
RdsSample srs_sample(const PopulationGraph& g, std::uint32_t n, std::uint64_t seed);

/// Chain-referral recruitment: three uniform seeds, first-come-first-served
/// queue, 1-3 coupons per participant, uniform recruitment among
/// unrecruited neighbours. Dead chains are restarted with a fresh uniform
/// seed; the final participant's recruits are truncated to hit n exactly.
RdsSample rds_sample(const PopulationGraph& g, std::uint32_t n, std::uint64_t seed);

/// Sample export: `id,recruiter_id,degree,outcome,e1,e2,wave,is_seed`.
/// `labels`, when given, maps node ids to the printed id strings.
void write_sample_csv(const RdsSample& s, std::ostream& out,
                      std::span<const std::string> labels = {});

/// Reads a sample export back. Node ids must be non-negative integers.
RdsSample read_sample_csv(std::istream& in);

/// Checks the structural invariants (distinct ids, recruiter precedence,
/// wave = recruiter wave + 1, degree >= 1). Returns an empty string when
/// the sample is valid, otherwise a description of the first violation.
std::string validate_sample(const RdsSample& s);

}  // namespace rdslab
