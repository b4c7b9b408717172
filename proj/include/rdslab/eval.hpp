#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rdslab/dataset.hpp"
#include "rdslab/glm.hpp"
#include "rdslab/population.hpp"

namespace rdslab {

enum class TruthSource { SimulatedPopulation, RealDataset };

/// Population odds ratios from the unweighted fit to every unit, plus the
/// E1 reference value used by the coverage rule (the nominal 2 for
/// simulations, the fitted OR for real data).
struct TruthParams {
  double or_e1 = 1.0;
  double or_e2 = 1.0;
  double or_int = 1.0;
  TruthSource source = TruthSource::SimulatedPopulation;
  double e1_reference = 2.0;
  FitResult fit;
};

inline constexpr double kNominalE1OddsRatio = 2.0;

TruthParams fit_population_truth(const PopulationGraph& g);
TruthParams fit_population_truth(const RdsDataset& ds);

struct CoverageOutcome {
  bool excluded = false;
  bool e1_correct = false;  // interval holds the reference and excludes 1
  bool e2_type1 = false;    // interval excludes 1
  bool int_type1 = false;
  bool combined_correct = false;
};

/// Applies the coverage rules to one fit; unusable fits are marked excluded.
CoverageOutcome classify(const FitResult& fit, double e1_reference);

inline CoverageOutcome classify(const FitResult& fit, const TruthParams& truth) {
  return classify(fit, truth.e1_reference);
}

/// Count-based accumulator; merging partial tallies in any order gives
/// the same totals.
struct CoverageTally {
  std::uint64_t used = 0;
  std::uint64_t excluded = 0;
  std::uint64_t e1_correct = 0;
  std::uint64_t e2_type1 = 0;
  std::uint64_t int_type1 = 0;
  std::uint64_t combined = 0;

  void add(const CoverageOutcome& o);
  CoverageTally& merge(const CoverageTally& other);
  friend bool operator==(const CoverageTally&, const CoverageTally&) = default;
};

struct CellKey {
  std::string model;
  std::string infection;
  std::uint32_t n = 0;
  std::string estimator;  // sampling arm + estimator, e.g. "rds_weighted"

  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct SummaryRow {
  CellKey key;
  std::uint64_t reps_used = 0;
  std::uint64_t excluded = 0;
  double coverage_e1 = 0.0;
  double type1_e2 = 0.0;
  double type1_int = 0.0;
  double combined = 0.0;
  bool empty = false;  // every replication was excluded
};

SummaryRow summarize_tally(const CellKey& key, const CoverageTally& tally);

/// Rates over the non-excluded outcomes. Throws Error("empty_input") for an
/// empty list; a list with only excluded outcomes yields an empty row.
SummaryRow aggregate(std::span<const CoverageOutcome> outcomes, const CellKey& key);

/// `model,infection,n,estimator,reps_used,excluded,coverage_e1,typeI_e2,typeI_int,combined`
std::string summary_csv_header();
std::string summary_csv_row(const SummaryRow& row);

}  // namespace rdslab
