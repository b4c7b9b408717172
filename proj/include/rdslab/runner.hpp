#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdslab/dataset.hpp"
#include "rdslab/epidemic.hpp"
#include "rdslab/eval.hpp"
#include "rdslab/glm.hpp"
#include "rdslab/parallel.hpp"
#include "rdslab/population.hpp"

namespace rdslab {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;

/// A sampling design paired with an estimator; one summary row each.
enum class Arm { SrsUnweighted, RdsUnweighted, RdsWeighted, RdsBayes };

std::string_view to_string(Arm arm);
Arm parse_arm(std::string_view name);
Estimator estimator_of(Arm arm);
bool uses_rds(Arm arm);

inline constexpr std::uint32_t kDeskReplications = 200;
inline constexpr std::uint32_t kFullReplications = 1000;

struct PopulationSpec {
  std::string name;
  NetModelConfig net;
  bool seed_explicit = false;
};

struct InfectionSpec {
  std::string name;
  InfectionConfig cfg;
  bool seed_explicit = false;
};

struct ExperimentConfig {
  std::vector<PopulationSpec> populations;
  std::vector<InfectionSpec> infections;
  std::vector<std::uint32_t> sample_sizes{100, 250, 500};
  std::vector<Arm> arms{Arm::SrsUnweighted, Arm::RdsUnweighted, Arm::RdsWeighted, Arm::RdsBayes};
  std::uint32_t replications = kDeskReplications;
  std::uint64_t master_seed = 20200101;
  int workers = 0;  // 0 = all available threads
  PriorSpec prior;
  FitOptions fit;
};

/// Four populations (ER1, ER2, BA1, BA2 at n = 10000, mean degree 20) by
/// four infections (random, SI from 10, 100 and 500 index cases).
ExperimentConfig default_experiment();

/// Sectioned key-value config; grammar documented in docs/config.md.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws Error("invalid_config") on the first problem found.
void validate(const ExperimentConfig& cfg);

struct ReplicationResult {
  CellKey key;
  SamplingMethod sampling = SamplingMethod::SRS;
  std::uint32_t replication = 0;
  double e1_reference = kNominalE1OddsRatio;
  FitResult fit;
  CoverageOutcome outcome;
  std::string error;  // set when sampling or fitting threw
};

/// Table-1 style description of one (population, infection) pair.
struct PopulationReport {
  std::string model;
  std::string infection;
  std::uint32_t n = 0;
  DegreeSummary degree;
  double prevalence = 0.0;
  double e1_prevalence = 0.0;
  double e2_prevalence = 0.0;
  std::uint32_t waves = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t infection_seed = 0;
  TruthParams truth;
};

struct ExperimentResult {
  std::uint64_t master_seed = 0;
  std::uint32_t replications = 0;
  std::vector<PopulationReport> populations;
  std::vector<ReplicationResult> replications_detail;
  std::vector<SummaryRow> summary;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                Execution mode = Execution::Parallel);

struct RealDataConfig {
  std::string name = "real";
  std::vector<std::uint32_t> sample_sizes{100, 250, 500};
  std::vector<Arm> arms{Arm::SrsUnweighted, Arm::RdsUnweighted, Arm::RdsWeighted, Arm::RdsBayes};
  std::uint32_t replications = kDeskReplications;
  std::uint64_t master_seed = 20200101;
  int workers = 0;
  PriorSpec prior;
  FitOptions fit;
};

/// Truth from the full dataset; SRS benchmark on dataset rows and the RDS
/// arms on tree-resampled subsamples.
ExperimentResult run_realdata(const RdsDataset& ds, const RealDataConfig& cfg,
                              Execution mode = Execution::Parallel);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string replications_csv(const ExperimentResult& result);
std::string populations_csv(const ExperimentResult& result);
std::string manifest_json(const ExperimentResult& result);

/// Writes summary.csv, replications.csv, populations.csv and manifest.json
/// into `dir`, each through a temporary file and rename.
void write_results(const ExperimentResult& result, const std::filesystem::path& dir);

/// Re-derives the summary from a replications.csv by reclassifying each
/// stored interval.
std::vector<SummaryRow> summarize_replications(std::istream& in);

}  // namespace rdslab
