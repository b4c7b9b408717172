#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdslab/sampling.hpp"

namespace rdslab {

/// One respondent of a real RDS study, after validation. `recruiter` and
/// the tree bookkeeping refer to row positions in the dataset.
struct DatasetRow {
  std::string id;
  std::optional<std::uint32_t> recruiter;
  std::uint32_t degree = 1;
  bool outcome = false;
  bool e1 = false;
  bool e2 = false;
  std::uint32_t wave = 0;
  std::uint32_t tree = 0;  // position of the root in seeds()
};

struct IngestOptions {
  // Rows with an empty or NA analysis value are dropped and reported; when
  // false they are an error.
  bool drop_incomplete_rows = true;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t promoted_roots = 0;  // recruits whose recruiter row was dropped
  std::vector<std::string> diagnostics;
};

/// Validated respondent table with its recruitment forest.
class RdsDataset {
 public:
  RdsDataset() = default;

  /// Builds the forest from rows whose `recruiter` fields are already
  /// resolved. Throws Error("dataset") on cycles, dangling recruiters or
  /// degrees below one.
  static RdsDataset from_rows(std::vector<DatasetRow> rows, IngestReport report = {});

  std::size_t size() const { return rows_.size(); }
  const std::vector<DatasetRow>& rows() const { return rows_; }
  const DatasetRow& row(std::uint32_t i) const { return rows_[i]; }

  /// Root rows in file order.
  const std::vector<std::uint32_t>& seeds() const { return seeds_; }

  /// Rows of the tree rooted at seeds()[tree], ordered by wave and then
  /// by file position.
  std::span<const std::uint32_t> tree_order(std::size_t tree) const;

  std::vector<std::string> labels() const;
  const IngestReport& report() const { return report_; }

 private:
  std::vector<DatasetRow> rows_;
  std::vector<std::uint32_t> seeds_;
  std::vector<std::uint32_t> order_;         // all rows, tree by tree
  std::vector<std::uint32_t> tree_offsets_;  // into order_
  IngestReport report_;
};

/// CSV schema (exact header): `id,recruiter_id,degree,outcome,e1,e2`.
RdsDataset ingest_rds_dataset(std::istream& in, const IngestOptions& options = {});
RdsDataset ingest_rds_dataset(const std::filesystem::path& path, const IngestOptions& options = {});

void write_dataset_csv(const RdsDataset& ds, std::ostream& out);

/// Replays recruitment: seeds are drawn uniformly without replacement and
/// each drawn seed's tree is followed in wave-then-file order until n rows
/// are collected; the last tree is truncated.
RdsSample resample_trees(const RdsDataset& ds, std::uint32_t n, std::uint64_t seed);

/// Simple random sample of dataset rows (the benchmark arm on real data).
RdsSample dataset_srs(const RdsDataset& ds, std::uint32_t n, std::uint64_t seed);

struct DatasetSummary {
  std::size_t n = 0;
  double outcome_prevalence = 0.0;
  double e1_prevalence = 0.0;
  double e2_prevalence = 0.0;
  double degree_mean = 0.0;
  double degree_median = 0.0;
  std::uint32_t degree_min = 0;
  std::uint32_t degree_max = 0;
  std::size_t trees = 0;
};

DatasetSummary summarize_dataset(const RdsDataset& ds);

/// Targets for a synthetic respondent table shaped like a large real RDS
/// study (defaults: 2548 rows, 29.98% outcome, E1 76.4%, E2 60.9%, degree
/// median 10 within 2-100, population ORs 1.83 / 1.26 / 1.31).
struct FixtureSpec {
  std::uint32_t n = 2548;
  std::uint32_t seeds = 48;
  double outcome_prevalence = 0.2998;
  double e1_prevalence = 0.764;
  double e2_prevalence = 0.609;
  double or_e1 = 1.83;
  double or_e2 = 1.26;
  double or_int = 1.31;
  double degree_median = 10.0;
  double degree_log_sd = 1.0;
  std::uint32_t degree_min = 2;
  std::uint32_t degree_max = 100;
};

RdsDataset make_synthetic_dataset(const FixtureSpec& spec, std::uint64_t seed);

}  // namespace rdslab
