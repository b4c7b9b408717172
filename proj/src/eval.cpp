#include "rdslab/eval.hpp"

#include <fmt/format.h>

#include "rdslab/error.hpp"

namespace rdslab {
namespace {

TruthParams truth_from_units(std::span<const SampleUnit> units, TruthSource source) {
  TruthParams t;
  t.source = source;
  t.fit = fit_mle(build_design(units));
  t.or_e1 = t.fit.or_point[0];
  t.or_e2 = t.fit.or_point[1];
  t.or_int = t.fit.or_point[2];
  t.e1_reference = source == TruthSource::SimulatedPopulation ? kNominalE1OddsRatio : t.or_e1;
  return t;
}

bool contains(double lo, double hi, double value) { return lo <= value && value <= hi; }

}  // namespace

TruthParams fit_population_truth(const PopulationGraph& g) {
  std::vector<SampleUnit> units(g.size());
  for (NodeId u = 0; u < g.size(); ++u) {
    units[u].node_id = u;
    units[u].reported_degree = g.degree(u);
    units[u].outcome = g.infected(u);
    units[u].e1 = g.e1(u);
    units[u].e2 = g.e2(u);
  }
  return truth_from_units(units, TruthSource::SimulatedPopulation);
}

TruthParams fit_population_truth(const RdsDataset& ds) {
  std::vector<SampleUnit> units(ds.size());
  for (std::uint32_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.row(i);
    units[i].node_id = i;
    units[i].reported_degree = r.degree;
    units[i].outcome = r.outcome;
    units[i].e1 = r.e1;
    units[i].e2 = r.e2;
  }
  return truth_from_units(units, TruthSource::RealDataset);
}

CoverageOutcome classify(const FitResult& fit, double e1_reference) {
  CoverageOutcome o;
  if (!fit.usable()) {
    o.excluded = true;
    return o;
  }
  o.e1_correct = contains(fit.or_lo[0], fit.or_hi[0], e1_reference) &&
                 !contains(fit.or_lo[0], fit.or_hi[0], 1.0);
  o.e2_type1 = !contains(fit.or_lo[1], fit.or_hi[1], 1.0);
  o.int_type1 = !contains(fit.or_lo[2], fit.or_hi[2], 1.0);
  o.combined_correct = o.e1_correct && !o.e2_type1 && !o.int_type1;
  return o;
}

void CoverageTally::add(const CoverageOutcome& o) {
  if (o.excluded) {
    ++excluded;
    return;
  }
  ++used;
  e1_correct += o.e1_correct;
  e2_type1 += o.e2_type1;
  int_type1 += o.int_type1;
  combined += o.combined_correct;
}

CoverageTally& CoverageTally::merge(const CoverageTally& other) {
  used += other.used;
  excluded += other.excluded;
  e1_correct += other.e1_correct;
  e2_type1 += other.e2_type1;
  int_type1 += other.int_type1;
  combined += other.combined;
  return *this;
}

SummaryRow summarize_tally(const CellKey& key, const CoverageTally& tally) {
  SummaryRow row;
  row.key = key;
  row.reps_used = tally.used;
  row.excluded = tally.excluded;
  row.empty = tally.used == 0;
  if (!row.empty) {
    const double n = static_cast<double>(tally.used);
    row.coverage_e1 = tally.e1_correct / n;
    row.type1_e2 = tally.e2_type1 / n;
    row.type1_int = tally.int_type1 / n;
    row.combined = tally.combined / n;
  }
  return row;
}

SummaryRow aggregate(std::span<const CoverageOutcome> outcomes, const CellKey& key) {
  if (outcomes.empty()) throw Error("empty_input", "no outcomes to aggregate");
  CoverageTally tally;
  for (const auto& o : outcomes) tally.add(o);
  return summarize_tally(key, tally);
}

std::string summary_csv_header() {
  return "model,infection,n,estimator,reps_used,excluded,coverage_e1,typeI_e2,typeI_int,combined";
}

std::string summary_csv_row(const SummaryRow& row) {
  const auto& k = row.key;
  if (row.empty) {
    return fmt::format("{},{},{},{},{},{},NA,NA,NA,NA", k.model, k.infection, k.n, k.estimator,
                       row.reps_used, row.excluded);
  }
  return fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}", k.model, k.infection, k.n,
                     k.estimator, row.reps_used, row.excluded, row.coverage_e1, row.type1_e2,
                     row.type1_int, row.combined);
}

}  // namespace rdslab
