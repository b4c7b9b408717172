#include "rdslab/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

#include "rdslab/csv.hpp"
#include "rdslab/error.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

RdsDataset RdsDataset::from_rows(std::vector<DatasetRow> rows, IngestReport report) {
  const auto n = static_cast<std::uint32_t>(rows.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    if (rows[i].degree < 1) {
      throw Error("dataset", fmt::format("row '{}' has degree {} < 1", rows[i].id, rows[i].degree));
    }
    if (rows[i].recruiter && *rows[i].recruiter >= n) {
      throw Error("dataset", fmt::format("row '{}' has an unresolved recruiter", rows[i].id));
    }
  }

  // Waves by walking up to the root; a revisit of an in-progress row is a cycle.
  enum : std::uint8_t { kUnseen, kActive, kDone };
  std::vector<std::uint8_t> state(n, kUnseen);
  std::vector<std::uint32_t> path;
  for (std::uint32_t start = 0; start < n; ++start) {
    if (state[start] == kDone) continue;
    path.clear();
    std::uint32_t u = start;
    while (true) {
      if (state[u] == kDone) break;
      if (state[u] == kActive) {
        throw Error("dataset", fmt::format("recruitment cycle through row '{}'", rows[u].id));
      }
      state[u] = kActive;
      path.push_back(u);
      if (!rows[u].recruiter) break;
      u = *rows[u].recruiter;
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      DatasetRow& r = rows[*it];
      r.wave = r.recruiter ? rows[*r.recruiter].wave + 1 : 0;
      state[*it] = kDone;
    }
  }

  RdsDataset ds;
  std::vector<std::vector<std::uint32_t>> children(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (rows[i].recruiter) {
      children[*rows[i].recruiter].push_back(i);
    } else {
      ds.seeds_.push_back(i);
    }
  }

  ds.tree_offsets_.push_back(0);
  std::vector<std::uint32_t> members;
  for (std::uint32_t t = 0; t < ds.seeds_.size(); ++t) {
    members.assign(1, ds.seeds_[t]);
    for (std::size_t k = 0; k < members.size(); ++k) {
      rows[members[k]].tree = t;
      for (std::uint32_t c : children[members[k]]) members.push_back(c);
    }
    std::sort(members.begin(), members.end(), [&](std::uint32_t a, std::uint32_t b) {
      return rows[a].wave != rows[b].wave ? rows[a].wave < rows[b].wave : a < b;
    });
    ds.order_.insert(ds.order_.end(), members.begin(), members.end());
    ds.tree_offsets_.push_back(static_cast<std::uint32_t>(ds.order_.size()));
  }

  ds.rows_ = std::move(rows);
  ds.report_ = std::move(report);
  return ds;
}

std::span<const std::uint32_t> RdsDataset::tree_order(std::size_t tree) const {
  return std::span<const std::uint32_t>(order_).subspan(
      tree_offsets_[tree], tree_offsets_[tree + 1] - tree_offsets_[tree]);
}

std::vector<std::string> RdsDataset::labels() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.id);
  return out;
}

namespace {

bool is_missing(std::string_view field) {
  return field.empty() || field == "NA" || field == "na" || field == "." || field == "NaN";
}

struct RawRow {
  std::string id;
  std::string recruiter;
  std::size_t line = 0;
  bool complete = true;
  DatasetRow parsed;
};

}  // namespace

RdsDataset ingest_rds_dataset(std::istream& in, const IngestOptions& options) {
  std::string line;
  if (!csv::next_line(in, line)) throw Error("schema", "dataset file is empty");
  if (line != "id,recruiter_id,degree,outcome,e1,e2") {
    throw Error("schema", fmt::format("expected header 'id,recruiter_id,degree,outcome,e1,e2', got '{}'", line));
  }
  const csv::Header h(csv::split(line));
  const std::size_t c_id = h.index("id"), c_rec = h.index("recruiter_id"),
                    c_deg = h.index("degree"), c_out = h.index("outcome"), c_e1 = h.index("e1"),
                    c_e2 = h.index("e2");

  IngestReport report;
  std::vector<RawRow> raw;
  std::unordered_map<std::string, std::size_t> raw_index;
  std::size_t lineno = 1;
  while (csv::next_line(in, line)) {
    ++lineno;
    const auto f = csv::split(line);
    if (f.size() != h.names().size()) {
      throw Error("parse", fmt::format("dataset line {}: expected {} fields, got {}", lineno,
                                       h.names().size(), f.size()));
    }
    RawRow r;
    r.line = lineno;
    r.id = f[c_id];
    r.recruiter = f[c_rec];
    if (r.id.empty()) throw Error("dataset", fmt::format("dataset line {}: empty id", lineno));
    if (!raw_index.emplace(r.id, raw.size()).second) {
      throw Error("dataset", fmt::format("dataset line {}: duplicate id '{}'", lineno, r.id));
    }

    for (std::size_t c : {c_deg, c_out, c_e1, c_e2}) {
      if (is_missing(f[c])) {
        r.complete = false;
        report.diagnostics.push_back(
            fmt::format("line {}: id '{}' missing {}", lineno, r.id, h.names()[c]));
      }
    }
    if (r.complete) {
      const auto degree = csv::parse_int(f[c_deg], fmt::format("line {} degree", lineno));
      if (degree < 1) {
        throw Error("dataset", fmt::format("dataset line {}: degree {} < 1", lineno, degree));
      }
      r.parsed.id = r.id;
      r.parsed.degree = static_cast<std::uint32_t>(degree);
      r.parsed.outcome = csv::parse_bool01(f[c_out], fmt::format("line {} outcome", lineno));
      r.parsed.e1 = csv::parse_bool01(f[c_e1], fmt::format("line {} e1", lineno));
      r.parsed.e2 = csv::parse_bool01(f[c_e2], fmt::format("line {} e2", lineno));
    } else if (!options.drop_incomplete_rows) {
      throw Error("dataset", report.diagnostics.back());
    }
    raw.push_back(std::move(r));
  }
  report.rows_read = raw.size();

  std::vector<std::int64_t> accepted_index(raw.size(), -1);
  std::vector<DatasetRow> rows;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].complete) {
      ++report.rows_rejected;
      continue;
    }
    accepted_index[i] = static_cast<std::int64_t>(rows.size());
    rows.push_back(raw[i].parsed);
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (accepted_index[i] < 0 || raw[i].recruiter.empty()) continue;
    auto it = raw_index.find(raw[i].recruiter);
    if (it == raw_index.end()) {
      throw Error("dataset", fmt::format("dataset line {}: recruiter '{}' not found", raw[i].line,
                                         raw[i].recruiter));
    }
    const std::int64_t parent = accepted_index[it->second];
    if (parent < 0) {
      ++report.promoted_roots;
      report.diagnostics.push_back(fmt::format(
          "line {}: id '{}' becomes a root (recruiter '{}' was dropped)", raw[i].line, raw[i].id,
          raw[i].recruiter));
      continue;
    }
    rows[static_cast<std::size_t>(accepted_index[i])].recruiter = static_cast<std::uint32_t>(parent);
  }
  return RdsDataset::from_rows(std::move(rows), std::move(report));
}

RdsDataset ingest_rds_dataset(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("io", fmt::format("cannot open dataset {}", path.string()));
  return ingest_rds_dataset(in, options);
}

void write_dataset_csv(const RdsDataset& ds, std::ostream& out) {
  out << "id,recruiter_id,degree,outcome,e1,e2\n";
  for (const auto& r : ds.rows()) {
    out << r.id << ',' << (r.recruiter ? ds.row(*r.recruiter).id : std::string()) << ','
        << r.degree << ',' << int(r.outcome) << ',' << int(r.e1) << ',' << int(r.e2) << '\n';
  }
}

namespace {

SampleUnit unit_for_row(const RdsDataset& ds, std::uint32_t i, bool keep_links) {
  const DatasetRow& r = ds.row(i);
  SampleUnit u;
  u.node_id = i;
  u.reported_degree = r.degree;
  if (keep_links) {
    u.recruiter = r.recruiter;
    u.wave = r.wave;
  }
  u.outcome = r.outcome;
  u.e1 = r.e1;
  u.e2 = r.e2;
  return u;
}

}  // namespace

RdsSample resample_trees(const RdsDataset& ds, std::uint32_t n, std::uint64_t seed) {
  if (n > ds.size()) {
    throw invalid_argument(fmt::format("sample size {} exceeds dataset size {}", n, ds.size()));
  }
  Rng rng = make_rng(seed);
  std::vector<std::size_t> trees(ds.seeds().size());
  std::iota(trees.begin(), trees.end(), 0);

  RdsSample s;
  s.method = SamplingMethod::TreeResample;
  s.target_n = n;
  s.rng_seed = seed;
  s.units.reserve(n);
  // Seeds one at a time without replacement (lazy Fisher-Yates).
  for (std::size_t k = 0; k < trees.size() && s.units.size() < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, trees.size() - 1);
    std::swap(trees[k], trees[pick(rng)]);
    ++s.seeds_used;
    for (std::uint32_t row : ds.tree_order(trees[k])) {
      if (s.units.size() == n) break;
      s.units.push_back(unit_for_row(ds, row, true));
    }
  }
  return s;
}

RdsSample dataset_srs(const RdsDataset& ds, std::uint32_t n, std::uint64_t seed) {
  if (n > ds.size()) {
    throw invalid_argument(fmt::format("sample size {} exceeds dataset size {}", n, ds.size()));
  }
  Rng rng = make_rng(seed);
  std::vector<std::uint32_t> ids(ds.size());
  std::iota(ids.begin(), ids.end(), 0);
  RdsSample s;
  s.method = SamplingMethod::SRS;
  s.target_n = n;
  s.rng_seed = seed;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
    s.units.push_back(unit_for_row(ds, ids[i], false));
  }
  return s;
}

DatasetSummary summarize_dataset(const RdsDataset& ds) {
  DatasetSummary s;
  s.n = ds.size();
  s.trees = ds.seeds().size();
  if (s.n == 0) return s;
  std::vector<std::uint32_t> degrees;
  degrees.reserve(s.n);
  for (const auto& r : ds.rows()) {
    s.outcome_prevalence += r.outcome;
    s.e1_prevalence += r.e1;
    s.e2_prevalence += r.e2;
    s.degree_mean += r.degree;
    degrees.push_back(r.degree);
  }
  const double n = static_cast<double>(s.n);
  s.outcome_prevalence /= n;
  s.e1_prevalence /= n;
  s.e2_prevalence /= n;
  s.degree_mean /= n;
  std::sort(degrees.begin(), degrees.end());
  s.degree_min = degrees.front();
  s.degree_max = degrees.back();
  s.degree_median = s.n % 2 ? degrees[s.n / 2] : 0.5 * (degrees[s.n / 2 - 1] + degrees[s.n / 2]);
  return s;
}

namespace {

// Rounds `values` to integers summing to `total` (largest remainder).
std::vector<std::uint32_t> apportion(const std::vector<double>& values, std::uint32_t total) {
  std::vector<std::uint32_t> out(values.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint32_t assigned = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::uint32_t>(std::floor(values[i]));
    assigned += out[i];
    remainders.emplace_back(values[i] - out[i], i);
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++out[remainders[k].second];
  }
  return out;
}

}  // namespace

RdsDataset make_synthetic_dataset(const FixtureSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.seeds == 0 || spec.seeds > spec.n) {
    throw invalid_argument("fixture needs 0 < seeds <= n");
  }
  Rng rng = make_rng(seed);
  const std::uint32_t n = spec.n;
  std::vector<DatasetRow> rows(n);

  // Recruitment forest, generated breadth-first across all seeds.
  std::discrete_distribution<int> recruits({0.25, 0.30, 0.30, 0.15});
  std::uint32_t next = 0;
  for (; next < spec.seeds; ++next) rows[next].recruiter.reset();
  std::uint32_t cursor = 0;
  while (next < n) {
    if (cursor == next) {  // every chain died; start another seed
      rows[next++].recruiter.reset();
      continue;
    }
    const int k = recruits(rng);
    for (int c = 0; c < k && next < n; ++c) rows[next++].recruiter = cursor;
    ++cursor;
  }

  auto flags_with_count = [&](double prevalence) {
    const auto positives = static_cast<std::uint32_t>(std::lround(prevalence * n));
    std::vector<std::uint8_t> flags(n, 0);
    std::fill(flags.begin(), flags.begin() + positives, 1);
    std::shuffle(flags.begin(), flags.end(), rng);
    return flags;
  };
  const auto e1 = flags_with_count(spec.e1_prevalence);
  const auto e2 = flags_with_count(spec.e2_prevalence);

  // Outcome: exact positives per (e1, e2) cell from a logistic model whose
  // intercept is solved so the overall prevalence hits the target.
  std::array<std::vector<std::uint32_t>, 4> cells;
  for (std::uint32_t i = 0; i < n; ++i) cells[2 * e1[i] + e2[i]].push_back(i);
  const double b1 = std::log(spec.or_e1), b2 = std::log(spec.or_e2), b3 = std::log(spec.or_int);
  auto cell_prob = [&](double b0, int cell) {
    const int x1 = cell / 2, x2 = cell % 2;
    const double eta = b0 + b1 * x1 + b2 * x2 + b3 * x1 * x2;
    return 1.0 / (1.0 + std::exp(-eta));
  };
  const auto target = static_cast<std::uint32_t>(std::lround(spec.outcome_prevalence * n));
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double expected = 0.0;
    for (int c = 0; c < 4; ++c) expected += cells[c].size() * cell_prob(mid, c);
    (expected < target ? lo : hi) = mid;
  }
  std::vector<double> expected(4);
  for (int c = 0; c < 4; ++c) expected[c] = cells[c].size() * cell_prob(0.5 * (lo + hi), c);
  const auto positives = apportion(expected, target);
  for (int c = 0; c < 4; ++c) {
    std::shuffle(cells[c].begin(), cells[c].end(), rng);
    for (std::uint32_t k = 0; k < positives[c]; ++k) rows[cells[c][k]].outcome = true;
  }

  std::lognormal_distribution<double> degree_dist(std::log(spec.degree_median), spec.degree_log_sd);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double d = std::round(degree_dist(rng));
    rows[i].degree = static_cast<std::uint32_t>(
        std::clamp(d, double(spec.degree_min), double(spec.degree_max)));
    rows[i].id = std::to_string(100000 + i);
    rows[i].e1 = e1[i];
    rows[i].e2 = e2[i];
  }
  // Pin the published range.
  rows[0].degree = spec.degree_min;
  rows[n - 1].degree = spec.degree_max;

  IngestReport report;
  report.rows_read = n;
  return RdsDataset::from_rows(std::move(rows), std::move(report));
}

}  // namespace rdslab
