#include "rdslab/runner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rdslab/csv.hpp"
#include "rdslab/error.hpp"
#include "rdslab/netgen.hpp"
#include "rdslab/population_io.hpp"
#include "rdslab/rng.hpp"
#include "rdslab/sampling.hpp"

namespace rdslab {

std::string_view to_string(Arm arm) {
  switch (arm) {
    case Arm::SrsUnweighted: return "srs_unweighted";
    case Arm::RdsUnweighted: return "rds_unweighted";
    case Arm::RdsWeighted: return "rds_weighted";
    case Arm::RdsBayes: return "rds_bayes";
  }
  return "unknown";
}

Arm parse_arm(std::string_view name) {
  for (Arm a : {Arm::SrsUnweighted, Arm::RdsUnweighted, Arm::RdsWeighted, Arm::RdsBayes}) {
    if (name == to_string(a)) return a;
  }
  throw invalid_argument(fmt::format("unknown arm '{}'", name));
}

Estimator estimator_of(Arm arm) {
  switch (arm) {
    case Arm::RdsWeighted: return Estimator::RdsWeighted;
    case Arm::RdsBayes: return Estimator::RdsBayes;
    default: return Estimator::Unweighted;
  }
}

bool uses_rds(Arm arm) { return arm != Arm::SrsUnweighted; }

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  for (NetModel m : {NetModel::ER1, NetModel::ER2, NetModel::BA1, NetModel::BA2}) {
    PopulationSpec p;
    p.name = std::string(to_string(m));
    std::transform(p.name.begin(), p.name.end(), p.name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    p.net.model = m;
    cfg.populations.push_back(p);
  }
  InfectionSpec random;
  random.name = "random";
  random.cfg.process = InfectionProcess::Random;
  cfg.infections.push_back(random);
  for (std::uint32_t k : {10u, 100u, 500u}) {
    InfectionSpec si;
    si.name = fmt::format("si{}", k);
    si.cfg.process = InfectionProcess::SI;
    si.cfg.initial_infected = k;
    cfg.infections.push_back(si);
  }
  return cfg;
}

namespace {

[[noreturn]] void config_error(std::size_t line, const std::string& message) {
  throw Error("invalid_config", fmt::format("line {}: {}", line, message));
}

template <class T>
T parse_uint(std::string_view v, std::size_t line) {
  try {
    const auto x = csv::parse_int(v, "value");
    if (x < 0) config_error(line, fmt::format("expected a non-negative integer, got '{}'", v));
    return static_cast<T>(x);
  } catch (const Error&) {
    config_error(line, fmt::format("expected an integer, got '{}'", v));
  }
}

double parse_real(std::string_view v, std::size_t line) {
  try {
    return csv::parse_double(v, "value");
  } catch (const Error&) {
    config_error(line, fmt::format("expected a number, got '{}'", v));
  }
}

std::vector<std::string> parse_list(std::string_view v) {
  std::vector<std::string> out;
  for (const auto& item : csv::split(v, ',')) {
    auto t = std::string(csv::trim(item));
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void apply_population_key(PopulationSpec& p, const std::string& key, std::string_view v,
                          std::size_t line) {
  if (key == "model") {
    p.net.model = parse_net_model(v);
  } else if (key == "n") {
    p.net.n = parse_uint<std::uint32_t>(v, line);
  } else if (key == "target_mean_degree") {
    p.net.target_mean_degree = parse_real(v, line);
  } else if (key == "er_p") {
    p.net.er_p = parse_real(v, line);
  } else if (key == "ba_m") {
    p.net.ba_m = parse_real(v, line);
  } else if (key == "subpops") {
    p.net.n_subpops = parse_uint<std::uint32_t>(v, line);
  } else if (key == "bridges") {
    p.net.bridges_per_subpop = parse_uint<std::uint32_t>(v, line);
  } else if (key == "seed") {
    p.net.seed = parse_uint<std::uint64_t>(v, line);
    p.seed_explicit = true;
  } else {
    config_error(line, fmt::format("unknown population key '{}'", key));
  }
}

void apply_infection_key(InfectionSpec& s, const std::string& key, std::string_view v,
                         std::size_t line) {
  if (key == "process") {
    s.cfg.process = parse_infection_process(v);
  } else if (key == "initial_infected") {
    s.cfg.initial_infected = parse_uint<std::uint32_t>(v, line);
  } else if (key == "prevalence") {
    s.cfg.target_prevalence = parse_real(v, line);
  } else if (key == "contact_prob") {
    s.cfg.base_contact_prob = parse_real(v, line);
  } else if (key == "e1_effect") {
    s.cfg.e1_effect = parse_e1_effect(v);
  } else if (key == "seed") {
    s.cfg.seed = parse_uint<std::uint64_t>(v, line);
    s.seed_explicit = true;
  } else {
    config_error(line, fmt::format("unknown infection key '{}'", key));
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  const ExperimentConfig defaults = default_experiment();
  ExperimentConfig cfg = defaults;
  cfg.populations.clear();
  cfg.infections.clear();

  enum class Section { None, Experiment, Population, Infection } section = Section::None;
  std::optional<std::uint32_t> explicit_reps;
  std::optional<std::uint32_t> scale_reps;
  std::set<std::string> pop_names, inf_names;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto text = csv::trim(raw);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') config_error(line, "unterminated section header");
      const auto inner = csv::trim(text.substr(1, text.size() - 2));
      const auto space = inner.find_first_of(" \t");
      const auto kind = lower(inner.substr(0, space));
      const auto name =
          space == std::string_view::npos ? std::string() : std::string(csv::trim(inner.substr(space)));
      if (kind == "experiment") {
        if (!name.empty()) config_error(line, "[experiment] takes no name");
        section = Section::Experiment;
      } else if (kind == "population" || kind == "infection") {
        if (name.empty()) config_error(line, fmt::format("[{}] needs a name", kind));
        auto& names = kind == "population" ? pop_names : inf_names;
        if (!names.insert(name).second) config_error(line, fmt::format("duplicate {} '{}'", kind, name));
        if (kind == "population") {
          section = Section::Population;
          PopulationSpec p;
          p.name = name;
          cfg.populations.push_back(p);
        } else {
          section = Section::Infection;
          InfectionSpec s;
          s.name = name;
          cfg.infections.push_back(s);
        }
      } else {
        config_error(line, fmt::format("unknown section '{}'", kind));
      }
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string_view::npos) config_error(line, "expected key = value");
    const auto key = lower(csv::trim(text.substr(0, eq)));
    const auto value = csv::trim(text.substr(eq + 1));
    if (value.empty()) config_error(line, fmt::format("empty value for '{}'", key));

    try {
      switch (section) {
        case Section::None:
          config_error(line, "key outside of a section");
        case Section::Population:
          apply_population_key(cfg.populations.back(), key, value, line);
          break;
        case Section::Infection:
          apply_infection_key(cfg.infections.back(), key, value, line);
          break;
        case Section::Experiment:
          if (key == "master_seed") {
            cfg.master_seed = parse_uint<std::uint64_t>(value, line);
          } else if (key == "replications") {
            explicit_reps = parse_uint<std::uint32_t>(value, line);
          } else if (key == "scale") {
            const auto s = lower(value);
            if (s == "desk") {
              scale_reps = kDeskReplications;
            } else if (s == "full") {
              scale_reps = kFullReplications;
            } else {
              config_error(line, fmt::format("scale must be desk or full, got '{}'", value));
            }
          } else if (key == "sample_sizes") {
            cfg.sample_sizes.clear();
            for (const auto& item : parse_list(value)) {
              cfg.sample_sizes.push_back(parse_uint<std::uint32_t>(item, line));
            }
          } else if (key == "arms") {
            cfg.arms.clear();
            for (const auto& item : parse_list(value)) cfg.arms.push_back(parse_arm(lower(item)));
          } else if (key == "workers") {
            cfg.workers = lower(value) == "auto" ? 0 : parse_uint<int>(value, line);
          } else if (key == "prior_coefficient_scale") {
            cfg.prior.coefficient_scale = parse_real(value, line);
          } else if (key == "prior_intercept_scale") {
            cfg.prior.intercept_scale = parse_real(value, line);
          } else if (key == "prior_df") {
            cfg.prior.df = parse_real(value, line);
          } else if (key == "max_iterations") {
            cfg.fit.max_iterations = parse_uint<int>(value, line);
          } else if (key == "tolerance") {
            cfg.fit.tolerance = parse_real(value, line);
          } else if (key == "separation_threshold") {
            cfg.fit.separation_threshold = parse_real(value, line);
          } else {
            config_error(line, fmt::format("unknown experiment key '{}'", key));
          }
          break;
      }
    } catch (const Error& e) {
      if (e.code() == "invalid_config") throw;
      config_error(line, e.what());
    }
  }

  if (cfg.populations.empty()) cfg.populations = defaults.populations;
  if (cfg.infections.empty()) cfg.infections = defaults.infections;
  if (explicit_reps) {
    cfg.replications = *explicit_reps;
  } else if (scale_reps) {
    cfg.replications = *scale_reps;
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", fmt::format("cannot open config '{}'", path.string()));
  return parse_config(in);
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error("invalid_config", m); };
  if (cfg.replications < 1) fail("replications must be at least 1");
  if (cfg.populations.empty()) fail("no populations");
  if (cfg.infections.empty()) fail("no infections");
  if (cfg.sample_sizes.empty()) fail("no sample sizes");
  if (cfg.arms.empty()) fail("no arms");
  if (cfg.workers < 0) fail("workers must be non-negative");
  std::set<Arm> arms(cfg.arms.begin(), cfg.arms.end());
  if (arms.size() != cfg.arms.size()) fail("duplicate arm");
  std::set<std::uint32_t> sizes(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
  if (sizes.size() != cfg.sample_sizes.size()) fail("duplicate sample size");
  for (const auto& p : cfg.populations) {
    if (p.name.empty() || p.name.find_first_of(",\"\n/") != std::string::npos) {
      fail(fmt::format("bad population name '{}'", p.name));
    }
    for (auto n : cfg.sample_sizes) {
      if (n < kRdsSeeds || n > p.net.n) {
        fail(fmt::format("sample size {} outside [{}, {}] for population {}", n, kRdsSeeds,
                         p.net.n, p.name));
      }
    }
  }
  for (const auto& s : cfg.infections) {
    if (s.name.empty() || s.name.find_first_of(",\"\n/") != std::string::npos) {
      fail(fmt::format("bad infection name '{}'", s.name));
    }
    const auto& c = s.cfg;
    if (!(c.target_prevalence > 0.0 && c.target_prevalence < 1.0)) {
      fail(fmt::format("infection {}: prevalence must lie in (0, 1)", s.name));
    }
    if (c.process == InfectionProcess::SI && !(c.base_contact_prob > 0.0 && c.base_contact_prob < 1.0)) {
      fail(fmt::format("infection {}: contact_prob must lie in (0, 1)", s.name));
    }
  }
  if (!(cfg.prior.coefficient_scale > 0.0 && cfg.prior.intercept_scale > 0.0 && cfg.prior.df > 0.0)) {
    fail("prior scales and df must be positive");
  }
  if (cfg.fit.max_iterations < 1 || !(cfg.fit.tolerance > 0.0)) fail("bad fit options");
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

FitResult fit_arm(Arm arm, const RdsSample& sample, const PriorSpec& prior, const FitOptions& fit) {
  const DesignMatrix dm = build_design(sample);
  switch (arm) {
    case Arm::SrsUnweighted:
    case Arm::RdsUnweighted:
      return fit_mle(dm, fit);
    case Arm::RdsWeighted: {
      DesignMatrix w = dm;
      w.weights = rds_weights(sample);
      return fit_weighted(w, fit);
    }
    case Arm::RdsBayes: {
      DesignMatrix w = dm;
      w.weights = rds_weights(sample);
      return fit_bayes(w, prior, fit);
    }
  }
  throw invalid_argument("unknown arm");
}

// One sampling-plus-fit task. Samples are drawn lazily so a sampling
// failure only marks the arms that needed it.
struct ItemContext {
  const std::vector<Arm>* arms;
  const PriorSpec* prior;
  const FitOptions* fit;
  double e1_reference;
  CellKey base;  // estimator left empty
  std::uint32_t replication;
};

template <class SrsFn, class RdsFn>
void run_item(const ItemContext& ctx, SrsFn&& draw_srs, RdsFn&& draw_rds, SamplingMethod rds_method,
              ReplicationResult* out) {
  std::optional<RdsSample> srs, rds;
  std::string srs_error, rds_error;
  auto get = [](auto& slot, std::string& err, auto&& draw) -> const RdsSample* {
    if (!slot && err.empty()) {
      try {
        slot = draw();
      } catch (const std::exception& e) {
        err = e.what();
        if (err.empty()) err = "sampling failed";
      }
    }
    return slot ? &*slot : nullptr;
  };
  for (std::size_t a = 0; a < ctx.arms->size(); ++a) {
    const Arm arm = (*ctx.arms)[a];
    ReplicationResult& r = out[a];
    r.key = ctx.base;
    r.key.estimator = std::string(to_string(arm));
    r.replication = ctx.replication;
    r.e1_reference = ctx.e1_reference;
    r.sampling = uses_rds(arm) ? rds_method : SamplingMethod::SRS;
    r.fit.estimator = estimator_of(arm);
    const RdsSample* s = uses_rds(arm) ? get(rds, rds_error, draw_rds) : get(srs, srs_error, draw_srs);
    if (!s) {
      r.error = sanitize("sampling: " + (uses_rds(arm) ? rds_error : srs_error));
    } else {
      try {
        r.fit = fit_arm(arm, *s, *ctx.prior, *ctx.fit);
      } catch (const Error& e) {
        r.error = sanitize(e.code() + ": " + e.what());
      } catch (const std::exception& e) {
        r.error = sanitize(e.what());
      }
    }
    r.outcome = r.error.empty() ? classify(r.fit, r.e1_reference) : CoverageOutcome{.excluded = true};
  }
}

std::vector<SummaryRow> summarize_details(const std::vector<ReplicationResult>& details) {
  std::vector<CellKey> order;
  std::vector<CoverageTally> tallies;
  std::map<std::tuple<std::string, std::string, std::uint32_t, std::string>, std::size_t> index;
  for (const auto& r : details) {
    const auto k = std::make_tuple(r.key.model, r.key.infection, r.key.n, r.key.estimator);
    auto [it, inserted] = index.emplace(k, order.size());
    if (inserted) {
      order.push_back(r.key);
      tallies.emplace_back();
    }
    tallies[it->second].add(r.outcome);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rows.push_back(summarize_tally(order[i], tallies[i]));
  return rows;
}

double fraction(std::span<const std::uint8_t> flags) {
  std::size_t k = 0;
  for (auto f : flags) k += f != 0;
  return flags.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(flags.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, Execution mode) {
  validate(cfg);
  const int workers = cfg.workers;
  const std::size_t P = cfg.populations.size();
  const std::size_t I = cfg.infections.size();

  std::vector<PopulationGraph> graphs(P);
  std::vector<std::uint64_t> graph_seeds(P);
  for_each_index(mode, P, workers, [&](std::size_t p) {
    const auto& spec = cfg.populations[p];
    NetModelConfig net = spec.net;
    if (!spec.seed_explicit) net.seed = derive_seed(cfg.master_seed, "population/" + spec.name);
    graph_seeds[p] = net.seed;
    graphs[p] = assign_attributes(generate(net), derive_seed(cfg.master_seed, "attributes/" + spec.name));
  });

  ExperimentResult result;
  result.master_seed = cfg.master_seed;
  result.replications = cfg.replications;
  result.populations.resize(P * I);
  std::vector<PopulationGraph> infected(P * I);
  for_each_index(mode, P * I, workers, [&](std::size_t pi) {
    const auto& pop = cfg.populations[pi / I];
    const auto& inf = cfg.infections[pi % I];
    InfectionConfig ic = inf.cfg;
    const std::string key = "infection/" + pop.name + "/" + inf.name;
    ic.seed = inf.seed_explicit ? derive_seed(inf.cfg.seed, key) : derive_seed(cfg.master_seed, key);
    InfectionRun run = infect(graphs[pi / I], ic);
    auto& rep = result.populations[pi];
    rep.model = pop.name;
    rep.infection = inf.name;
    rep.n = run.population.size();
    rep.degree = degree_summary(run.population);
    rep.prevalence = run.prevalence;
    rep.e1_prevalence = fraction(run.population.e1_flags());
    rep.e2_prevalence = fraction(run.population.e2_flags());
    rep.waves = run.waves;
    rep.graph_seed = graph_seeds[pi / I];
    rep.infection_seed = ic.seed;
    rep.truth = fit_population_truth(run.population);
    infected[pi] = std::move(run.population);
  });

  const std::size_t S = cfg.sample_sizes.size();
  const std::size_t R = cfg.replications;
  const std::size_t A = cfg.arms.size();
  const std::size_t items = P * I * S * R;
  result.replications_detail.resize(items * A);
  for_each_index(mode, items, workers, [&](std::size_t item) {
    const std::size_t rep = item % R;
    const std::size_t s = (item / R) % S;
    const std::size_t pi = item / (R * S);
    const auto& g = infected[pi];
    const auto& report = result.populations[pi];
    const std::uint32_t n = cfg.sample_sizes[s];
    ItemContext ctx{&cfg.arms, &cfg.prior, &cfg.fit, report.truth.e1_reference,
                    CellKey{report.model, report.infection, n, {}}, static_cast<std::uint32_t>(rep)};
    const std::string cell = fmt::format("{}/{}/{}", report.model, report.infection, n);
    run_item(
        ctx, [&] { return srs_sample(g, n, derive_seed(cfg.master_seed, cell + "/srs", rep)); },
        [&] { return rds_sample(g, n, derive_seed(cfg.master_seed, cell + "/rds", rep)); },
        SamplingMethod::RDS, &result.replications_detail[item * A]);
  });

  // Summary rows follow (population, infection, n, arm); details are stored
  // by (population, infection, n, replication, arm).
  result.summary = summarize_details(result.replications_detail);
  return result;
}

ExperimentResult run_realdata(const RdsDataset& ds, const RealDataConfig& cfg, Execution mode) {
  if (cfg.replications < 1) throw Error("invalid_config", "replications must be at least 1");
  if (cfg.sample_sizes.empty() || cfg.arms.empty()) throw Error("invalid_config", "empty grid");
  for (auto n : cfg.sample_sizes) {
    if (n < 1 || n > ds.size()) {
      throw invalid_argument(
          fmt::format("sample size {} exceeds the dataset size {}", n, ds.size()));
    }
  }
  ExperimentResult result;
  result.master_seed = cfg.master_seed;
  result.replications = cfg.replications;

  PopulationReport report;
  report.model = cfg.name;
  report.infection = "observed";
  report.n = static_cast<std::uint32_t>(ds.size());
  const DatasetSummary sum = summarize_dataset(ds);
  report.degree = {sum.degree_mean, sum.degree_median, sum.degree_min, sum.degree_max};
  report.prevalence = sum.outcome_prevalence;
  report.e1_prevalence = sum.e1_prevalence;
  report.e2_prevalence = sum.e2_prevalence;
  report.truth = fit_population_truth(ds);
  result.populations.push_back(report);

  const std::size_t S = cfg.sample_sizes.size();
  const std::size_t R = cfg.replications;
  const std::size_t A = cfg.arms.size();
  result.replications_detail.resize(S * R * A);
  for_each_index(mode, S * R, cfg.workers, [&](std::size_t item) {
    const std::size_t rep = item % R;
    const std::uint32_t n = cfg.sample_sizes[item / R];
    ItemContext ctx{&cfg.arms, &cfg.prior, &cfg.fit, report.truth.e1_reference,
                    CellKey{report.model, report.infection, n, {}}, static_cast<std::uint32_t>(rep)};
    const std::string cell = fmt::format("{}/{}/{}", report.model, report.infection, n);
    run_item(
        ctx, [&] { return dataset_srs(ds, n, derive_seed(cfg.master_seed, cell + "/srs", rep)); },
        [&] { return resample_trees(ds, n, derive_seed(cfg.master_seed, cell + "/tree", rep)); },
        SamplingMethod::TreeResample, &result.replications_detail[item * A]);
  });
  result.summary = summarize_details(result.replications_detail);
  return result;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = summary_csv_header() + "\n";
  for (const auto& r : rows) out += summary_csv_row(r) + "\n";
  return out;
}

namespace {
constexpr std::string_view kReplicationPrefix = "model,infection,n,arm,sampling,rep,e1_reference";
constexpr std::string_view kReplicationSuffix = "excluded,e1_correct,e2_typeI,int_typeI,combined,error";
}  // namespace

std::string replications_csv(const ExperimentResult& result) {
  std::string out = fmt::format("{},{},{}\n", kReplicationPrefix, fit_csv_header(), kReplicationSuffix);
  for (const auto& r : result.replications_detail) {
    const auto& o = r.outcome;
    out += fmt::format("{},{},{},{},{},{},{:.17g},{},{},{},{},{},{},{}\n", r.key.model, r.key.infection,
                       r.key.n, r.key.estimator, to_string(r.sampling), r.replication, r.e1_reference,
                       fit_csv_row(r.fit), int(o.excluded), int(o.e1_correct), int(o.e2_type1),
                       int(o.int_type1), int(o.combined_correct), r.error);
  }
  return out;
}

std::string populations_csv(const ExperimentResult& result) {
  std::string out =
      "model,infection,n,degree_mean,degree_median,degree_min,degree_max,prevalence,"
      "e1_prevalence,e2_prevalence,waves,or_e1,or_e2,or_int,e1_reference,graph_seed,infection_seed\n";
  for (const auto& p : result.populations) {
    out += fmt::format("{},{},{},{:.4f},{:.1f},{},{},{:.6f},{:.6f},{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{},{}\n",
                       p.model, p.infection, p.n, p.degree.mean, p.degree.median, p.degree.min,
                       p.degree.max, p.prevalence, p.e1_prevalence, p.e2_prevalence, p.waves,
                       p.truth.or_e1, p.truth.or_e2, p.truth.or_int, p.truth.e1_reference,
                       p.graph_seed, p.infection_seed);
  }
  return out;
}

std::string manifest_json(const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["config_schema_version"] = kConfigSchemaVersion;
  j["master_seed"] = result.master_seed;
  j["replications"] = result.replications;
  auto pops = nlohmann::ordered_json::array();
  for (const auto& p : result.populations) {
    pops.push_back({{"model", p.model},
                    {"infection", p.infection},
                    {"n", p.n},
                    {"graph_seed", p.graph_seed},
                    {"infection_seed", p.infection_seed},
                    {"prevalence", p.prevalence},
                    {"waves", p.waves}});
  }
  j["populations"] = pops;
  j["summary_rows"] = result.summary.size();
  j["replication_rows"] = result.replications_detail.size();
  std::size_t errors = 0;
  for (const auto& r : result.replications_detail) errors += !r.error.empty();
  j["replication_errors"] = errors;
  j["files"] = {"summary.csv", "replications.csv", "populations.csv"};
  return j.dump(2) + "\n";
}

void write_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  // Render everything first so a formatting failure leaves nothing behind.
  const std::string summary = summary_csv(result.summary);
  const std::string reps = replications_csv(result);
  const std::string pops = populations_csv(result);
  const std::string manifest = manifest_json(result);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "replications.csv", reps);
  write_file_atomic(dir / "populations.csv", pops);
  write_file_atomic(dir / "summary.csv", summary);
  write_file_atomic(dir / "manifest.json", manifest);
}

std::vector<SummaryRow> summarize_replications(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw Error("empty_input", "replications file is empty");
  const csv::Header h(csv::split(line));
  const auto ci = [&](std::string_view name) { return h.index(name); };
  const std::size_t i_model = ci("model"), i_inf = ci("infection"), i_n = ci("n"), i_arm = ci("arm"),
                    i_ref = ci("e1_reference"), i_conv = ci("converged"), i_flags = ci("flags"),
                    i_err = ci("error");
  const std::size_t i_lo[3] = {ci("or1_lo"), ci("or2_lo"), ci("or3_lo")};
  const std::size_t i_hi[3] = {ci("or1_hi"), ci("or2_hi"), ci("or3_hi")};

  std::vector<ReplicationResult> details;
  std::size_t row = 1;
  while (csv::next_line(in, line)) {
    ++row;
    const auto f = csv::split(line, ',');
    if (f.size() != h.names().size()) {
      throw Error("parse", fmt::format("row {}: expected {} fields, got {}", row, h.names().size(), f.size()));
    }
    ReplicationResult r;
    r.key.model = f[i_model];
    r.key.infection = std::string(f[i_inf]);
    r.key.n = static_cast<std::uint32_t>(csv::parse_int(f[i_n], "n"));
    r.key.estimator = std::string(f[i_arm]);
    r.e1_reference = csv::parse_double(f[i_ref], "e1_reference");
    r.error = std::string(f[i_err]);
    r.fit.converged = csv::parse_bool01(f[i_conv], "converged");
    const std::string flags(f[i_flags]);
    r.fit.diagnostics.separation_suspected = flags.find("separation") != std::string::npos;
    r.fit.diagnostics.curvature_not_pd = flags.find("curvature") != std::string::npos;
    for (int k = 0; k < 3; ++k) {
      r.fit.or_lo[k] = csv::parse_double(f[i_lo[k]], "or_lo");
      r.fit.or_hi[k] = csv::parse_double(f[i_hi[k]], "or_hi");
    }
    r.outcome = r.error.empty() ? classify(r.fit, r.e1_reference) : CoverageOutcome{.excluded = true};
    details.push_back(std::move(r));
  }
  if (details.empty()) throw Error("empty_input", "replications file has no rows");
  return summarize_details(details);
}

}  // namespace rdslab
