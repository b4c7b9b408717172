// Command-line front end: gen, infect, sample, fit, run, run-real,
// summarize and make-fixture.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "rdslab/dataset.hpp"
#include "rdslab/epidemic.hpp"
#include "rdslab/error.hpp"
#include "rdslab/glm.hpp"
#include "rdslab/netgen.hpp"
#include "rdslab/population_io.hpp"
#include "rdslab/rng.hpp"
#include "rdslab/runner.hpp"
#include "rdslab/sampling.hpp"

namespace fs = std::filesystem;
using namespace rdslab;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

fs::path resolve_out(const std::string& flag) {
  const std::string out = flag.empty() ? env_or("RDSLAB_OUT", "") : flag;
  if (out.empty()) throw invalid_argument("no output given (use --out or RDSLAB_OUT)");
  return out;
}

int resolve_worker_flag(const std::string& flag) {
  const std::string v = flag.empty() ? env_or("RDSLAB_WORKERS", "auto") : flag;
  if (v == "auto") return 0;
  try {
    std::size_t used = 0;
    const int w = std::stoi(v, &used);
    if (used == v.size() && w >= 0) return w;
  } catch (const std::exception&) {
  }
  throw invalid_argument(fmt::format("bad worker count '{}'", v));
}

std::vector<std::uint32_t> parse_sizes(const std::vector<std::uint32_t>& v) {
  if (v.empty()) throw invalid_argument("no sample sizes");
  return v;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("io", fmt::format("cannot open '{}'", p.string()));
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation harness for logistic estimators under respondent-driven sampling"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       fmt::format("rdslab {} (config schema {})", kToolVersion, kConfigSchemaVersion));

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a population graph with E1/E2 attributes");
  std::string gen_model = "er1", gen_out;
  NetModelConfig net;
  std::optional<double> er_p, ba_m;
  std::uint64_t gen_seed = 1;
  gen->add_option("--model", gen_model, "er1, er2, ba1 or ba2")->capture_default_str();
  gen->add_option("--n", net.n, "Node count")->capture_default_str();
  gen->add_option("--target-degree", net.target_mean_degree, "Target mean degree")->capture_default_str();
  gen->add_option("--er-p", er_p, "Explicit ER edge probability");
  gen->add_option("--ba-m", ba_m, "Explicit BA links per new node");
  gen->add_option("--subpops", net.n_subpops, "Subpopulations (clustered models)")->capture_default_str();
  gen->add_option("--bridges", net.bridges_per_subpop, "Bridge nodes per subpopulation")->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory");

  // infect
  auto* inf = app.add_subcommand("infect", "Apply an infection process to a population");
  std::string inf_pop, inf_process = "random", inf_effect = "odds", inf_out;
  InfectionConfig icfg;
  inf->add_option("--pop", inf_pop, "Population directory")->required();
  inf->add_option("--process", inf_process, "random or si")->capture_default_str();
  inf->add_option("--initial", icfg.initial_infected, "SI index cases")->capture_default_str();
  inf->add_option("--prevalence", icfg.target_prevalence, "Target prevalence")->capture_default_str();
  inf->add_option("--contact-prob", icfg.base_contact_prob, "SI per-contact probability")->capture_default_str();
  inf->add_option("--e1-effect", inf_effect, "odds, risk or none")->capture_default_str();
  inf->add_option("--seed", icfg.seed, "RNG seed")->capture_default_str();
  inf->add_option("--out", inf_out, "Output directory");

  // sample
  auto* smp = app.add_subcommand("sample", "Draw an SRS, RDS or tree-resampled sample");
  std::string smp_pop, smp_data, smp_method = "rds", smp_out;
  std::uint32_t smp_n = 100;
  std::uint64_t smp_seed = 1;
  auto* smp_pop_opt = smp->add_option("--pop", smp_pop, "Population directory");
  smp->add_option("--data", smp_data, "RDS dataset CSV (for tree or srs)")->excludes(smp_pop_opt);
  smp->add_option("--method", smp_method, "srs, rds or tree")->capture_default_str();
  smp->add_option("--n", smp_n, "Sample size")->capture_default_str();
  smp->add_option("--seed", smp_seed, "RNG seed")->capture_default_str();
  smp->add_option("--out", smp_out, "Output sample CSV");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one estimator to a sample CSV");
  std::string fit_in, fit_est = "unweighted", fit_out;
  fit->add_option("sample", fit_in, "Sample CSV")->required();
  fit->add_option("--estimator", fit_est, "unweighted, weighted or bayes")->capture_default_str();
  fit->add_option("--out", fit_out, "Output fit CSV (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run the simulation grid");
  std::string run_cfg, run_out, run_workers;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::uint32_t> run_reps;
  bool run_full = false, run_serial = false;
  run->add_option("--config", run_cfg, "Experiment config (defaults to the full grid)");
  run->add_option("--out", run_out, "Output directory (or RDSLAB_OUT)");
  run->add_option("--seed", run_seed, "Override the master seed");
  run->add_option("--replications", run_reps, "Override the replication count");
  run->add_flag("--full-scale", run_full, "1000 replications per cell");
  run->add_option("--workers", run_workers, "Worker threads or 'auto' (or RDSLAB_WORKERS)");
  run->add_flag("--serial", run_serial, "Use the serial reference loop");

  // run-real
  auto* real = app.add_subcommand("run-real", "Real-data protocol on an RDS dataset");
  std::string real_data, real_out, real_workers;
  RealDataConfig rcfg;
  std::optional<std::uint32_t> real_reps;
  bool real_full = false;
  real->add_option("--data", real_data, "Dataset CSV")->required();
  real->add_option("--out", real_out, "Output directory (or RDSLAB_OUT)");
  real->add_option("--seed", rcfg.master_seed, "Master seed")->capture_default_str();
  real->add_option("--n", rcfg.sample_sizes, "Sample sizes")->capture_default_str();
  real->add_option("--replications", real_reps, "Replications per cell");
  real->add_flag("--full-scale", real_full, "1000 replications per cell");
  real->add_option("--workers", real_workers, "Worker threads or 'auto' (or RDSLAB_WORKERS)");

  // summarize
  auto* sum = app.add_subcommand("summarize", "Recompute summary.csv from replications.csv");
  std::string sum_in, sum_out;
  sum->add_option("replications", sum_in, "replications.csv")->required();
  sum->add_option("--out", sum_out, "Output file (default stdout)");

  // make-fixture
  auto* fix = app.add_subcommand("make-fixture", "Write a synthetic RDS dataset");
  FixtureSpec fspec;
  std::uint64_t fix_seed = 1;
  std::string fix_out;
  fix->add_option("--n", fspec.n, "Rows")->capture_default_str();
  fix->add_option("--seeds", fspec.seeds, "Recruitment trees")->capture_default_str();
  fix->add_option("--seed", fix_seed, "RNG seed")->capture_default_str();
  fix->add_option("--out", fix_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << fmt::format("error: code=usage message={}\n", e.what());
    return 2;
  }

  try {
    if (*gen) {
      net.model = parse_net_model(gen_model);
      net.er_p = er_p;
      net.ba_m = ba_m;
      net.seed = gen_seed;
      const fs::path out = resolve_out(gen_out);
      const auto g = assign_attributes(generate(net), derive_seed(gen_seed, "attributes"));
      save_population(g, out);
      std::cout << fmt::format("wrote {} nodes, {} edges to {}\n", g.size(), g.edge_count(), out.string());
    } else if (*inf) {
      icfg.process = parse_infection_process(inf_process);
      icfg.e1_effect = parse_e1_effect(inf_effect);
      const fs::path out = resolve_out(inf_out);
      const auto g = load_population(inf_pop);
      const auto result = infect(g, icfg);
      const std::string meta = infection_metadata_json(result, icfg);
      save_population(result.population, out);
      write_file_atomic(out / "infection.json", meta);
      std::cout << fmt::format("infected {} of {} ({} waves)\n", result.infected, g.size(), result.waves);
    } else if (*smp) {
      const auto method = parse_sampling_method(smp_method);
      const fs::path out = resolve_out(smp_out);
      std::ostringstream buf;
      if (!smp_data.empty()) {
        const auto ds = ingest_rds_dataset(fs::path(smp_data));
        RdsSample s;
        if (method == SamplingMethod::TreeResample) {
          s = resample_trees(ds, smp_n, smp_seed);
        } else if (method == SamplingMethod::SRS) {
          s = dataset_srs(ds, smp_n, smp_seed);
        } else {
          throw invalid_argument("a dataset supports only the srs and tree methods");
        }
        const auto labels = ds.labels();
        write_sample_csv(s, buf, labels);
      } else {
        if (smp_pop.empty()) throw invalid_argument("sample needs --pop or --data");
        const auto g = load_population(smp_pop);
        if (method == SamplingMethod::TreeResample) throw invalid_argument("tree resampling needs --data");
        const auto s = method == SamplingMethod::SRS ? srs_sample(g, smp_n, smp_seed)
                                                     : rds_sample(g, smp_n, smp_seed);
        write_sample_csv(s, buf);
      }
      write_file_atomic(out, buf.str());
    } else if (*fit) {
      auto in = open_in(fit_in);
      const RdsSample s = read_sample_csv(in);
      DesignMatrix dm = build_design(s);
      FitResult r;
      switch (parse_estimator(fit_est)) {
        case Estimator::Unweighted:
          r = fit_mle(dm);
          break;
        case Estimator::RdsWeighted:
          dm.weights = rds_weights(s);
          r = fit_weighted(dm);
          break;
        case Estimator::RdsBayes:
          dm.weights = rds_weights(s);
          r = fit_bayes(dm);
          break;
      }
      const std::string text = fit_csv_header() + "\n" + fit_csv_row(r) + "\n";
      if (fit_out.empty()) {
        std::cout << text;
      } else {
        write_file_atomic(fit_out, text);
      }
    } else if (*run) {
      ExperimentConfig cfg = run_cfg.empty() ? default_experiment() : load_config(run_cfg);
      if (run_full) cfg.replications = kFullReplications;
      if (run_reps) cfg.replications = *run_reps;
      if (run_seed) cfg.master_seed = *run_seed;
      if (!run_workers.empty() || std::getenv("RDSLAB_WORKERS")) cfg.workers = resolve_worker_flag(run_workers);
      const fs::path out = resolve_out(run_out);
      const auto result = run_experiment(cfg, run_serial ? Execution::Serial : Execution::Parallel);
      write_results(result, out);
      std::cout << fmt::format("wrote {} summary rows to {}\n", result.summary.size(), out.string());
    } else if (*real) {
      if (real_full) rcfg.replications = kFullReplications;
      if (real_reps) rcfg.replications = *real_reps;
      rcfg.sample_sizes = parse_sizes(rcfg.sample_sizes);
      rcfg.workers = resolve_worker_flag(real_workers);
      const fs::path out = resolve_out(real_out);
      const auto ds = ingest_rds_dataset(fs::path(real_data));
      const auto result = run_realdata(ds, rcfg);
      write_results(result, out);
      std::cout << fmt::format("wrote {} summary rows to {}\n", result.summary.size(), out.string());
    } else if (*sum) {
      auto in = open_in(sum_in);
      const std::string text = summary_csv(summarize_replications(in));
      if (sum_out.empty()) {
        std::cout << text;
      } else {
        write_file_atomic(sum_out, text);
      }
    } else if (*fix) {
      std::ostringstream buf;
      write_dataset_csv(make_synthetic_dataset(fspec, fix_seed), buf);
      write_file_atomic(fix_out, buf.str());
    }
  } catch (const Error& e) {
    std::cerr << fmt::format("error: code={} message={}\n", e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error: code=internal message={}\n", e.what());
    return 1;
  }
  return 0;
}
