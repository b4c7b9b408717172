#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rdslab/dataset.hpp"
#include "rdslab/error.hpp"
#include "rdslab/runner.hpp"

using namespace rdslab;

namespace {

constexpr const char* kSmall = R"(
# two small populations, two infections
[experiment]
master_seed = 77
replications = 4
sample_sizes = 100, 250
arms = srs_unweighted, rds_weighted, rds_bayes

[population er]
model = er1
n = 2000

[population ba]
model = ba1
n = 2000

[infection rnd]
process = random

[infection si10]
process = si
initial_infected = 10
)";

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

TEST_CASE("default experiment grid", "[runner][config]") {
  const auto cfg = default_experiment();
  REQUIRE(cfg.populations.size() == 4);
  CHECK(cfg.populations[0].name == "ER1");
  CHECK(cfg.populations[3].name == "BA2");
  for (const auto& p : cfg.populations) {
    CHECK(p.net.n == 10000);
    CHECK(p.net.target_mean_degree == 20.0);
  }
  REQUIRE(cfg.infections.size() == 4);
  CHECK(cfg.infections[0].cfg.process == InfectionProcess::Random);
  CHECK(cfg.infections[1].cfg.initial_infected == 10);
  CHECK(cfg.infections[2].cfg.initial_infected == 100);
  CHECK(cfg.infections[3].cfg.initial_infected == 500);
  CHECK(cfg.sample_sizes == std::vector<std::uint32_t>{100, 250, 500});
  CHECK(cfg.arms.size() == 4);
  CHECK(cfg.replications == kDeskReplications);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("config parsing", "[runner][config]") {
  const auto cfg = parse(kSmall);
  CHECK(cfg.master_seed == 77);
  CHECK(cfg.replications == 4);
  CHECK(cfg.sample_sizes == std::vector<std::uint32_t>{100, 250});
  CHECK(cfg.arms == std::vector<Arm>{Arm::SrsUnweighted, Arm::RdsWeighted, Arm::RdsBayes});
  REQUIRE(cfg.populations.size() == 2);
  CHECK(cfg.populations[1].net.model == NetModel::BA1);
  CHECK(cfg.populations[1].net.n == 2000);
  REQUIRE(cfg.infections.size() == 2);
  CHECK(cfg.infections[1].cfg.process == InfectionProcess::SI);

  CHECK(parse("[experiment]\nscale = full\n").replications == kFullReplications);
  CHECK(parse("[experiment]\nscale = full\nreplications = 3\n").replications == 3);
  CHECK(parse("[experiment]\nreplications = 3\nscale = full\n").replications == 3);
  CHECK(parse("[experiment]\nworkers = auto\n").workers == 0);
  CHECK(parse("[experiment]\nworkers = 3\n").workers == 3);
  // No population sections: the default populations are used.
  CHECK(parse("[experiment]\nmaster_seed = 1\n").populations.size() == 4);
}

TEST_CASE("config errors", "[runner][config]") {
  CHECK(config_error("[experiment]\nbogus = 1\n") == "invalid_config");
  CHECK(config_error("[nonsense]\n") == "invalid_config");
  CHECK(config_error("master_seed = 1\n") == "invalid_config");
  CHECK(config_error("[experiment]\nreplications = 0\n") == "invalid_config");
  CHECK(config_error("[experiment]\nreplications = -3\n") == "invalid_config");
  CHECK(config_error("[experiment]\nreplications = many\n") == "invalid_config");
  CHECK(config_error("[experiment]\nsample_sizes = 100, 100\n") == "invalid_config");
  CHECK(config_error("[experiment]\nsample_sizes = 2\n") == "invalid_config");
  CHECK(config_error("[experiment]\narms = srs_unweighted, lasso\n") == "invalid_config");
  CHECK(config_error("[experiment]\nscale = huge\n") == "invalid_config");
  CHECK(config_error("[experiment]\nprior_df = 0\n") == "invalid_config");
  CHECK(config_error("[population p]\nmodel = ws\n") == "invalid_config");
  CHECK(config_error("[population p]\nn = 50\n") == "invalid_config");  // smaller than n = 500
  CHECK(config_error("[population p]\n[population p]\n") == "invalid_config");
  CHECK(config_error("[population a/b]\n") == "invalid_config");
  CHECK(config_error("[infection i]\nprevalence = 1.5\n") == "invalid_config");
  CHECK(config_error("[infection i]\nprocess = si\ncontact_prob = 0\n") == "invalid_config");
  CHECK(config_error("[experiment\n") == "invalid_config");
  CHECK(config_error("[experiment]\nmaster_seed\n") == "invalid_config");
  try {
    parse("[experiment]\n\nbogus = 1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/rdslab.ini"), Error);
}

TEST_CASE("experiment grid arithmetic", "[runner]") {
  auto cfg = parse(kSmall);
  const auto r = run_experiment(cfg, Execution::Serial);
  // 2 populations x 2 infections x 2 sizes x 3 arms.
  CHECK(r.summary.size() == 24);
  CHECK(r.replications_detail.size() == 24 * 4);
  CHECK(r.populations.size() == 4);
  for (const auto& row : r.summary) {
    CHECK(row.reps_used + row.excluded == 4);
    if (!row.empty) {
      CHECK(row.combined <= row.coverage_e1);
      for (double v : {row.coverage_e1, row.type1_e2, row.type1_int, row.combined}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  CHECK(r.summary[0].key.model == "er");
  CHECK(r.summary[0].key.infection == "rnd");
  CHECK(r.summary[0].key.n == 100);
  CHECK(r.summary[0].key.estimator == "srs_unweighted");
  CHECK(r.summary[1].key.estimator == "rds_weighted");
  CHECK(r.summary[3].key.n == 250);
  for (const auto& p : r.populations) {
    CHECK(p.prevalence == 0.3);
    CHECK(p.n == 2000);
    CHECK(p.truth.e1_reference == kNominalE1OddsRatio);
  }
  for (const auto& d : r.replications_detail) {
    CHECK(d.sampling == (d.key.estimator == "srs_unweighted" ? SamplingMethod::SRS : SamplingMethod::RDS));
  }
}

TEST_CASE("one replication per cell", "[runner]") {
  auto cfg = parse(kSmall);
  cfg.replications = 1;
  const auto r = run_experiment(cfg, Execution::Parallel);
  CHECK(r.replications_detail.size() == 24);
  for (const auto& row : r.summary) CHECK(row.reps_used + row.excluded == 1);
}

TEST_CASE("outputs are identical for serial and any worker count", "[runner][determinism]") {
  auto cfg = parse(kSmall);
  const auto serial = run_experiment(cfg, Execution::Serial);
  const auto ref_summary = summary_csv(serial.summary);
  const auto ref_reps = replications_csv(serial);
  const auto ref_pops = populations_csv(serial);
  const auto ref_manifest = manifest_json(serial);
  for (int workers : {0, 1, 2, 3, 8}) {
    cfg.workers = workers;
    const auto par = run_experiment(cfg, Execution::Parallel);
    CHECK(summary_csv(par.summary) == ref_summary);
    CHECK(replications_csv(par) == ref_reps);
    CHECK(populations_csv(par) == ref_pops);
    CHECK(manifest_json(par) == ref_manifest);
  }
  cfg.master_seed = 78;
  CHECK(replications_csv(run_experiment(cfg)) != ref_reps);
}

TEST_CASE("explicit seeds pin a population", "[runner][determinism]") {
  std::string text = kSmall;
  text += "\n[population pinned]\nmodel = er1\nn = 2000\nseed = 5\n";
  auto a = parse(text);
  a.replications = 1;
  auto b = a;
  b.master_seed = 999;
  const auto ra = run_experiment(a), rb = run_experiment(b);
  // populations: er/rnd, er/si10, ba/rnd, ba/si10, pinned/rnd, pinned/si10
  CHECK(ra.populations[4].graph_seed == rb.populations[4].graph_seed);
  CHECK(ra.populations[0].graph_seed != rb.populations[0].graph_seed);
}

TEST_CASE("summarize re-derives the summary from replications.csv", "[runner][io]") {
  const auto r = run_experiment(parse(kSmall));
  std::istringstream in(replications_csv(r));
  const auto rows = summarize_replications(in);
  CHECK(summary_csv(rows) == summary_csv(r.summary));

  std::istringstream bad("model,infection\nx,y\n");
  CHECK_THROWS_AS(summarize_replications(bad), Error);
}

TEST_CASE("result files are written atomically", "[runner][io]") {
  const auto dir = std::filesystem::temp_directory_path() / "rdslab_runner_out";
  std::filesystem::remove_all(dir);
  auto cfg = parse(kSmall);
  cfg.replications = 2;
  const auto r = run_experiment(cfg);
  write_results(r, dir);
  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir)) names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"manifest.json", "populations.csv", "replications.csv", "summary.csv"});
  CHECK(slurp(dir / "summary.csv") == summary_csv(r.summary));

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["tool_version"] == std::string(kToolVersion));
  CHECK(m["config_schema_version"] == kConfigSchemaVersion);
  CHECK(m["master_seed"] == 77);
  CHECK(m["replications"] == 2);
  CHECK(m["summary_rows"] == 24);
  CHECK_FALSE(m.contains("workers"));

  const auto header = slurp(dir / "populations.csv").substr(0, 20);
  CHECK(header.rfind("model,infection,n,", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("real-data runs use tree resampling and the fitted reference", "[runner][real]") {
  const auto ds = make_synthetic_dataset(FixtureSpec{}, 11);
  RealDataConfig cfg;
  cfg.sample_sizes = {100, 250};
  cfg.replications = 3;
  const auto r = run_realdata(ds, cfg);
  CHECK(r.summary.size() == 8);
  REQUIRE(r.populations.size() == 1);
  CHECK(r.populations[0].infection == "observed");
  CHECK(r.populations[0].n == ds.size());
  const double ref = r.populations[0].truth.e1_reference;
  CHECK(ref == r.populations[0].truth.or_e1);
  for (const auto& d : r.replications_detail) {
    CHECK(d.e1_reference == ref);
    CHECK(d.sampling == (d.key.estimator == "srs_unweighted" ? SamplingMethod::SRS
                                                              : SamplingMethod::TreeResample));
  }
  CHECK(replications_csv(run_realdata(ds, cfg, Execution::Serial)) == replications_csv(r));

  cfg.sample_sizes = {5000};
  try {
    run_realdata(ds, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "invalid_argument");
  }
}
