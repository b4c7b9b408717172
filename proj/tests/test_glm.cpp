#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rdslab/error.hpp"
#include "rdslab/glm.hpp"
#include "test_helpers.hpp"

using namespace rdslab;
using testkit::logit;

namespace {

// Independent weighted log-likelihood, straight from the definition.
double loglik_oracle(const DesignMatrix& dm, const Vector4& b) {
  double s = 0;
  for (Eigen::Index i = 0; i < dm.rows(); ++i) {
    const double eta = dm.x.row(i).dot(b);
    const double p = testkit::expit(eta);
    s += dm.weights(i) * (dm.y(i) * std::log(p) + (1 - dm.y(i)) * std::log(1 - p));
  }
  return s;
}

DesignMatrix random_design(int n, std::uint64_t seed, bool weighted) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution half(0.5);
  std::uniform_int_distribution<int> deg(1, 60);
  std::vector<SampleUnit> units(n);
  for (int i = 0; i < n; ++i) {
    units[i].e1 = half(rng);
    units[i].e2 = half(rng);
    const double eta = -1.0 + 0.7 * units[i].e1 + 0.2 * units[i].e2 + 0.3 * units[i].e1 * units[i].e2;
    units[i].outcome = std::bernoulli_distribution(testkit::expit(eta))(rng);
    units[i].reported_degree = deg(rng);
  }
  auto dm = build_design(units);
  if (weighted) {
    RdsSample s;
    s.units = units;
    dm.weights = rds_weights(s);
  }
  return dm;
}

// Design for a 2x2 table (a, b = E1+ cases / non-cases; c, d = E1-) in the
// E2 = 0 stratum, with the same table copied into E2 = 1 so every column
// is identified. In the saturated model beta1 is the E2 = 0 contrast.
DesignMatrix two_by_two(int a, int b, int c, int d) {
  const int cells[2][2][2] = {{{c, c + d}, {c, c + d}}, {{a, a + b}, {a, a + b}}};
  return build_design(testkit::table_units(cells));
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

void check_derivatives(const std::function<ObjectiveEval(const Vector4&)>& f,
                       const std::function<double(const Vector4&)>& value_oracle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    Vector4 b(u(rng), u(rng), u(rng), u(rng));
    const auto e = f(b);
    CHECK(e.value == Catch::Approx(value_oracle(b)).epsilon(1e-12));
    Vector4 g;
    Matrix4 h;
    for (int j = 0; j < 4; ++j) {
      const double step = 1e-5 * std::max(1.0, std::abs(b(j)));
      Vector4 bp = b, bm = b;
      bp(j) += step;
      bm(j) -= step;
      g(j) = (value_oracle(bp) - value_oracle(bm)) / (2 * step);
      h.col(j) = (f(bp).gradient - f(bm).gradient) / (2 * step);
    }
    CHECK(max_rel(e.gradient, g) < 1e-5);
    CHECK(max_rel(e.hessian, h) < 1e-4);
  }
}

}  // namespace

TEST_CASE("design rows follow the unit attributes", "[glm][design]") {
  std::vector<SampleUnit> units(3);
  units[0].e1 = true;
  units[0].outcome = true;
  units[1].e1 = true;
  units[1].e2 = true;
  const auto dm = build_design(units);
  CHECK(dm.x.row(0) == Eigen::RowVector4d(1, 1, 0, 0));
  CHECK(dm.y(0) == 1.0);
  CHECK(dm.x(1, 3) == 1.0);
  CHECK(dm.x.row(2) == Eigen::RowVector4d(1, 0, 0, 0));
  CHECK(dm.weights.isOnes());
  CHECK_THROWS_AS(build_design(std::vector<SampleUnit>{}), Error);
  const auto big = random_design(500, 1, false);
  CHECK(big.x.rows() == 500);
  CHECK(big.x.cols() == 4);
  CHECK(big.weights.isOnes());
}

TEST_CASE("inverse-degree weights", "[glm][weights]") {
  RdsSample s;
  s.units.resize(2);
  s.units[0].reported_degree = 1;
  s.units[1].reported_degree = 2;
  const auto w = rds_weights(s);
  CHECK(w(0) == Catch::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(w(1) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

  s.units.assign(5, SampleUnit{});
  for (auto& u : s.units) u.reported_degree = 7;
  CHECK(rds_weights(s).isOnes(1e-15));

  std::mt19937_64 rng(3);
  s.units.assign(300, SampleUnit{});
  for (auto& u : s.units) u.reported_degree = 1 + rng() % 90;
  CHECK(rds_weights(s).sum() == Catch::Approx(300.0).epsilon(1e-12));

  s.units[4].reported_degree = 0;
  CHECK_THROWS_AS(rds_weights(s), Error);
}

TEST_CASE("analytic derivatives match finite differences", "[glm][derivatives]") {
  const auto plain = random_design(200, 11, false);
  const auto weighted = random_design(200, 12, true);
  const PriorSpec prior;

  SECTION("log-likelihood") {
    check_derivatives([&](const Vector4& b) { return log_likelihood(plain, b); },
                      [&](const Vector4& b) { return loglik_oracle(plain, b); }, 1);
  }
  SECTION("weighted pseudo-log-likelihood") {
    check_derivatives([&](const Vector4& b) { return log_likelihood(weighted, b); },
                      [&](const Vector4& b) { return loglik_oracle(weighted, b); }, 2);
  }
  SECTION("log pseudo-posterior") {
    // Oracle: weighted log-likelihood plus independent Student-t log
    // densities on the centred-predictor coefficients.
    const double total = weighted.weights.sum();
    Vector4 xbar = Vector4::Zero();
    for (int j = 1; j < 4; ++j) xbar(j) = weighted.weights.dot(weighted.x.col(j)) / total;
    auto oracle = [&](const Vector4& b) {
      Vector4 g = b;
      g(0) = b(0) + xbar(1) * b(1) + xbar(2) * b(2) + xbar(3) * b(3);
      double lp = 0;
      for (int j = 0; j < 4; ++j) {
        const double s = j == 0 ? prior.intercept_scale : prior.coefficient_scale;
        const double nu = prior.df;
        lp += std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI) - std::log(s) -
              (nu + 1) / 2 * std::log1p(g(j) * g(j) / (nu * s * s));
      }
      return loglik_oracle(weighted, b) + lp;
    };
    // The library value may drop prior constants; compare derivatives and
    // value differences.
    const Vector4 ref(0.1, -0.2, 0.3, 0.05);
    const double offset = log_pseudo_posterior(weighted, prior, ref).value - oracle(ref);
    check_derivatives([&](const Vector4& b) { return log_pseudo_posterior(weighted, prior, b); },
                      [&](const Vector4& b) { return oracle(b) + offset; }, 3);
  }
}

TEST_CASE("saturated model reproduces closed-form log-odds contrasts", "[glm][mle]") {
  SECTION("reference table") {
    const int cells[2][2][2] = {{{20, 100}, {20, 100}}, {{40, 100}, {30, 100}}};
    const auto fit = fit_mle(build_design(testkit::table_units(cells)));
    REQUIRE(fit.converged);
    CHECK(fit.beta(0) == Catch::Approx(logit(0.20)).margin(1e-6));
    CHECK(fit.beta(1) == Catch::Approx(logit(0.40) - logit(0.20)).margin(1e-6));
    CHECK(fit.beta(2) == Catch::Approx(0.0).margin(1e-6));
    CHECK(fit.beta(3) == Catch::Approx(logit(0.30) - logit(0.40) - logit(0.20) + logit(0.20)).margin(1e-6));
  }
  SECTION("random tables without zero cells") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
      int cells[2][2][2];
      double p[2][2];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const int tot = 20 + rng() % 200;
          const int pos = 1 + rng() % (tot - 1);
          cells[a][b][0] = pos;
          cells[a][b][1] = tot;
          p[a][b] = double(pos) / tot;
        }
      const auto fit = fit_mle(build_design(testkit::table_units(cells)));
      REQUIRE(fit.converged);
      CHECK(fit.beta(0) == Catch::Approx(logit(p[0][0])).margin(1e-6));
      CHECK(fit.beta(1) == Catch::Approx(logit(p[1][0]) - logit(p[0][0])).margin(1e-6));
      CHECK(fit.beta(2) == Catch::Approx(logit(p[0][1]) - logit(p[0][0])).margin(1e-6));
      CHECK(fit.beta(3) ==
            Catch::Approx(logit(p[1][1]) - logit(p[1][0]) - logit(p[0][1]) + logit(p[0][0])).margin(1e-6));
    }
  }
}

TEST_CASE("2x2 odds ratio and Woolf standard error", "[glm][mle]") {
  const auto fit = fit_mle(two_by_two(40, 60, 20, 80));
  REQUIRE(fit.converged);
  CHECK(fit.or_point[0] == Catch::Approx(40.0 * 80.0 / (60.0 * 20.0)).epsilon(1e-8));
  CHECK(fit.or_point[0] == Catch::Approx(2.667).margin(0.0005));
  const double woolf = std::sqrt(1.0 / 40 + 1.0 / 60 + 1.0 / 20 + 1.0 / 80);
  CHECK(fit.se()(1) == Catch::Approx(woolf).epsilon(1e-8));
  CHECK(woolf == Catch::Approx(0.32275).margin(0.00005));
  CHECK(fit.or_lo[0] == Catch::Approx(std::exp(fit.beta(1) - kZ95 * woolf)).epsilon(1e-8));
  CHECK(fit.or_hi[0] == Catch::Approx(std::exp(fit.beta(1) + kZ95 * woolf)).epsilon(1e-8));
}

TEST_CASE("complete separation is flagged", "[glm][mle]") {
  std::vector<SampleUnit> units(200);
  for (int i = 0; i < 200; ++i) {
    units[i].e1 = i % 2;
    units[i].e2 = (i / 2) % 2;
    units[i].outcome = units[i].e1;
  }
  const auto fit = fit_mle(build_design(units));
  CHECK_FALSE(fit.usable());
  CHECK((fit.diagnostics.separation_suspected || !fit.converged));
  CHECK(fit.flags().find("separation") != std::string::npos);
}

TEST_CASE("rank-deficient designs are rejected", "[glm][mle]") {
  std::vector<SampleUnit> units(50);
  for (int i = 0; i < 50; ++i) {
    units[i].e1 = i % 2;
    units[i].outcome = i % 3 == 0;
  }
  try {
    fit_mle(build_design(units));
    FAIL("expected rank_deficient");
  } catch (const Error& e) {
    CHECK(e.code() == "rank_deficient");
  }
  CHECK_THROWS_AS(fit_weighted(build_design(units)), Error);
  auto dm = random_design(50, 1, true);
  CHECK_THROWS_AS(fit_mle(dm), Error);  // non-unit weights
}

TEST_CASE("weighted fit reductions", "[glm][weighted]") {
  const auto plain = random_design(400, 21, false);
  const auto mle = fit_mle(plain);
  const auto w = fit_weighted(plain);
  REQUIRE(w.converged);
  CHECK((w.beta - mle.beta).cwiseAbs().maxCoeff() < 1e-8);

  // Doubling a row's weight equals duplicating the row.
  auto weighted = plain;
  std::vector<Eigen::Index> doubled;
  for (Eigen::Index i = 0; i < plain.rows(); i += 3) doubled.push_back(i);
  for (auto i : doubled) weighted.weights(i) = 2.0;
  DesignMatrix dup;
  dup.x.resize(plain.rows() + Eigen::Index(doubled.size()), 4);
  dup.y.resize(dup.x.rows());
  dup.weights = Eigen::VectorXd::Ones(dup.x.rows());
  dup.x.topRows(plain.rows()) = plain.x;
  dup.y.head(plain.rows()) = plain.y;
  for (std::size_t k = 0; k < doubled.size(); ++k) {
    dup.x.row(plain.rows() + k) = plain.x.row(doubled[k]);
    dup.y(plain.rows() + k) = plain.y(doubled[k]);
  }
  CHECK((fit_weighted(weighted).beta - fit_weighted(dup).beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("weighted fit matches a derivative-free optimizer", "[glm][weighted]") {
  SECTION("2x2 table with weight 2 on E1-positive rows") {
    auto dm = two_by_two(40, 60, 20, 80);
    for (Eigen::Index i = 0; i < dm.rows(); ++i) dm.weights(i) = dm.x(i, 1) == 1.0 ? 2.0 : 1.0;
    const auto fit = fit_weighted(dm);
    const auto best = testkit::nelder_mead(
        [&](const std::vector<double>& b) { return -loglik_oracle(dm, Vector4(b[0], b[1], b[2], b[3])); },
        {0, 0, 0, 0});
    for (int j = 0; j < 4; ++j) CHECK(fit.beta(j) == Catch::Approx(best[j]).margin(1e-6));
  }
  SECTION("inverse-degree weights on simulated data") {
    const auto dm = random_design(300, 31, true);
    const auto fit = fit_weighted(dm);
    const auto best = testkit::nelder_mead(
        [&](const std::vector<double>& b) { return -loglik_oracle(dm, Vector4(b[0], b[1], b[2], b[3])); },
        {0, 0, 0, 0});
    for (int j = 0; j < 4; ++j) CHECK(fit.beta(j) == Catch::Approx(best[j]).margin(1e-6));
  }
}

TEST_CASE("sandwich and model-based errors agree with equal weights", "[glm][weighted]") {
  const auto dm = random_design(500, 41, false);
  const auto mle = fit_mle(dm);
  const auto w = fit_weighted(dm);
  for (int j = 0; j < 4; ++j) {
    const double ratio = w.se()(j) / mle.se()(j);
    CHECK(ratio > 0.8);
    CHECK(ratio < 1.2);
  }
  // Independent sandwich: A = X' W V X, B = sum (w_i (y_i - p_i))^2 x_i x_i'.
  const auto wd = random_design(500, 42, true);
  const auto fit = fit_weighted(wd);
  Matrix4 a = Matrix4::Zero(), b = Matrix4::Zero();
  for (Eigen::Index i = 0; i < wd.rows(); ++i) {
    const Vector4 x = wd.x.row(i).transpose();
    const double p = testkit::expit(x.dot(fit.beta));
    a += wd.weights(i) * p * (1 - p) * x * x.transpose();
    const double r = wd.weights(i) * (wd.y(i) - p);
    b += r * r * x * x.transpose();
  }
  const Matrix4 ainv = a.inverse();
  CHECK(max_rel(fit.cov, ainv * b * ainv) < 1e-6);
}

TEST_CASE("Bayes mode reduces to the weighted fit under a flat prior", "[glm][bayes]") {
  PriorSpec flat;
  flat.coefficient_scale = 1e6;
  flat.intercept_scale = 1e6;
  const auto dm = random_design(400, 51, true);
  const auto b = fit_bayes(dm, flat);
  const auto w = fit_weighted(dm);
  REQUIRE(b.converged);
  CHECK((b.beta - w.beta).cwiseAbs().maxCoeff() < 1e-4);
  const auto plain = random_design(400, 52, false);
  CHECK((fit_bayes(plain, flat).beta - fit_mle(plain).beta).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("Bayes mode is the stationary point of the pseudo-posterior", "[glm][bayes]") {
  const auto dm = random_design(150, 61, true);
  const PriorSpec prior;
  const auto fit = fit_bayes(dm, prior);
  REQUIRE(fit.converged);
  const auto e = log_pseudo_posterior(dm, prior, fit.beta);
  CHECK(e.gradient.cwiseAbs().maxCoeff() < 1e-5);
  // Laplace covariance is the inverse negative Hessian at the mode.
  CHECK(max_rel(fit.cov, (-e.hessian).inverse()) < 1e-8);
}

TEST_CASE("Bayes regularizes complete separation", "[glm][bayes]") {
  std::vector<SampleUnit> units(200);
  for (int i = 0; i < 200; ++i) {
    units[i].e1 = i % 2;
    units[i].e2 = (i / 2) % 2;
    units[i].outcome = units[i].e1;
  }
  const auto dm = build_design(units);
  const PriorSpec prior;
  const auto fit = fit_bayes(dm, prior);
  REQUIRE(fit.beta.allFinite());
  CHECK(std::abs(fit.beta(1)) < 15.0);
  CHECK(fit.beta(1) > 0);
  SamplerOptions so;
  so.seed = 5;
  const auto post = sample_pseudo_posterior(dm, prior, so);
  // With a Cauchy prior and a flat likelihood tail the posterior mean does
  // not exist and most mass sits past the mode. The draws still agree on
  // the sign and stay finite.
  CHECK(post.q025(1) > 0);
  CHECK(std::isfinite(post.q975(1)));
  CHECK(fit.beta(1) < post.q975(1));
}

TEST_CASE("default prior shrinks the 2x2 log odds ratio", "[glm][bayes]") {
  const auto dm = two_by_two(40, 60, 20, 80);
  const auto mle = fit_mle(dm);
  const PriorSpec prior;
  const auto fit = fit_bayes(dm, prior);
  REQUIRE(fit.converged);
  CHECK(mle.beta(1) == Catch::Approx(std::log(40.0 * 80 / (60.0 * 20))).epsilon(1e-8));
  CHECK(fit.beta(1) > 0.0);
  CHECK(fit.beta(1) < mle.beta(1));
  // The sampler agrees on the shrinkage direction and roughly on location.
  SamplerOptions so;
  so.seed = 17;
  const auto post = sample_pseudo_posterior(dm, prior, so);
  CHECK(post.mean(1) > 0.0);
  CHECK(post.mean(1) < mle.beta(1) + 0.05);
  CHECK(std::abs(post.mean(1) - fit.beta(1)) < 0.1);
  CHECK(post.acceptance_rate > 0.1);
  CHECK(post.acceptance_rate < 0.7);
}

TEST_CASE("fits are invariant to row order", "[glm]") {
  const auto dm = random_design(250, 71, true);
  std::vector<Eigen::Index> perm(dm.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(2);
  std::shuffle(perm.begin(), perm.end(), rng);
  DesignMatrix p = dm;
  for (Eigen::Index i = 0; i < dm.rows(); ++i) {
    p.x.row(i) = dm.x.row(perm[i]);
    p.y(i) = dm.y(perm[i]);
    p.weights(i) = dm.weights(perm[i]);
  }
  DesignMatrix unit = dm, unit_p = p;
  unit.weights.setOnes();
  unit_p.weights.setOnes();
  CHECK((fit_mle(unit).beta - fit_mle(unit_p).beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit_weighted(dm).beta - fit_weighted(p).beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit_bayes(dm).beta - fit_bayes(p).beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit results satisfy their invariants", "[glm]") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto dm = random_design(250, 100 + s, true);
    for (const auto& fit : {fit_weighted(dm), fit_bayes(dm)}) {
      REQUIRE(fit.converged);
      CHECK((fit.cov - fit.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix4> eig(fit.cov);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      for (int k = 0; k < 3; ++k) {
        CHECK(fit.or_lo[k] > 0.0);
        CHECK(fit.or_lo[k] < fit.or_point[k]);
        CHECK(fit.or_point[k] < fit.or_hi[k]);
        CHECK(fit.or_point[k] == Catch::Approx(std::exp(fit.beta(k + 1))));
      }
    }
  }
}

TEST_CASE("fit CSV export", "[glm][io]") {
  CHECK(fit_csv_header() ==
        "estimator,converged,iterations,beta0,beta1,beta2,beta3,se0,se1,se2,se3,"
        "or1,or1_lo,or1_hi,or2,or2_lo,or2_hi,or3,or3_lo,or3_hi,flags");
  const auto fit = fit_weighted(random_design(200, 3, true));
  const auto row = fit_csv_row(fit);
  CHECK(row.rfind("weighted,1,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 20);
  CHECK(std::string(to_string(Estimator::RdsBayes)) == "bayes");
  CHECK(parse_estimator("unweighted") == Estimator::Unweighted);
  CHECK_THROWS_AS(parse_estimator("ridge"), Error);
}
