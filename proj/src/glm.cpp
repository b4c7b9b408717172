#include "rdslab/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "rdslab/error.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Unweighted: return "unweighted";
    case Estimator::RdsWeighted: return "weighted";
    case Estimator::RdsBayes: return "bayes";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "unweighted") return Estimator::Unweighted;
  if (name == "weighted") return Estimator::RdsWeighted;
  if (name == "bayes") return Estimator::RdsBayes;
  throw invalid_argument(fmt::format("unknown estimator '{}'", name));
}

DesignMatrix build_design(std::span<const SampleUnit> units) {
  if (units.empty()) throw invalid_argument("cannot build a design from an empty sample");
  const auto n = static_cast<Eigen::Index>(units.size());
  DesignMatrix dm;
  dm.x.resize(n, 4);
  dm.y.resize(n);
  dm.weights = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SampleUnit& u = units[static_cast<std::size_t>(i)];
    const double e1 = u.e1 ? 1.0 : 0.0;
    const double e2 = u.e2 ? 1.0 : 0.0;
    dm.x.row(i) << 1.0, e1, e2, e1 * e2;
    dm.y(i) = u.outcome ? 1.0 : 0.0;
  }
  return dm;
}

DesignMatrix build_design(const RdsSample& sample) { return build_design(sample.units); }

Eigen::VectorXd rds_weights(const RdsSample& sample) {
  const auto n = static_cast<Eigen::Index>(sample.units.size());
  if (n == 0) throw invalid_argument("cannot weight an empty sample");
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto d = sample.units[static_cast<std::size_t>(i)].reported_degree;
    if (d < 1) throw invalid_argument(fmt::format("unit {} has reported degree {} < 1", i, d));
    w(i) = 1.0 / d;
  }
  return w * (static_cast<double>(n) / w.sum());
}

std::string FitResult::flags() const {
  std::string out;
  auto add = [&](std::string_view f) {
    if (!out.empty()) out += ';';
    out += f;
  };
  if (!converged) add("nonconverged");
  if (diagnostics.separation_suspected) add("separation");
  if (diagnostics.curvature_not_pd) add("curvature");
  return out;
}

namespace {

double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void check_design(const DesignMatrix& dm) {
  if (dm.rows() < 4) throw invalid_argument(fmt::format("design has {} rows, need at least 4", dm.rows()));
  if (dm.y.size() != dm.rows() || dm.weights.size() != dm.rows()) {
    throw invalid_argument("design, response and weights differ in length");
  }
  if ((dm.weights.array() <= 0.0).any() || !dm.weights.allFinite()) {
    throw invalid_argument("weights must be finite and positive");
  }
}

void check_rank(const DesignMatrix& dm) {
  const Matrix4 gram = dm.x.transpose() * dm.weights.asDiagonal() * dm.x;
  Eigen::SelfAdjointEigenSolver<Matrix4> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (!(ev(0) > 1e-10 * ev(3))) {
    throw Error("rank_deficient",
                "design matrix is rank deficient (a covariate or cell is absent from the sample)");
  }
}

// Maps beta to the coefficients of the model with centred predictors:
// gamma = T beta, intercept row [1, xbar1, xbar2, xbar3].
Matrix4 centring_map(const DesignMatrix& dm) {
  const double total = dm.weights.sum();
  Matrix4 t = Matrix4::Identity();
  for (int j = 1; j < 4; ++j) t(0, j) = dm.weights.dot(dm.x.col(j)) / total;
  return t;
}

Vector4 prior_scales(const PriorSpec& prior) {
  return Vector4(prior.intercept_scale, prior.coefficient_scale, prior.coefficient_scale,
                 prior.coefficient_scale);
}

void check_prior(const PriorSpec& prior) {
  if (!(prior.coefficient_scale > 0.0 && prior.intercept_scale > 0.0 && prior.df > 0.0)) {
    throw invalid_argument("prior scales and degrees of freedom must be positive");
  }
}

Vector4 initial_beta(const DesignMatrix& dm) {
  const double ybar = std::clamp(dm.weights.dot(dm.y) / dm.weights.sum(), 1e-3, 1.0 - 1e-3);
  Vector4 beta = Vector4::Zero();
  beta(0) = std::log(ybar / (1.0 - ybar));
  return beta;
}

bool inverse_pd(const Matrix4& m, Matrix4& inverse) {
  Eigen::LLT<Matrix4> llt(m);
  if (llt.info() != Eigen::Success) return false;
  inverse = llt.solve(Matrix4::Identity());
  return inverse.allFinite();
}

void finish(FitResult& fit, const FitOptions& options) {
  fit.diagnostics.max_abs_beta = fit.beta.cwiseAbs().maxCoeff();
  fit.diagnostics.separation_suspected =
      !fit.converged || !(fit.diagnostics.max_abs_beta <= options.separation_threshold);
  const Vector4 se = fit.se();
  for (int k = 1; k < 4; ++k) {
    fit.or_point[k - 1] = std::exp(fit.beta(k));
    fit.or_lo[k - 1] = std::exp(fit.beta(k) - kZ95 * se(k));
    fit.or_hi[k - 1] = std::exp(fit.beta(k) + kZ95 * se(k));
  }
}

// Newton-Raphson (equivalently IRLS) on the weighted log-likelihood with
// step halving whenever the deviance would increase.
FitResult maximize_likelihood(const DesignMatrix& dm, const FitOptions& options,
                              Estimator estimator) {
  FitResult fit;
  fit.estimator = estimator;
  Vector4 beta = initial_beta(dm);
  ObjectiveEval ev = log_likelihood(dm, beta);
  double deviance = -2.0 * ev.value;

  for (int it = 1; it <= options.max_iterations; ++it) {
    const Matrix4 info = -ev.hessian;
    const Vector4 step = info.ldlt().solve(ev.gradient);
    if (!step.allFinite()) break;

    double t = 1.0;
    Vector4 candidate;
    ObjectiveEval cand_ev;
    double cand_dev = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
      candidate = beta + t * step;
      cand_ev = log_likelihood(dm, candidate);
      cand_dev = -2.0 * cand_ev.value;
      if (std::isfinite(cand_dev) && cand_dev <= deviance + 1e-12 * (std::abs(deviance) + 1.0)) {
        accepted = true;
        break;
      }
    }
    fit.iterations = it;
    if (!accepted) break;

    const double change = std::abs(deviance - cand_dev) / (std::abs(cand_dev) + 0.1);
    beta = candidate;
    ev = cand_ev;
    deviance = cand_dev;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (fit.converged) {
    // The deviance test stops while beta can still be ~1e-6 off; one more
    // Newton step squares that error.
    const Vector4 polished = beta + (-ev.hessian).ldlt().solve(ev.gradient);
    if (polished.allFinite()) {
      const ObjectiveEval pe = log_likelihood(dm, polished);
      if (std::isfinite(pe.value) && -2.0 * pe.value <= deviance + 1e-12 * (std::abs(deviance) + 1.0)) {
        beta = polished;
        ev = pe;
        deviance = -2.0 * pe.value;
      }
    }
  }
  fit.beta = beta;
  fit.diagnostics.deviance = deviance;

  Matrix4 a_inv;
  if (!inverse_pd(-ev.hessian, a_inv)) {
    fit.diagnostics.curvature_not_pd = true;
    fit.cov = Matrix4::Constant(std::numeric_limits<double>::quiet_NaN());
  } else if (estimator == Estimator::Unweighted) {
    fit.cov = a_inv;
  } else {
    // Sandwich: B = sum_i w_i^2 s_i s_i^T with per-unit score s_i = (y_i - p_i) x_i.
    const Eigen::VectorXd eta = dm.x * beta;
    Eigen::VectorXd r(dm.rows());
    for (Eigen::Index i = 0; i < dm.rows(); ++i) {
      r(i) = dm.weights(i) * (dm.y(i) - sigmoid(eta(i)));
    }
    const Eigen::Matrix<double, Eigen::Dynamic, 4> scores = dm.x.array().colwise() * r.array();
    const Matrix4 meat = scores.transpose() * scores;
    fit.cov = a_inv * meat * a_inv;
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
  }
  finish(fit, options);
  return fit;
}

}  // namespace

ObjectiveEval log_likelihood(const DesignMatrix& dm, const Vector4& beta) {
  ObjectiveEval ev;
  const Eigen::VectorXd eta = dm.x * beta;
  Eigen::VectorXd resid(dm.rows()), curvature(dm.rows());
  for (Eigen::Index i = 0; i < dm.rows(); ++i) {
    const double p = sigmoid(eta(i));
    const double w = dm.weights(i);
    ev.value += w * (dm.y(i) * eta(i) - softplus(eta(i)));
    resid(i) = w * (dm.y(i) - p);
    curvature(i) = w * p * (1.0 - p);
  }
  ev.gradient = dm.x.transpose() * resid;
  ev.hessian = -(dm.x.transpose() * curvature.asDiagonal() * dm.x);
  return ev;
}

ObjectiveEval log_pseudo_posterior(const DesignMatrix& dm, const PriorSpec& prior,
                                   const Vector4& beta) {
  ObjectiveEval ev = log_likelihood(dm, beta);
  const Matrix4 t = centring_map(dm);
  const Vector4 gamma = t * beta;
  const Vector4 s = prior_scales(prior);
  const double nu = prior.df;
  const double norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * std::acos(-1.0));
  Vector4 grad_gamma;
  Vector4 hess_gamma;
  for (int k = 0; k < 4; ++k) {
    const double g = gamma(k);
    const double denom = nu * s(k) * s(k) + g * g;
    ev.value += norm - std::log(s(k)) - 0.5 * (nu + 1.0) * std::log1p(g * g / (nu * s(k) * s(k)));
    grad_gamma(k) = -(nu + 1.0) * g / denom;
    hess_gamma(k) = -(nu + 1.0) * (nu * s(k) * s(k) - g * g) / (denom * denom);
  }
  ev.gradient += t.transpose() * grad_gamma;
  ev.hessian += t.transpose() * hess_gamma.asDiagonal() * t;
  return ev;
}

FitResult fit_mle(const DesignMatrix& dm, const FitOptions& options) {
  check_design(dm);
  if (!(dm.weights.array() == 1.0).all()) {
    throw invalid_argument("unweighted fit requires unit weights");
  }
  check_rank(dm);
  return maximize_likelihood(dm, options, Estimator::Unweighted);
}

FitResult fit_weighted(const DesignMatrix& dm, const FitOptions& options) {
  check_design(dm);
  check_rank(dm);
  return maximize_likelihood(dm, options, Estimator::RdsWeighted);
}

FitResult fit_bayes(const DesignMatrix& dm, const PriorSpec& prior, const FitOptions& options) {
  check_design(dm);
  check_prior(prior);
  FitResult fit;
  fit.estimator = Estimator::RdsBayes;

  const Matrix4 t = centring_map(dm);
  const Vector4 s = prior_scales(prior);
  const double nu = prior.df;
  Vector4 beta = initial_beta(dm);

  // EM over the normal scale-mixture form of the t prior: the E-step gives
  // prior precisions (nu + 1) / (nu s^2 + gamma^2); the M-step is one
  // penalised IRLS step. Its fixed point is the pseudo-posterior mode.
  const int em_limit = 4 * options.max_iterations;
  int iterations = 0;
  for (; iterations < em_limit; ++iterations) {
    const ObjectiveEval ev = log_likelihood(dm, beta);
    const Vector4 gamma = t * beta;
    Vector4 precision;
    for (int k = 0; k < 4; ++k) precision(k) = (nu + 1.0) / (nu * s(k) * s(k) + gamma(k) * gamma(k));
    const Matrix4 penalty = t.transpose() * precision.asDiagonal() * t;
    const Matrix4 a = -ev.hessian;
    const Vector4 next = (a + penalty).ldlt().solve(a * beta + ev.gradient);
    if (!next.allFinite()) break;
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < 1e-10 * (1.0 + beta.cwiseAbs().maxCoeff())) {
      ++iterations;
      break;
    }
  }

  // Newton polish on the exact log pseudo-posterior.
  ObjectiveEval ev = log_pseudo_posterior(dm, prior, beta);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (ev.gradient.cwiseAbs().maxCoeff() < 1e-10) break;
    Eigen::LLT<Matrix4> llt(-ev.hessian);
    if (llt.info() != Eigen::Success) break;
    const Vector4 step = llt.solve(ev.gradient);
    double step_len = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, step_len *= 0.5) {
      const Vector4 candidate = beta + step_len * step;
      const ObjectiveEval cand = log_pseudo_posterior(dm, prior, candidate);
      if (std::isfinite(cand.value) && cand.value >= ev.value - 1e-12 * (std::abs(ev.value) + 1.0)) {
        beta = candidate;
        ev = cand;
        accepted = true;
        break;
      }
    }
    ++iterations;
    if (!accepted) break;
  }

  fit.beta = beta;
  fit.iterations = iterations;
  fit.diagnostics.deviance = -2.0 * log_likelihood(dm, beta).value;
  const double scale = 1.0 + dm.weights.sum();
  fit.converged = beta.allFinite() && ev.gradient.cwiseAbs().maxCoeff() < 1e-6 * scale;

  Matrix4 cov;
  if (inverse_pd(-ev.hessian, cov)) {
    fit.cov = 0.5 * (cov + cov.transpose());
  } else {
    fit.diagnostics.curvature_not_pd = true;
    fit.cov = Matrix4::Constant(std::numeric_limits<double>::quiet_NaN());
  }
  finish(fit, options);
  return fit;
}

PosteriorSummary sample_pseudo_posterior(const DesignMatrix& dm, const PriorSpec& prior,
                                         const SamplerOptions& options) {
  if (options.draws < 1 || options.burn_in < 0) throw invalid_argument("sampler needs draws >= 1");
  const FitResult mode = fit_bayes(dm, prior);
  Matrix4 proposal = Matrix4::Identity() * 0.01;
  if (!mode.diagnostics.curvature_not_pd) {
    proposal = mode.cov * (options.proposal_scale * options.proposal_scale);
  }
  Eigen::LLT<Matrix4> llt(proposal);
  const Matrix4 chol = llt.matrixL();

  Rng rng = make_rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto log_target = [&](const Vector4& b) { return log_pseudo_posterior(dm, prior, b).value; };
  Vector4 current = mode.beta;
  double current_lp = log_target(current);
  std::vector<Vector4> kept;
  kept.reserve(static_cast<std::size_t>(options.draws));
  long accepted = 0;
  const int total = options.burn_in + options.draws;
  for (int i = 0; i < total; ++i) {
    Vector4 z;
    for (int k = 0; k < 4; ++k) z(k) = normal(rng);
    const Vector4 proposal_beta = current + chol * z;
    const double lp = log_target(proposal_beta);
    if (std::log(unif(rng)) < lp - current_lp) {
      current = proposal_beta;
      current_lp = lp;
      if (i >= options.burn_in) ++accepted;
    }
    if (i >= options.burn_in) kept.push_back(current);
  }

  PosteriorSummary out;
  out.acceptance_rate = static_cast<double>(accepted) / options.draws;
  std::vector<double> column(kept.size());
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < kept.size(); ++i) column[i] = kept[i](k);
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / column.size();
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    std::sort(column.begin(), column.end());
    auto quantile = [&](double q) {
      const double h = q * (column.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, column.size() - 1);
      return column[lo] + (h - lo) * (column[hi] - column[lo]);
    };
    out.mean(k) = mean;
    out.sd(k) = std::sqrt(ss / std::max<std::size_t>(1, column.size() - 1));
    out.q025(k) = quantile(0.025);
    out.q975(k) = quantile(0.975);
  }
  return out;
}

std::string fit_csv_header() {
  return "estimator,converged,iterations,beta0,beta1,beta2,beta3,se0,se1,se2,se3,"
         "or1,or1_lo,or1_hi,or2,or2_lo,or2_hi,or3,or3_lo,or3_hi,flags";
}

std::string fit_csv_row(const FitResult& fit) {
  const Vector4 se = fit.se();
  std::string row = fmt::format("{},{},{}", to_string(fit.estimator), int(fit.converged), fit.iterations);
  for (int k = 0; k < 4; ++k) row += fmt::format(",{:.17g}", fit.beta(k));
  for (int k = 0; k < 4; ++k) row += fmt::format(",{:.17g}", se(k));
  for (int k = 0; k < 3; ++k) {
    row += fmt::format(",{:.17g},{:.17g},{:.17g}", fit.or_point[k], fit.or_lo[k], fit.or_hi[k]);
  }
  row += ',';
  row += fit.flags();
  return row;
}

}  // namespace rdslab
