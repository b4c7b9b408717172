#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "rdslab/sampling.hpp"

namespace rdslab {

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

/// Logistic design with columns [intercept, E1, E2, E1*E2].
struct DesignMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, 4> x;
  Eigen::VectorXd y;
  Eigen::VectorXd weights;

  Eigen::Index rows() const { return x.rows(); }
};

enum class Estimator { Unweighted, RdsWeighted, RdsBayes };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

DesignMatrix build_design(const RdsSample& sample);
DesignMatrix build_design(std::span<const SampleUnit> units);

/// Inverse reported degree, normalised to sum to the sample size.
Eigen::VectorXd rds_weights(const RdsSample& sample);

/// Weakly informative prior: independent Student-t (Cauchy for df = 1)
/// on the coefficients of the model with centred predictors.
struct PriorSpec {
  double coefficient_scale = 2.5;
  double intercept_scale = 10.0;
  double df = 1.0;
};

struct FitOptions {
  double tolerance = 1e-8;  // relative deviance change
  int max_iterations = 50;
  double separation_threshold = 10.0;  // max |beta| above which a fit is flagged
};

struct FitDiagnostics {
  bool separation_suspected = false;
  bool curvature_not_pd = false;
  double max_abs_beta = 0.0;
  double deviance = 0.0;
};

/// One estimator applied to one sample. Odds-ratio arrays are indexed
/// 0 = E1, 1 = E2, 2 = interaction.
struct FitResult {
  Estimator estimator = Estimator::Unweighted;
  Vector4 beta = Vector4::Zero();
  Matrix4 cov = Matrix4::Zero();
  std::array<double, 3> or_point{};
  std::array<double, 3> or_lo{};
  std::array<double, 3> or_hi{};
  bool converged = false;
  int iterations = 0;
  FitDiagnostics diagnostics;

  Vector4 se() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

  /// Converged, curvature fine and no separation flag.
  bool usable() const {
    return converged && !diagnostics.separation_suspected && !diagnostics.curvature_not_pd;
  }

  /// Semicolon-joined flag names; empty when none are raised.
  std::string flags() const;
};

inline constexpr double kZ95 = 1.96;

/// Value, gradient and Hessian of an objective at one point.
struct ObjectiveEval {
  double value = 0.0;
  Vector4 gradient = Vector4::Zero();
  Matrix4 hessian = Matrix4::Zero();
};

/// Weighted Bernoulli log-likelihood sum_i w_i [y_i eta_i - log(1 + e^eta_i)].
/// With unit weights this is the ordinary log-likelihood.
ObjectiveEval log_likelihood(const DesignMatrix& dm, const Vector4& beta);

/// Log pseudo-posterior: weighted log-likelihood plus the log prior.
ObjectiveEval log_pseudo_posterior(const DesignMatrix& dm, const PriorSpec& prior,
                                   const Vector4& beta);

/// Unweighted maximum likelihood (weights must all be 1); model-based
/// covariance.
FitResult fit_mle(const DesignMatrix& dm, const FitOptions& options = {});

/// Weighted pseudo-likelihood; sandwich covariance A^-1 B A^-1.
FitResult fit_weighted(const DesignMatrix& dm, const FitOptions& options = {});

/// Pseudo-posterior mode found by EM-style reweighted least squares and
/// polished with Newton steps; Laplace covariance at the mode.
FitResult fit_bayes(const DesignMatrix& dm, const PriorSpec& prior = {},
                    const FitOptions& options = {});

/// Random-walk Metropolis over the pseudo-posterior, kept as an
/// independent check on the Laplace summary.
struct SamplerOptions {
  int draws = 20000;
  int burn_in = 5000;
  double proposal_scale = 2.38 / 2.0;  // 2.38 / sqrt(dim)
  std::uint64_t seed = 1;
};

struct PosteriorSummary {
  Vector4 mean = Vector4::Zero();
  Vector4 sd = Vector4::Zero();
  Vector4 q025 = Vector4::Zero();
  Vector4 q975 = Vector4::Zero();
  double acceptance_rate = 0.0;
};

PosteriorSummary sample_pseudo_posterior(const DesignMatrix& dm, const PriorSpec& prior,
                                         const SamplerOptions& options = {});

/// CSV header and row for the fit export:
/// `estimator,converged,iterations,beta0..beta3,se0..se3,or1,or1_lo,or1_hi,...,flags`.
std::string fit_csv_header();
std::string fit_csv_row(const FitResult& fit);

}  // namespace rdslab
