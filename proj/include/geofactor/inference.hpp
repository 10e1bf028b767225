#pragma once

#include <Eigen/Dense>
#include <vector>

#include "geofactor/dataset.hpp"
#include "geofactor/sampler.hpp"

namespace geofactor {

/// Probit log-likelihood of the observed cells given latent factors and
/// item parameters; probabilities are clamped before the log.
double log_likelihood_y(const Eigen::MatrixXd& theta,  // n x m
                        const Eigen::VectorXd& c,
                        const Eigen::MatrixXd& a_star,  // q x m
                        const Dataset& data);

struct DicReport {
  double mean_deviance = 0.0;     // averaged over stored samples
  double deviance_at_mean = 0.0;  // at posterior means of (theta, c, a)
  double p_d = 0.0;
  double dic = 0.0;
};

/// Deviance information criterion. The saturated Bernoulli likelihood is 1,
/// so the deviance reduces to -2 log p(y | theta, c, a); missing cells are
/// excluded by construction of the likelihood.
DicReport dic(const ChainOutput& chain, const Dataset& data);

struct PredictionResult {
  Eigen::MatrixXd new_coords;  // n_new x 2
  Eigen::MatrixXd draws;       // samples x (m * n_new), factor-major
  Eigen::MatrixXd median;      // n_new x m
  Eigen::MatrixXd q05;         // n_new x m
  Eigen::MatrixXd q95;         // n_new x m
  Eigen::MatrixXd exceed0;     // n_new x m, P(factor > 0)
  int m = 0;

  int n_new() const { return static_cast<int>(new_coords.rows()); }
};

struct PredictOptions {
  bool allow_coincident = false;  // permit prediction at a training point
  std::uint64_t seed = 0;
};

struct KrigingConditional {
  Eigen::VectorXd mean;        // m * n_new
  Eigen::MatrixXd cov;         // conditional covariance
  Eigen::VectorXd prior_mean;  // (I (x) X_new) beta
  Eigen::MatrixXd prior_cov;   // unconditional covariance at new locations
};

/// Conditional Gaussian of theta at new locations given one stored sample's
/// latent factors and covariance parameters.
KrigingConditional kriging_conditional(const ChainOutput& chain, long sample,
                                       const Dataset& data,
                                       const Eigen::MatrixXd& new_coords,
                                       const Eigen::MatrixXd& new_X = {});

/// Kriging-style prediction of the latent factors at new locations: for
/// every stored sample the conditional Gaussian of theta_tilde given theta
/// is assembled from the sample's covariance parameters and one draw is
/// taken. `new_X` must already carry the training standardization.
/// Per the scale convention of the outputs, feed a rescaled chain.
PredictionResult predict_factors(const ChainOutput& chain, const Dataset& data,
                                 const Eigen::MatrixXd& new_coords,
                                 const Eigen::MatrixXd& new_X = {},
                                 const PredictOptions& opt = {});

/// Fraction of posterior draws above `threshold`, per location and factor.
Eigen::MatrixXd exceedance_prob(const PredictionResult& pred,
                                double threshold);

struct Variogram {
  Eigen::VectorXd centers;
  Eigen::VectorXd gamma;       // NaN where a bin holds no pairs
  Eigen::VectorXi pair_count;
  double max_dist = 0.0;
};

/// Empirical semivariogram: half the mean squared difference of values over
/// point pairs, binned by distance on [0, max_dist) with equal-width
/// half-open bins. `max_dist <= 0` defaults to half the maximum pairwise
/// distance.
Variogram empirical_variogram(const Eigen::VectorXd& values,
                              const Eigen::MatrixXd& coords, int n_bins,
                              double max_dist = 0.0);

struct TraceSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
  Eigen::VectorXd autocorr;  // lags 1..k
  double ess = 0.0;
  bool degenerate = false;  // constant trace
};

/// Moments, quantiles, autocorrelations and the initial-positive-sequence
/// effective sample size for one scalar trace.
TraceSummary summarize_trace(const Eigen::VectorXd& draws, int max_lag = 20);

struct NamedSummary {
  std::string name;
  TraceSummary stats;
};

/// Summaries for every stored parameter column of a chain.
std::vector<NamedSummary> trace_summary(const ChainOutput& chain);

/// Quantile with linear interpolation between order statistics.
double quantile(const Eigen::VectorXd& values, double prob);

}  // namespace geofactor
