#pragma once

#include <Eigen/Dense>
#include <functional>

#include "geofactor/rng.hpp"

namespace geofactor {

/// Deterministic adaptation step sizes gamma_i = C / i^alpha.
double adapt_gamma(double C, double alpha, long iteration);

/// MH decision for a log acceptance ratio and a uniform draw; a zero step
/// (ratio 1) is always accepted.
bool mh_accepts(double log_ratio, double u);

/// Adaptive random-walk Metropolis with a globally scaled empirical
/// proposal covariance (Andrieu & Thoms 2008, algorithm 4): after each
/// proposal the log scale moves toward the target acceptance probability
/// and the covariance estimate absorbs the new state, both damped by
/// gamma_i = C / i^alpha.
class AdaptiveRwm {
 public:
  AdaptiveRwm(int dim, double C, double alpha, double target_accept);

  struct Step {
    bool accepted = false;
    double accept_prob = 0.0;
  };

  /// One proposal/accept/adapt cycle. `log_target` must return -inf to veto
  /// a proposal (e.g. on numerical failure). `x` and `lp` are updated in
  /// place on acceptance. Adaptation is skipped when `adapt` is false, but
  /// the iteration counter still advances.
  Step step(const std::function<double(const Eigen::VectorXd&)>& log_target,
            Eigen::VectorXd& x, double& lp, RngStream& rng, bool adapt);

  long iteration() const { return iter_; }
  double log_scale() const { return log_lambda_; }
  const Eigen::MatrixXd& proposal_cov() const { return cov_; }
  double mean_accept_prob() const {
    return iter_ > 0 ? accept_sum_ / static_cast<double>(iter_) : 0.0;
  }

 private:
  int dim_;
  double c_, alpha_, target_;
  double log_lambda_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  long iter_ = 0;
  double accept_sum_ = 0.0;
};

}  // namespace geofactor
