#include "geofactor/adaptive.hpp"

#include <cmath>
#include <limits>

#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"

namespace geofactor {

double adapt_gamma(double C, double alpha, long iteration) {
  return C / std::pow(static_cast<double>(iteration), alpha);
}

bool mh_accepts(double log_ratio, double u) {
  return std::log(u) < log_ratio;
}

AdaptiveRwm::AdaptiveRwm(int dim, double C, double alpha, double target_accept)
    : dim_(dim), c_(C), alpha_(alpha), target_(target_accept) {
  mean_ = Eigen::VectorXd::Zero(dim);
  // Conventional 0.1^2/d starting scale; adaptation corrects it.
  cov_ = Eigen::MatrixXd::Identity(dim, dim) * (0.01 / std::max(dim, 1));
}

AdaptiveRwm::Step AdaptiveRwm::step(
    const std::function<double(const Eigen::VectorXd&)>& log_target,
    Eigen::VectorXd& x, double& lp, RngStream& rng, bool adapt) {
  ++iter_;
  Step out;

  Eigen::MatrixXd prop = std::exp(log_lambda_) * cov_;
  prop.diagonal().array() += 1e-12 * (1.0 + prop.diagonal().mean());
  const CholResult chol = chol_with_jitter(prop);
  Eigen::VectorXd xi(dim_);
  for (int i = 0; i < dim_; ++i) xi(i) = rng.normal();
  const Eigen::VectorXd y =
      x + Eigen::MatrixXd(chol.llt.matrixL()) * xi;

  const double lp_y = log_target(y);
  double log_ratio = lp_y - lp;
  if (!std::isfinite(lp_y)) log_ratio = -std::numeric_limits<double>::infinity();
  out.accept_prob = std::isfinite(log_ratio)
                        ? std::min(1.0, std::exp(log_ratio))
                        : 0.0;
  const double u = rng.uniform();
  if (mh_accepts(log_ratio, u)) {
    out.accepted = true;
    x = y;
    lp = lp_y;
  }
  accept_sum_ += out.accept_prob;

  if (adapt) {
    const double gamma = adapt_gamma(c_, alpha_, iter_);
    log_lambda_ += gamma * (out.accept_prob - target_);
    const Eigen::VectorXd delta = x - mean_;
    mean_ += gamma * delta;
    cov_ += gamma * (delta * delta.transpose() - cov_);
  }
  return out;
}

}  // namespace geofactor
