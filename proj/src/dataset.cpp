#include "geofactor/dataset.hpp"

#include <cmath>
#include <limits>

#include "geofactor/common.hpp"

namespace geofactor {

void Dataset::validate() const {
  const int nn = n();
  if (nn < 1) throw ValidationError("dataset: no rows");
  if (obs_mask.rows() != y.rows() || obs_mask.cols() != y.cols())
    throw ValidationError("dataset: obs_mask shape differs from y");
  if (coords.rows() != nn || coords.cols() != 2)
    throw ValidationError("dataset: coords must be n x 2");
  if (X.size() > 0 && X.rows() != nn)
    throw ValidationError("dataset: covariate rows differ from y rows");
  for (int j = 0; j < q(); ++j)
    for (int i = 0; i < nn; ++i) {
      const int m = obs_mask(i, j);
      if (m != 0 && m != 1)
        throw ValidationError("dataset: obs_mask entries must be 0/1");
      if (m == 1 && y(i, j) != 0 && y(i, j) != 1)
        throw ValidationError("dataset: observed responses must be 0/1");
    }
  if (min_pairwise_distance(coords) < 1e-9)
    throw ValidationError(
        "dataset: duplicate coordinates (within 1e-9); duplicated locations "
        "make the spatial covariance singular");
  for (int k = 0; k < p(); ++k) {
    const double mu = X.col(k).mean();
    const double sd =
        nn > 1 ? std::sqrt((X.col(k).array() - mu).square().sum() / (nn - 1))
               : 0.0;
    if (std::abs(mu) >= 1e-8 || std::abs(sd - 1.0) >= 1e-8)
      throw ValidationError("dataset: covariate column " +
                            (k < static_cast<int>(covariate_names.size())
                                 ? covariate_names[k]
                                 : std::to_string(k)) +
                            " is not standardized");
  }
}

Standardized standardize_covariates(const Eigen::MatrixXd& raw,
                                    const std::vector<std::string>& names) {
  if (raw.rows() < 2)
    throw ValidationError("standardize: need at least 2 rows");
  Standardized out;
  const int p = static_cast<int>(raw.cols());
  out.mean.resize(p);
  out.sd.resize(p);
  out.X.resizeLike(raw);
  for (int k = 0; k < p; ++k) {
    const double mu = raw.col(k).mean();
    const double sd = std::sqrt((raw.col(k).array() - mu).square().sum() /
                                (raw.rows() - 1));
    if (sd < 1e-12) {
      const std::string name =
          k < static_cast<int>(names.size()) ? names[k] : std::to_string(k);
      throw ValidationError("standardize: column " + name + " is constant");
    }
    out.mean(k) = mu;
    out.sd(k) = sd;
    out.X.col(k) = (raw.col(k).array() - mu) / sd;
  }
  return out;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& raw,
                                      const Eigen::VectorXd& mean,
                                      const Eigen::VectorXd& sd) {
  if (raw.cols() != mean.size() || raw.cols() != sd.size())
    throw ValidationError("standardize: transform size differs from columns");
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (int k = 0; k < raw.cols(); ++k)
    out.col(k) = (raw.col(k).array() - mean(k)) / sd(k);
  return out;
}

double min_pairwise_distance(const Eigen::MatrixXd& coords) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < coords.rows(); ++i)
    for (int j = i + 1; j < coords.rows(); ++j)
      best = std::min(best, (coords.row(i) - coords.row(j)).norm());
  return best;
}

}  // namespace geofactor
