#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace geofactor {

/// Binary geo-referenced survey data.
///
/// `y` holds 0/1 responses; cells with `obs_mask == 0` are missing and the
/// corresponding `y` entry is ignored. Coordinates are planar (distance
/// units are coordinate units). Covariate columns are standardized; the
/// centering/scaling used is kept so the same transform can be applied at
/// prediction locations.
struct Dataset {
  Eigen::MatrixXi y;         // n x q
  Eigen::MatrixXi obs_mask;  // n x q, 1 = observed
  Eigen::MatrixXd coords;    // n x 2
  Eigen::MatrixXd X;         // n x p, standardized
  Eigen::VectorXd x_mean;    // p, transform used to standardize X
  Eigen::VectorXd x_sd;      // p
  std::vector<std::string> item_names;
  std::vector<std::string> covariate_names;

  int n() const { return static_cast<int>(y.rows()); }
  int q() const { return static_cast<int>(y.cols()); }
  int p() const { return static_cast<int>(X.cols()); }

  /// Enforces construction invariants; throws ValidationError.
  void validate() const;
};

struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // n-1 denominator
};

/// Center and scale each column to unit sample sd (n-1 denominator).
/// Throws ValidationError on a constant column, naming it.
Standardized standardize_covariates(
    const Eigen::MatrixXd& raw,
    const std::vector<std::string>& names = {});

/// Apply a stored transform to covariates at new locations.
Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& raw,
                                      const Eigen::VectorXd& mean,
                                      const Eigen::VectorXd& sd);

/// Smallest pairwise distance between rows, +inf for fewer than two rows.
double min_pairwise_distance(const Eigen::MatrixXd& coords);

}  // namespace geofactor
