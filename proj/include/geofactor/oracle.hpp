#pragma once

#include <Eigen/Dense>
#include <optional>

#include "geofactor/dataset.hpp"
#include "geofactor/model.hpp"
#include "geofactor/simulate.hpp"

namespace geofactor {

struct OracleMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Exact joint Gaussian of (z, theta, theta_tilde) assembled entrywise from
/// the generative model, for cross-checking covariance assembly, sampler
/// conditionals and kriging on small instances. Deliberately shares nothing
/// with the main covariance-assembly path beyond the correlation kernel.
class JointGaussianOracle {
 public:
  JointGaussianOracle(const TrueParams& params, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& new_coords = {},
                      const Eigen::MatrixXd& new_X = {});

  int n() const { return n_; }
  int n_new() const { return n_new_; }
  int dim_z() const { return n_ * params_.q(); }
  int dim_theta() const { return n_ * params_.m(); }
  int dim_theta_new() const { return n_new_ * params_.m(); }

  /// Moments of the full stacked vector (z, theta, theta_tilde).
  const OracleMoments& joint() const { return joint_; }
  OracleMoments z_moments() const;
  OracleMoments theta_moments() const;
  OracleMoments theta_new_moments() const;

  /// Gaussian conditioning of index block `target` on block `given` pinned
  /// at `value` (blocks: 0 = z, 1 = theta, 2 = theta_tilde).
  OracleMoments conditional(int target, int given,
                            const Eigen::VectorXd& value) const;

 private:
  std::pair<int, int> block_range(int block) const;
  TrueParams params_;
  int n_ = 0;
  int n_new_ = 0;
  OracleMoments joint_;
};

struct QuadratureOptions {
  int grid_points = 201;    // posterior grid over the scalar unknown
  double range_sd = 8.0;    // grid half-width in prior sds
  int gh_nodes = 24;        // Gauss-Hermite nodes per latent dimension
  double refine_tol = 1e-6; // convergence threshold across grid refinement
};

struct QuadratureResult {
  double mean = 0.0;
  double variance = 0.0;
  double refinement_delta = 0.0;  // |mean change| when doubling the grid
};

enum class ScalarUnknown { easiness, discrimination };

/// Posterior moments of one scalar unknown (one easiness or one free
/// discrimination entry, all other parameters pinned at `params`) by
/// quadrature: the marginal likelihood of y integrates the latent factors
/// out with tensor Gauss-Hermite, and the posterior over the unknown is
/// integrated on a refined grid. Requires m = 1 and n <= 4.
QuadratureResult quadrature_posterior_oracle(
    const Dataset& data, const ModelSpec& spec, const TrueParams& params,
    ScalarUnknown kind, int item, int factor, const QuadratureOptions& opt = {});

}  // namespace geofactor
