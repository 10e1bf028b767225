#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "geofactor/dataset.hpp"
#include "geofactor/model.hpp"
#include "geofactor/rng.hpp"

namespace geofactor {

/// Generating values for the full model, with the discrimination matrix
/// already constraint-resolved.
struct TrueParams {
  Eigen::VectorXd c;    // q
  Eigen::MatrixXd a;    // q x m, resolved A*
  Eigen::MatrixXd b;    // p x m (may be 0 x m)
  Eigen::MatrixXd t;    // m x g
  Eigen::VectorXd phi;  // g
  Eigen::MatrixXd r_v;  // m x m
  Eigen::VectorXd d;    // m residual sds

  int q() const { return static_cast<int>(c.size()); }
  int m() const { return static_cast<int>(a.cols()); }
  int g() const { return static_cast<int>(t.cols()); }
  int p() const { return static_cast<int>(b.rows()); }
};

/// Blank the listed items for a seeded random fraction of rows.
struct MissingPolicy {
  std::vector<int> items;  // 0-based item indices
  double fraction = 0.0;
};

struct SimulationResult {
  Dataset data;
  Eigen::MatrixXd theta;  // n x m true latent factors
  Eigen::MatrixXd z;      // n x q true auxiliary variables
};

/// Draw one dataset from the generative model: psi ~ GP(0, rho), v ~
/// N(0, D R_v D), theta = B'x + T psi + v, z = c + A* theta + eps,
/// y = 1{z > 0}; then apply the missing-data policy. `X` is the already
/// standardized covariate matrix (n x p, possibly empty).
SimulationResult simulate_dataset(const TrueParams& params,
                                  const Eigen::MatrixXd& coords,
                                  const Eigen::MatrixXd& X, RngStream& rng,
                                  const MissingPolicy& missing = {});

/// Draw generating values from the model priors (used by joint-distribution
/// correctness tests). R_v comes from its LKJ prior via independent scaled
/// Beta draws on the canonical partial correlations.
TrueParams draw_params_from_priors(const ModelSpec& spec, int p,
                                   RngStream& rng);

}  // namespace geofactor
