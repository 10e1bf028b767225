#pragma once

#include <Eigen/Dense>
#include <vector>

#include "geofactor/dataset.hpp"
#include "geofactor/model.hpp"
#include "geofactor/rng.hpp"
#include "geofactor/simulate.hpp"

namespace testutil {

inline Eigen::MatrixXd grid_coords(int n, geofactor::RngStream& rng,
                                   double scale = 1.0) {
  Eigen::MatrixXd coords(n, 2);
  for (int i = 0; i < n; ++i) {
    coords(i, 0) = scale * rng.uniform();
    coords(i, 1) = scale * rng.uniform();
  }
  return coords;
}

// Confirmatory simple structure: item j loads on factor j % m, first item
// of each factor carries a positive sign constraint.
inline geofactor::ModelSpec simple_spec(int q, int m, int g_cols = -1) {
  geofactor::ModelSpec spec;
  spec.m = m;
  for (int j = 0; j < q; ++j) {
    geofactor::ItemConstraint con;
    con.fixed = Eigen::VectorXd::Zero(m);
    con.active = Eigen::VectorXi::Zero(m);
    con.signs.assign(m, geofactor::Sign::free);
    const int k = j % m;
    con.active(k) = 1;
    if (j < m) con.signs[k] = geofactor::Sign::positive;
    spec.constraints.push_back(con);
  }
  const int g = g_cols < 0 ? m : g_cols;
  spec.loading_pattern = Eigen::MatrixXi::Zero(m, g);
  for (int k = 0; k < g; ++k) spec.loading_pattern(k, k) = 1;
  spec.residual_sd = Eigen::VectorXd::Ones(m);
  spec.priors = geofactor::default_priors(spec, 0);
  return spec;
}

inline geofactor::Dataset tiny_dataset(int n, int q, geofactor::RngStream& rng) {
  geofactor::Dataset d;
  d.y = Eigen::MatrixXi::Zero(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) d.y(i, j) = rng.uniform() < 0.5 ? 1 : 0;
  d.obs_mask = Eigen::MatrixXi::Ones(n, q);
  d.coords = grid_coords(n, rng);
  d.X.resize(n, 0);
  d.x_mean.resize(0);
  d.x_sd.resize(0);
  for (int j = 0; j < q; ++j)
    d.item_names.push_back("item_" + std::to_string(j + 1));
  return d;
}

}  // namespace testutil
