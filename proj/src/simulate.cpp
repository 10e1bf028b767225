#include "geofactor/simulate.hpp"

#include <cmath>
#include <string>

#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"

namespace geofactor {

SimulationResult simulate_dataset(const TrueParams& params,
                                  const Eigen::MatrixXd& coords,
                                  const Eigen::MatrixXd& X, RngStream& rng,
                                  const MissingPolicy& missing) {
  const int n = static_cast<int>(coords.rows());
  const int q = params.q();
  const int m = params.m();
  const int g = params.g();
  if (params.a.rows() != q) throw ValidationError("simulate: A* rows != q");
  if (params.t.rows() != m) throw ValidationError("simulate: T rows != m");
  if (params.p() > 0 && X.rows() != n)
    throw ValidationError("simulate: covariate rows != n");

  SimulationResult out;
  out.theta.resize(n, m);

  // Latent factors: covariate trend + loaded Gaussian processes + nugget.
  if (params.p() > 0)
    out.theta = X * params.b;
  else
    out.theta.setZero();

  Eigen::MatrixXd psi(n, g);
  for (int k = 0; k < g; ++k) {
    const CholResult chol = chol_with_jitter(gp_cov_matrix(coords, params.phi(k)));
    Eigen::VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi(i) = rng.normal();
    psi.col(k) = Eigen::MatrixXd(chol.llt.matrixL()) * xi;
  }
  if (g > 0) out.theta += psi * params.t.transpose();

  const Eigen::MatrixXd sigma_v =
      params.d.asDiagonal() * params.r_v * params.d.asDiagonal();
  const CholResult chol_v = chol_with_jitter(sigma_v);
  const Eigen::MatrixXd lv = chol_v.llt.matrixL();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xi(m);
    for (int k = 0; k < m; ++k) xi(k) = rng.normal();
    out.theta.row(i) += (lv * xi).transpose();
  }

  out.z.resize(n, q);
  out.data.y.resize(n, q);
  out.data.obs_mask = Eigen::MatrixXi::Ones(n, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n; ++i) {
      out.z(i, j) = params.c(j) + params.a.row(j).dot(out.theta.row(i)) +
                    rng.normal();
      out.data.y(i, j) = out.z(i, j) > 0.0 ? 1 : 0;
    }

  if (!missing.items.empty() && missing.fraction > 0.0) {
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < missing.fraction)
        for (int j : missing.items) out.data.obs_mask(i, j) = 0;
  }

  out.data.coords = coords;
  out.data.X = X;
  if (X.cols() > 0) {
    out.data.x_mean = Eigen::VectorXd::Zero(X.cols());
    out.data.x_sd = Eigen::VectorXd::Ones(X.cols());
  }
  for (int j = 0; j < q; ++j)
    out.data.item_names.push_back("item_" + std::to_string(j + 1));
  for (int k = 0; k < X.cols(); ++k)
    out.data.covariate_names.push_back("cov_" + std::to_string(k + 1));
  return out;
}

TrueParams draw_params_from_priors(const ModelSpec& spec, int p,
                                   RngStream& rng) {
  const int q = spec.q();
  const int m = spec.m;
  const int g = spec.g();
  TrueParams out;

  out.c.resize(q);
  for (int j = 0; j < q; ++j) out.c(j) = spec.priors.c_sd(j) * rng.normal();

  Eigen::VectorXd a_free(spec.free_a_count());
  {
    int next = 0;
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < m; ++k)
        if (spec.constraints[j].active(k))
          a_free(next++) =
              spec.priors.a_mean(j, k) + spec.priors.a_sd(j, k) * rng.normal();
  }
  out.a = spec.resolve_discrimination(a_free);

  out.b.resize(p, m);
  for (int k = 0; k < m; ++k)
    for (int r = 0; r < p; ++r)
      out.b(r, k) = spec.priors.beta_sd(k * p + r) * rng.normal();

  Eigen::VectorXd t_vals(spec.free_t_count());
  for (Eigen::Index i = 0; i < t_vals.size(); ++i)
    t_vals(i) = std::exp(spec.priors.t_log_mean(i) +
                         spec.priors.t_log_sd(i) * rng.normal());
  out.t = build_loading_matrix(spec.loading_pattern, t_vals);

  out.phi.resize(g);
  for (int k = 0; k < g; ++k)
    out.phi(k) = std::exp(spec.priors.phi_log_mean(k) +
                          spec.priors.phi_log_sd(k) * rng.normal());

  if (m > 1) {
    // LKJ: canonical partial correlations have independent scaled Beta
    // distributions with shape eta + (m - 2 - j)/2 in column j.
    Eigen::VectorXd nu(spec.nu_count());
    int next = 0;
    for (int j = 0; j < m; ++j)
      for (int i = j + 1; i < m; ++i) {
        const double shape = spec.priors.lkj_eta + 0.5 * (m - 2 - j);
        const double z = 2.0 * rng.beta(shape, shape) - 1.0;
        nu(next++) = std::atanh(z);
      }
    out.r_v = cpc_transform(nu, m);
  } else {
    out.r_v = Eigen::MatrixXd::Identity(1, 1);
  }
  out.d = spec.residual_sd;
  return out;
}

}  // namespace geofactor
