#include "geofactor/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"
#include "geofactor/distributions.hpp"

namespace geofactor {

namespace {

// Entrywise factor covariance between two location sets; the only shared
// code with the main assembly path is the correlation kernel itself.
double theta_cov_entry(const TrueParams& par, const Eigen::MatrixXd& coords_a,
                       const Eigen::MatrixXd& coords_b, bool same_set, int k,
                       int i, int l, int i2) {
  double v = 0.0;
  const double dist = (coords_a.row(i) - coords_b.row(i2)).norm();
  for (int s = 0; s < par.g(); ++s)
    v += par.t(k, s) * par.t(l, s) * exp_correlation(dist, par.phi(s));
  if (same_set && i == i2) v += par.d(k) * par.r_v(k, l) * par.d(l);
  return v;
}

Eigen::MatrixXd theta_mean_matrix(const TrueParams& par,
                                  const Eigen::MatrixXd& X, int n) {
  if (par.p() == 0) return Eigen::MatrixXd::Zero(n, par.m());
  return X * par.b;
}

}  // namespace

JointGaussianOracle::JointGaussianOracle(const TrueParams& params,
                                         const Eigen::MatrixXd& coords,
                                         const Eigen::MatrixXd& X,
                                         const Eigen::MatrixXd& new_coords,
                                         const Eigen::MatrixXd& new_X)
    : params_(params),
      n_(static_cast<int>(coords.rows())),
      n_new_(static_cast<int>(new_coords.rows())) {
  const int q = params.q();
  const int m = params.m();
  const int dim = n_ * q + n_ * m + n_new_ * m;
  if (dim > 200)
    throw ValidationError("oracle: joint dimension " + std::to_string(dim) +
                          " exceeds the cap of 200");

  // Stack theta over both location sets first, then read off z moments.
  const int td = (n_ + n_new_) * m;
  Eigen::MatrixXd tc(td, td);
  auto tidx = [&](bool newset, int k, int i) {
    return (newset ? n_ * m : 0) + k * (newset ? n_new_ : n_) + i;
  };
  for (int set_a = 0; set_a < 2; ++set_a)
    for (int set_b = 0; set_b < 2; ++set_b) {
      const auto& ca = set_a ? new_coords : coords;
      const auto& cb = set_b ? new_coords : coords;
      const int na = set_a ? n_new_ : n_;
      const int nb = set_b ? n_new_ : n_;
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          for (int i = 0; i < na; ++i)
            for (int i2 = 0; i2 < nb; ++i2)
              tc(tidx(set_a, k, i), tidx(set_b, l, i2)) = theta_cov_entry(
                  params_, ca, cb, set_a == set_b, k, i, l, i2);
    }
  Eigen::VectorXd tm(td);
  const Eigen::MatrixXd mu_obs = theta_mean_matrix(params_, X, n_);
  const Eigen::MatrixXd mu_new = theta_mean_matrix(params_, new_X, n_new_);
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < n_; ++i) tm(tidx(false, k, i)) = mu_obs(i, k);
    for (int i = 0; i < n_new_; ++i) tm(tidx(true, k, i)) = mu_new(i, k);
  }

  joint_.mean.resize(dim);
  joint_.cov.resize(dim, dim);
  const int zd = n_ * q;
  auto zidx = [&](int j, int i) { return j * n_ + i; };

  // z block: c_j + sum_k A_jk theta_k(s_i) + unit noise.
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n_; ++i) {
      double mu = params_.c(j);
      for (int k = 0; k < m; ++k) mu += params_.a(j, k) * mu_obs(i, k);
      joint_.mean(zidx(j, i)) = mu;
    }
  joint_.mean.segment(zd, td) = tm;

  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n_; ++i)
      for (int j2 = 0; j2 < q; ++j2)
        for (int i2 = 0; i2 < n_; ++i2) {
          double v = 0.0;
          for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l)
              v += params_.a(j, k) * params_.a(j2, l) *
                   tc(tidx(false, k, i), tidx(false, l, i2));
          if (i == i2 && j == j2) v += 1.0;
          joint_.cov(zidx(j, i), zidx(j2, i2)) = v;
        }
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n_; ++i)
      for (int t = 0; t < td; ++t) {
        double v = 0.0;
        for (int k = 0; k < m; ++k)
          v += params_.a(j, k) * tc(tidx(false, k, i), t);
        joint_.cov(zidx(j, i), zd + t) = v;
        joint_.cov(zd + t, zidx(j, i)) = v;
      }
  joint_.cov.block(zd, zd, td, td) = tc;
}

std::pair<int, int> JointGaussianOracle::block_range(int block) const {
  const int q = params_.q();
  const int m = params_.m();
  switch (block) {
    case 0:
      return {0, n_ * q};
    case 1:
      return {n_ * q, n_ * m};
    case 2:
      return {n_ * q + n_ * m, n_new_ * m};
    default:
      throw ValidationError("oracle: unknown block index");
  }
}

OracleMoments JointGaussianOracle::z_moments() const {
  const auto [off, len] = block_range(0);
  return {joint_.mean.segment(off, len), joint_.cov.block(off, off, len, len)};
}

OracleMoments JointGaussianOracle::theta_moments() const {
  const auto [off, len] = block_range(1);
  return {joint_.mean.segment(off, len), joint_.cov.block(off, off, len, len)};
}

OracleMoments JointGaussianOracle::theta_new_moments() const {
  const auto [off, len] = block_range(2);
  return {joint_.mean.segment(off, len), joint_.cov.block(off, off, len, len)};
}

OracleMoments JointGaussianOracle::conditional(
    int target, int given, const Eigen::VectorXd& value) const {
  const auto [to, tl] = block_range(target);
  const auto [go, gl] = block_range(given);
  if (value.size() != gl)
    throw ValidationError("oracle: conditioning value has wrong length");
  const Eigen::MatrixXd s_tt = joint_.cov.block(to, to, tl, tl);
  const Eigen::MatrixXd s_tg = joint_.cov.block(to, go, tl, gl);
  const Eigen::MatrixXd s_gg = joint_.cov.block(go, go, gl, gl);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s_gg);
  OracleMoments out;
  out.mean = joint_.mean.segment(to, tl) +
             s_tg * ldlt.solve(value - joint_.mean.segment(go, gl));
  out.cov = s_tt - s_tg * ldlt.solve(s_tg.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

namespace {

struct GaussHermite {
  Eigen::VectorXd nodes;        // abscissas for weight e^{-x^2}
  Eigen::VectorXd log_weights;  // log(w_i / sqrt(pi)), i.e. N(0,1) weights
};

GaussHermite gauss_hermite(int k) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(k, k);
  for (int i = 1; i < k; ++i) {
    const double b = std::sqrt(0.5 * i);
    jac(i, i - 1) = b;
    jac(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermite out;
  out.nodes = es.eigenvalues();
  out.log_weights.resize(k);
  for (int i = 0; i < k; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    out.log_weights(i) = std::log(v0 * v0);  // mu0 = sqrt(pi) cancels
  }
  return out;
}

// Marginal log-likelihood of the observed responses with every parameter
// pinned, latent factors integrated out by tensor Gauss-Hermite.
double marginal_loglik(const Dataset& data, const TrueParams& par,
                       const Eigen::MatrixXd& chol_theta,
                       const Eigen::VectorXd& theta_mean,
                       const GaussHermite& gh) {
  const int n = data.n();
  const int q = data.q();
  const int k = static_cast<int>(gh.nodes.size());
  std::vector<int> odo(n, 0);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(64);
  Eigen::VectorXd u(n), theta(n);
  for (;;) {
    double lw = 0.0;
    for (int dim = 0; dim < n; ++dim) {
      lw += gh.log_weights(odo[dim]);
      u(dim) = std::sqrt(2.0) * gh.nodes(odo[dim]);
    }
    theta = theta_mean + chol_theta * u;
    double ll = 0.0;
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < n; ++i)
        if (data.obs_mask(i, j))
          ll += clamped_log_probit(par.c(j) + par.a(j, 0) * theta(i),
                                   data.y(i, j));
    const double term = lw + ll;
    terms.push_back(term);
    max_term = std::max(max_term, term);

    int dim = 0;
    while (dim < n && ++odo[dim] == k) odo[dim++] = 0;
    if (dim == n) break;
  }
  double acc = 0.0;
  for (const double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

struct GridMoments {
  double mean;
  double variance;
};

GridMoments posterior_on_grid(const Dataset& data, const TrueParams& base,
                              ScalarUnknown kind, int item, int factor,
                              double prior_mean, double prior_sd,
                              const Eigen::MatrixXd& chol_theta,
                              const Eigen::VectorXd& theta_mean,
                              const GaussHermite& gh, int grid_points,
                              double range_sd) {
  const double lo = prior_mean - range_sd * prior_sd;
  const double hi = prior_mean + range_sd * prior_sd;
  Eigen::VectorXd grid(grid_points), lp(grid_points);
  TrueParams par = base;
  for (int i = 0; i < grid_points; ++i) {
    const double s = lo + (hi - lo) * i / (grid_points - 1);
    grid(i) = s;
    if (kind == ScalarUnknown::easiness)
      par.c(item) = s;
    else
      par.a(item, factor) = s;
    const double r = (s - prior_mean) / prior_sd;
    lp(i) = marginal_loglik(data, par, chol_theta, theta_mean, gh) -
            0.5 * r * r;
  }
  const double mx = lp.maxCoeff();
  double w_sum = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double w = std::exp(lp(i) - mx);
    if (i == 0 || i == grid_points - 1) w *= 0.5;  // trapezoid ends
    w_sum += w;
    m1 += w * grid(i);
    m2 += w * grid(i) * grid(i);
  }
  GridMoments out;
  out.mean = m1 / w_sum;
  out.variance = m2 / w_sum - out.mean * out.mean;
  return out;
}

}  // namespace

QuadratureResult quadrature_posterior_oracle(const Dataset& data,
                                             const ModelSpec& spec,
                                             const TrueParams& params,
                                             ScalarUnknown kind, int item,
                                             int factor,
                                             const QuadratureOptions& opt) {
  if (params.m() != 1)
    throw ValidationError("quadrature oracle: requires m = 1");
  if (data.n() > 4)
    throw ValidationError("quadrature oracle: requires n <= 4");
  if (item < 0 || item >= data.q())
    throw ValidationError("quadrature oracle: item index out of range");

  double prior_mean, prior_sd;
  if (kind == ScalarUnknown::easiness) {
    prior_mean = 0.0;
    prior_sd = spec.priors.c_sd(item);
  } else {
    prior_mean = spec.priors.a_mean(item, factor);
    prior_sd = spec.priors.a_sd(item, factor);
  }

  // Latent covariance assembled entrywise, independent of the main path.
  const int n = data.n();
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cov(i, j) =
          theta_cov_entry(params, data.coords, data.coords, true, 0, i, 0, j);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("quadrature oracle: latent covariance not PD");
  const Eigen::MatrixXd chol_theta = llt.matrixL();
  const Eigen::VectorXd theta_mean =
      theta_mean_matrix(params, data.X, n).col(0);

  const GaussHermite gh = gauss_hermite(opt.gh_nodes);
  const GridMoments coarse = posterior_on_grid(
      data, params, kind, item, factor, prior_mean, prior_sd, chol_theta,
      theta_mean, gh, opt.grid_points, opt.range_sd);
  const GridMoments fine = posterior_on_grid(
      data, params, kind, item, factor, prior_mean, prior_sd, chol_theta,
      theta_mean, gh, 2 * opt.grid_points - 1, opt.range_sd);

  QuadratureResult out;
  out.mean = fine.mean;
  out.variance = fine.variance;
  out.refinement_delta = std::abs(fine.mean - coarse.mean);
  if (out.refinement_delta > opt.refine_tol)
    throw NumericalError(
        "quadrature oracle: grid too coarse, refinement moved the mean by " +
        std::to_string(out.refinement_delta));
  return out;
}

}  // namespace geofactor
