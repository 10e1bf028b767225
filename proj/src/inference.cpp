#include "geofactor/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"
#include "geofactor/distributions.hpp"

namespace geofactor {

double log_likelihood_y(const Eigen::MatrixXd& theta, const Eigen::VectorXd& c,
                        const Eigen::MatrixXd& a_star, const Dataset& data) {
  if (theta.rows() != data.n() || a_star.rows() != data.q() ||
      c.size() != data.q() || theta.cols() != a_star.cols())
    throw ValidationError("log_likelihood_y: shapes do not conform");
  double ll = 0.0;
  for (int j = 0; j < data.q(); ++j)
    for (int i = 0; i < data.n(); ++i)
      if (data.obs_mask(i, j))
        ll += clamped_log_probit(c(j) + a_star.row(j).dot(theta.row(i)),
                                 data.y(i, j));
  return ll;
}

DicReport dic(const ChainOutput& chain, const Dataset& data) {
  const long s = chain.samples();
  if (s == 0) throw ValidationError("dic: chain holds no samples");
  const int n = chain.n;
  const int m = chain.m();
  const int q = chain.spec.q();
  if (data.n() != n || data.q() != q)
    throw ValidationError("dic: dataset shape differs from the chain");

  DicReport rep;
  for (long i = 0; i < s; ++i) {
    const Eigen::VectorXd theta_row = chain.theta.row(i);
    const Eigen::VectorXd a_row = chain.a_star.row(i);
    rep.mean_deviance +=
        -2.0 * log_likelihood_y(
                   Eigen::Map<const Eigen::MatrixXd>(theta_row.data(), n, m),
                   chain.c.row(i).transpose(),
                   Eigen::Map<const Eigen::MatrixXd>(a_row.data(), q, m),
                   data);
  }
  rep.mean_deviance /= static_cast<double>(s);

  const Eigen::VectorXd theta_bar = chain.theta.colwise().mean().transpose();
  const Eigen::VectorXd a_bar = chain.a_star.colwise().mean().transpose();
  const Eigen::VectorXd c_bar = chain.c.colwise().mean().transpose();
  rep.deviance_at_mean =
      -2.0 * log_likelihood_y(
                 Eigen::Map<const Eigen::MatrixXd>(theta_bar.data(), n, m),
                 c_bar,
                 Eigen::Map<const Eigen::MatrixXd>(a_bar.data(), q, m), data);
  rep.p_d = rep.mean_deviance - rep.deviance_at_mean;
  rep.dic = rep.mean_deviance + rep.p_d;
  return rep;
}

KrigingConditional kriging_conditional(const ChainOutput& chain, long sample,
                                       const Dataset& data,
                                       const Eigen::MatrixXd& new_coords,
                                       const Eigen::MatrixXd& new_X) {
  const int n = chain.n;
  const int m = chain.m();
  const int p = chain.p;
  const int g = chain.spec.g();
  const int nn = static_cast<int>(new_coords.rows());
  if (sample < 0 || sample >= chain.samples())
    throw ValidationError("kriging: sample index out of range");

  const Eigen::MatrixXd t = build_loading_matrix(
      chain.spec.loading_pattern, chain.t_free.row(sample).transpose());
  const Eigen::MatrixXd r_v =
      m > 1 ? cpc_transform(chain.nu.row(sample).transpose(), m)
            : Eigen::MatrixXd::Identity(1, 1);
  std::vector<Eigen::MatrixXd> gp_obs, gp_new, gp_cross;
  for (int k = 0; k < g; ++k) {
    const double phi = chain.phi(sample, k);
    gp_obs.push_back(gp_cov_matrix(data.coords, phi));
    gp_new.push_back(gp_cov_matrix(new_coords, phi));
    gp_cross.push_back(gp_cross_matrix(new_coords, data.coords, phi));
  }
  const FactorCovariance var_obs =
      factor_cov(t, gp_obs, chain.residual_sd, r_v, n);
  const FactorCovariance var_new =
      factor_cov(t, gp_new, chain.residual_sd, r_v, nn);

  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(m * nn, m * n);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      auto block = cross.block(k * nn, l * n, nn, n);
      for (int u = 0; u < g; ++u) {
        const double w = t(k, u) * t(l, u);
        if (w != 0.0) block += w * gp_cross[u];
      }
    }

  Eigen::VectorXd mean_obs = Eigen::VectorXd::Zero(m * n);
  Eigen::VectorXd mean_new = Eigen::VectorXd::Zero(m * nn);
  if (p > 0) {
    const Eigen::VectorXd beta_row = chain.beta.row(sample);
    const Eigen::Map<const Eigen::MatrixXd> b(beta_row.data(), p, m);
    for (int k = 0; k < m; ++k) {
      mean_obs.segment(k * n, n) = data.X * b.col(k);
      mean_new.segment(k * nn, nn) = new_X * b.col(k);
    }
  }

  const Eigen::VectorXd resid = chain.theta.row(sample).transpose() - mean_obs;
  const Eigen::MatrixXd gain =
      var_obs.llt().solve(cross.transpose()).transpose();

  KrigingConditional out;
  out.prior_mean = mean_new;
  out.prior_cov = var_new.sigma();
  out.mean = mean_new + gain * resid;
  Eigen::MatrixXd cov = var_new.sigma() - gain * cross.transpose();
  out.cov = 0.5 * (cov + cov.transpose()).eval();
  return out;
}

PredictionResult predict_factors(const ChainOutput& chain, const Dataset& data,
                                 const Eigen::MatrixXd& new_coords,
                                 const Eigen::MatrixXd& new_X,
                                 const PredictOptions& opt) {
  const long s = chain.samples();
  if (s == 0) throw ValidationError("predict: chain holds no samples");
  const int n = chain.n;
  const int m = chain.m();
  const int p = chain.p;
  const int nn = static_cast<int>(new_coords.rows());
  if (nn == 0) throw ValidationError("predict: no prediction locations");
  if (new_coords.cols() != 2)
    throw ValidationError("predict: new coordinates must be n x 2");
  if (p > 0 && (new_X.rows() != nn || new_X.cols() != p))
    throw ValidationError(
        "predict: covariates at new locations must be n_new x p");

  if (!opt.allow_coincident) {
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < n; ++j)
        if ((new_coords.row(i) - data.coords.row(j)).norm() < 1e-9)
          throw ValidationError(
              "predict: location " + std::to_string(i) +
              " coincides with a training point; exact reproduction of the "
              "latent draw is not implied there, pass allow_coincident to "
              "proceed");
  }

  PredictionResult out;
  out.new_coords = new_coords;
  out.m = m;
  out.draws.resize(s, m * nn);
  RngStream rng(opt.seed, "predict");

  for (long r = 0; r < s; ++r) {
    const KrigingConditional cond =
        kriging_conditional(chain, r, data, new_coords, new_X);
    const CholResult chol = chol_with_jitter(cond.cov);
    Eigen::VectorXd xi(m * nn);
    for (int i = 0; i < m * nn; ++i) xi(i) = rng.normal();
    out.draws.row(r) =
        (cond.mean + Eigen::MatrixXd(chol.llt.matrixL()) * xi).transpose();
  }

  out.median.resize(nn, m);
  out.q05.resize(nn, m);
  out.q95.resize(nn, m);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < nn; ++i) {
      const Eigen::VectorXd col = out.draws.col(k * nn + i);
      out.median(i, k) = quantile(col, 0.5);
      out.q05(i, k) = quantile(col, 0.05);
      out.q95(i, k) = quantile(col, 0.95);
    }
  out.exceed0 = exceedance_prob(out, 0.0);
  return out;
}

Eigen::MatrixXd exceedance_prob(const PredictionResult& pred,
                                double threshold) {
  const int nn = pred.n_new();
  const long s = pred.draws.rows();
  if (s == 0) throw ValidationError("exceedance: no draws");
  Eigen::MatrixXd out(nn, pred.m);
  for (int k = 0; k < pred.m; ++k)
    for (int i = 0; i < nn; ++i)
      out(i, k) =
          (pred.draws.col(k * nn + i).array() > threshold).cast<double>().sum() /
          static_cast<double>(s);
  return out;
}

Variogram empirical_variogram(const Eigen::VectorXd& values,
                              const Eigen::MatrixXd& coords, int n_bins,
                              double max_dist) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw ValidationError("variogram: need at least two points");
  if (coords.rows() != n)
    throw ValidationError("variogram: coordinate rows differ from values");
  if (n_bins < 1) throw ValidationError("variogram: need at least one bin");

  if (max_dist <= 0.0) {
    double dmax = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        dmax = std::max(dmax, (coords.row(i) - coords.row(j)).norm());
    max_dist = 0.5 * dmax;
  }

  Variogram out;
  out.max_dist = max_dist;
  out.centers.resize(n_bins);
  const double width = max_dist / n_bins;
  for (int b = 0; b < n_bins; ++b) out.centers(b) = (b + 0.5) * width;
  // Squared differences are summed in sorted order so the result is
  // bit-identical under any permutation of the input points.
  std::vector<std::vector<double>> sq(n_bins);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (coords.row(i) - coords.row(j)).norm();
      if (d >= max_dist) continue;
      const int b = std::min(n_bins - 1, static_cast<int>(d / width));
      const double diff = values(i) - values(j);
      sq[b].push_back(diff * diff);
    }
  out.gamma.resize(n_bins);
  out.pair_count.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    out.pair_count(b) = static_cast<int>(sq[b].size());
    if (sq[b].empty()) {
      out.gamma(b) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::sort(sq[b].begin(), sq[b].end());
    double acc = 0.0;
    for (const double v : sq[b]) acc += v;
    out.gamma(b) = 0.5 * acc / out.pair_count(b);
  }
  return out;
}

double quantile(const Eigen::VectorXd& values, double prob) {
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  if (v.empty()) throw ValidationError("quantile: empty input");
  const double h = prob * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

TraceSummary summarize_trace(const Eigen::VectorXd& draws, int max_lag) {
  const auto n = draws.size();
  if (n == 0) throw ValidationError("trace summary: empty trace");
  TraceSummary out;
  out.mean = draws.mean();
  const Eigen::ArrayXd centered = draws.array() - out.mean;
  const double var0 = centered.square().sum() / static_cast<double>(n);
  out.sd = std::sqrt(var0 * static_cast<double>(n) /
                     std::max<double>(1.0, static_cast<double>(n - 1)));
  out.q025 = quantile(draws, 0.025);
  out.median = quantile(draws, 0.5);
  out.q975 = quantile(draws, 0.975);

  const int lags = static_cast<int>(std::min<Eigen::Index>(max_lag, n - 1));
  out.autocorr = Eigen::VectorXd::Zero(std::max(lags, 0));
  if (var0 <= 0.0) {
    out.degenerate = true;
    out.ess = static_cast<double>(n);
    return out;
  }
  auto rho = [&](Eigen::Index k) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t + k < n; ++t) acc += centered(t) * centered(t + k);
    return acc / (static_cast<double>(n) * var0);
  };
  for (int k = 1; k <= lags; ++k) out.autocorr(k - 1) = rho(k);

  // Initial positive sequence estimator: sum paired autocorrelations while
  // the pair sums stay positive.
  double tau = 1.0;
  for (Eigen::Index k = 1; k + 1 < n; k += 2) {
    const double pair = rho(k) + rho(k + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  out.ess = static_cast<double>(n) / tau;
  return out;
}

std::vector<NamedSummary> trace_summary(const ChainOutput& chain) {
  std::vector<NamedSummary> out;
  auto add_block = [&](const Eigen::MatrixXd& block, const std::string& prefix,
                       auto name_fn) {
    for (Eigen::Index col = 0; col < block.cols(); ++col)
      out.push_back({prefix + name_fn(col), summarize_trace(block.col(col))});
  };
  const int q = chain.spec.q();
  const int n = chain.n;
  const int p = chain.p;
  add_block(chain.c, "c_", [](Eigen::Index j) { return std::to_string(j + 1); });
  add_block(chain.a_star, "a_", [&](Eigen::Index idx) {
    return std::to_string(idx % q + 1) + "_" + std::to_string(idx / q + 1);
  });
  add_block(chain.beta, "beta_", [&](Eigen::Index idx) {
    return std::to_string(idx % p + 1) + "_" + std::to_string(idx / p + 1);
  });
  add_block(chain.t_free, "t_",
            [](Eigen::Index i) { return std::to_string(i + 1); });
  add_block(chain.phi, "phi_",
            [](Eigen::Index i) { return std::to_string(i + 1); });
  add_block(chain.nu, "nu_",
            [](Eigen::Index i) { return std::to_string(i + 1); });
  add_block(chain.theta, "theta_", [&](Eigen::Index idx) {
    return std::to_string(idx / n + 1) + "_" + std::to_string(idx % n + 1);
  });
  return out;
}

}  // namespace geofactor
