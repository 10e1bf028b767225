#include "geofactor/covariance.hpp"

#include <cmath>

#include "geofactor/common.hpp"

namespace geofactor {

double exp_correlation(double u, double phi) {
  if (!(phi > 0.0)) throw ValidationError("exp_correlation: scale must be > 0");
  if (u < 0.0) throw ValidationError("exp_correlation: negative distance");
  return std::exp(-u / phi);
}

Eigen::MatrixXd gp_cov_matrix(const Eigen::MatrixXd& coords, double phi) {
  const int n = static_cast<int>(coords.rows());
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double rho =
          exp_correlation((coords.row(i) - coords.row(j)).norm(), phi);
      s(i, j) = rho;
      s(j, i) = rho;
    }
  }
  return s;
}

Eigen::MatrixXd gp_cross_matrix(const Eigen::MatrixXd& coords_a,
                                const Eigen::MatrixXd& coords_b, double phi) {
  Eigen::MatrixXd s(coords_a.rows(), coords_b.rows());
  for (int i = 0; i < coords_a.rows(); ++i)
    for (int j = 0; j < coords_b.rows(); ++j)
      s(i, j) =
          exp_correlation((coords_a.row(i) - coords_b.row(j)).norm(), phi);
  return s;
}

CholResult chol_with_jitter(const Eigen::MatrixXd& sym) {
  CholResult out;
  const double scale = sym.diagonal().mean();
  double rel = 0.0;
  for (;;) {
    Eigen::MatrixXd work = sym;
    if (rel > 0.0)
      work.diagonal().array() += rel * scale;
    out.llt.compute(work);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = rel * scale;
      out.log_det =
          2.0 * out.llt.matrixLLT().diagonal().array().log().sum();
      return out;
    }
    rel = rel == 0.0 ? 1e-10 : rel * 10.0;
    if (rel > 1e-6)
      throw NumericalError(
          "cholesky failed after jitter escalation to 1e-6 * mean diagonal");
  }
}

const Eigen::MatrixXd& FactorCovariance::inverse() const {
  if (!have_inv_) {
    inv_ = chol_.llt.solve(
        Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
    have_inv_ = true;
  }
  return inv_;
}

FactorCovariance factor_cov(const Eigen::MatrixXd& T,
                            const std::vector<Eigen::MatrixXd>& gp,
                            const Eigen::VectorXd& D,
                            const Eigen::MatrixXd& R_v, int n) {
  const int m = static_cast<int>(T.rows());
  const int g = static_cast<int>(T.cols());
  if (static_cast<int>(gp.size()) != g)
    throw ValidationError("factor_cov: need one GP matrix per column of T");
  if (D.size() != m || R_v.rows() != m || R_v.cols() != m)
    throw ValidationError("factor_cov: residual term dimensions");
  for (const auto& s : gp)
    if (s.rows() != n || s.cols() != n)
      throw ValidationError("factor_cov: GP matrix is not n x n");

  FactorCovariance out;
  out.sigma_ = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      auto block = out.sigma_.block(k * n, l * n, n, n);
      for (int s = 0; s < g; ++s) {
        const double w = T(k, s) * T(l, s);
        if (w != 0.0) block += w * gp[s];
      }
      const double nug = D(k) * R_v(k, l) * D(l);
      block.diagonal().array() += nug;
    }
  out.sigma_ = 0.5 * (out.sigma_ + out.sigma_.transpose()).eval();
  out.chol_ = chol_with_jitter(out.sigma_);
  return out;
}

ZMoments marginal_z_moments(const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& a_star,
                            const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& T,
                            const std::vector<Eigen::MatrixXd>& gp,
                            const Eigen::VectorXd& D,
                            const Eigen::MatrixXd& R_v) {
  const int q = static_cast<int>(a_star.rows());
  const int m = static_cast<int>(a_star.cols());
  const int n = static_cast<int>(X.rows() > 0 ? X.rows() : gp.empty()
                                     ? -1
                                     : gp.front().rows());
  if (c.size() != q) throw ValidationError("z moments: easiness length");
  if (n < 0) throw ValidationError("z moments: cannot infer n");

  ZMoments out;
  out.mean = Eigen::VectorXd::Zero(n * q);
  Eigen::MatrixXd theta_mean = Eigen::MatrixXd::Zero(n, m);
  if (B.size() > 0) {
    if (B.cols() != m || B.rows() != X.cols())
      throw ValidationError("z moments: B must be p x m");
    theta_mean = X * B;
  }
  for (int j = 0; j < q; ++j)
    out.mean.segment(j * n, n) =
        Eigen::VectorXd::Constant(n, c(j)) + theta_mean * a_star.row(j).transpose();

  const FactorCovariance fac = factor_cov(T, gp, D, R_v, n);
  out.cov = Eigen::MatrixXd::Zero(n * q, n * q);
  for (int j = 0; j < q; ++j)
    for (int j2 = 0; j2 < q; ++j2) {
      auto block = out.cov.block(j * n, j2 * n, n, n);
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          const double w = a_star(j, k) * a_star(j2, l);
          if (w != 0.0) block += w * fac.sigma().block(k * n, l * n, n, n);
        }
    }
  out.cov.diagonal().array() += 1.0;  // observation noise
  return out;
}

double lkj_log_density(const Eigen::MatrixXd& R, double eta) {
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalError("lkj density: matrix is not positive definite");
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return (eta - 1.0) * log_det;
}

Eigen::MatrixXd cpc_transform(const Eigen::VectorXd& nu, int m) {
  if (nu.size() != m * (m - 1) / 2)
    throw ValidationError("cpc: free vector length differs from m(m-1)/2");
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(m, m);
  Eigen::Index next = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j + 1; i < m; ++i) z(i, j) = std::tanh(nu(next++));

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  w(0, 0) = 1.0;
  for (int i = 1; i < m; ++i) {
    double rem = 1.0;  // product of (1 - z^2) along the row so far
    for (int j = 0; j < i; ++j) {
      w(i, j) = z(i, j) * std::sqrt(rem);
      rem *= 1.0 - z(i, j) * z(i, j);
    }
    w(i, i) = std::sqrt(rem);
  }
  Eigen::MatrixXd r = w * w.transpose();
  r.diagonal().setOnes();
  return 0.5 * (r + r.transpose()).eval();
}

Eigen::VectorXd cpc_inverse(const Eigen::MatrixXd& R) {
  const int m = static_cast<int>(R.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalError("cpc inverse: matrix is not positive definite");
  Eigen::MatrixXd w = llt.matrixL();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    double rem = 1.0;
    for (int j = 0; j < i; ++j) {
      z(i, j) = w(i, j) / std::sqrt(rem);
      rem *= 1.0 - z(i, j) * z(i, j);
    }
  }
  Eigen::VectorXd nu(m * (m - 1) / 2);
  Eigen::Index next = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j + 1; i < m; ++i) nu(next++) = std::atanh(z(i, j));
  return nu;
}

double cpc_log_jacobian(const Eigen::VectorXd& nu, int m) {
  if (nu.size() != m * (m - 1) / 2)
    throw ValidationError("cpc: free vector length differs from m(m-1)/2");
  double lj = 0.0;
  Eigen::Index next = 0;
  for (int j = 0; j < m; ++j)
    for (int i = j + 1; i < m; ++i) {
      const double z = std::tanh(nu(next++));
      // tanh derivative contributes log(1-z^2); the partial-correlation to
      // correlation map contributes (m-2-j)/2 * log(1-z^2) per entry.
      lj += (1.0 + 0.5 * (m - 2 - j)) * std::log1p(-z * z);
    }
  return lj;
}

}  // namespace geofactor
