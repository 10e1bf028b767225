#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

namespace geofactor {

/// Exponential correlation exp(-u/phi); throws on phi <= 0.
double exp_correlation(double u, double phi);

/// Unit-variance correlation matrix of one Gaussian process over planar
/// coordinates (all spatial scale lives in the loading matrix T).
Eigen::MatrixXd gp_cov_matrix(const Eigen::MatrixXd& coords, double phi);

/// Cross-correlation block between two coordinate sets.
Eigen::MatrixXd gp_cross_matrix(const Eigen::MatrixXd& coords_a,
                                const Eigen::MatrixXd& coords_b, double phi);

/// Cholesky with the deterministic jitter policy: on failure add
/// 1e-10 * mean(diag) to the diagonal, escalate tenfold up to 1e-6, then
/// throw NumericalError. The jitter actually applied is reported.
struct CholResult {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  double log_det = 0.0;  // of the (jittered) matrix
};
CholResult chol_with_jitter(const Eigen::MatrixXd& sym);

/// mn x mn covariance of the stacked latent factors,
/// (T (x) I_n) Sigma_psi (T' (x) I_n) + (D R_v D) (x) I_n,
/// with its Cholesky factor and lazily computed dense inverse.
class FactorCovariance {
 public:
  FactorCovariance() = default;
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return chol_.llt; }
  double log_det() const { return chol_.log_det; }
  double jitter() const { return chol_.jitter; }
  /// Dense inverse, computed once on first use.
  const Eigen::MatrixXd& inverse() const;

  friend FactorCovariance factor_cov(const Eigen::MatrixXd& T,
                                     const std::vector<Eigen::MatrixXd>& gp,
                                     const Eigen::VectorXd& D,
                                     const Eigen::MatrixXd& R_v, int n);

 private:
  Eigen::MatrixXd sigma_;
  CholResult chol_;
  mutable Eigen::MatrixXd inv_;
  mutable bool have_inv_ = false;
};

/// Assemble the factor covariance from the loading matrix, the g per-process
/// correlation matrices, the residual scales D and correlation R_v.
FactorCovariance factor_cov(const Eigen::MatrixXd& T,
                            const std::vector<Eigen::MatrixXd>& gp,
                            const Eigen::VectorXd& D,
                            const Eigen::MatrixXd& R_v, int n);

/// Marginal moments of the stacked auxiliary variables z:
/// mean (I_q (x) 1_n) c + (A* (x) X) beta, covariance
/// (A*T (x) I) Sigma_psi (T'A*' (x) I) + (A* (x) I)(D R_v D (x) I)(A*' (x) I)
/// plus the unit observation noise I_nq.
struct ZMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
ZMoments marginal_z_moments(const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& a_star,
                            const Eigen::MatrixXd& B,  // p x m
                            const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& T,
                            const std::vector<Eigen::MatrixXd>& gp,
                            const Eigen::VectorXd& D,
                            const Eigen::MatrixXd& R_v);

/// Unnormalized LKJ log density (eta - 1) * log det(R); throws on non-PD.
double lkj_log_density(const Eigen::MatrixXd& R, double eta);

/// Canonical partial correlation parameterization of correlation matrices:
/// tanh maps the free vector to partial correlations which are assembled
/// into a Cholesky factor row by row. Bijective; entries are ordered
/// column-major over the strict lower triangle.
Eigen::MatrixXd cpc_transform(const Eigen::VectorXd& nu, int m);
Eigen::VectorXd cpc_inverse(const Eigen::MatrixXd& R);
/// Log |Jacobian| of nu -> R (tanh part included); needed when a density on
/// correlation matrices is evaluated in nu coordinates.
double cpc_log_jacobian(const Eigen::VectorXd& nu, int m);

}  // namespace geofactor
