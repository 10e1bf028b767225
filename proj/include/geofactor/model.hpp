#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace geofactor {

enum class Sign { free, positive, negative };

/// Linear restriction a* = u + L a on one item's discrimination vector.
/// Entries with `active == 0` are pinned at `fixed`; sign constraints are
/// only meaningful on active entries.
struct ItemConstraint {
  Eigen::VectorXd fixed;   // u_j, length m
  Eigen::VectorXi active;  // diag(L_j), 0/1, length m
  std::vector<Sign> signs; // length m

  static ItemConstraint all_free(int m);
  void validate() const;
  int active_count() const { return active.sum(); }
};

/// Resolve a* = u + L a. `a_free` is the full m-vector of free parameters;
/// entries at inactive positions are ignored.
Eigen::VectorXd apply_constraint(const ItemConstraint& c,
                                 const Eigen::VectorXd& a_free);

/// Place free values into an m x g loading matrix at the pattern's nonzero
/// positions (column-major order); zeros elsewhere.
Eigen::MatrixXd build_loading_matrix(const Eigen::MatrixXi& pattern,
                                     const Eigen::VectorXd& values);

enum class SignMode {
  soft,  // prior mean 1, sd 0.45 on sign-constrained loadings
  hard,  // conditional draws truncated to the required half-line
};

/// Gaussian priors for item parameters and fixed effects; log-normal priors
/// for the loading-matrix entries and correlation scales; LKJ shape for the
/// residual correlation. Means for c and beta are fixed at zero.
struct PriorSpec {
  Eigen::VectorXd c_sd;        // q
  Eigen::MatrixXd a_mean;      // q x m (used at active entries)
  Eigen::MatrixXd a_sd;        // q x m
  Eigen::VectorXd beta_sd;     // m*p
  Eigen::VectorXd t_log_mean;  // free T entries, log scale
  Eigen::VectorXd t_log_sd;
  Eigen::VectorXd phi_log_mean;  // g
  Eigen::VectorXd phi_log_sd;
  double lkj_eta = 1.5;

  void validate() const;
};

struct IdentifiabilityReport {
  bool ok = true;
  std::vector<std::string> messages;
};

/// Confirmatory spatial item factor model specification.
struct ModelSpec {
  int m = 1;                              // factors
  std::vector<ItemConstraint> constraints;  // one per item
  Eigen::MatrixXi loading_pattern;        // m x g
  PriorSpec priors;
  Eigen::VectorXd residual_sd;            // D, length m; ones by default
  SignMode sign_mode = SignMode::soft;

  int q() const { return static_cast<int>(constraints.size()); }
  int g() const { return static_cast<int>(loading_pattern.cols()); }
  int free_t_count() const { return loading_pattern.sum(); }
  int free_a_count() const;
  int nu_count() const { return m * (m - 1) / 2; }

  /// Offset of item j's active coordinates in the stacked free-a vector.
  std::vector<int> a_offsets() const;
  /// Resolve the q x m constrained discrimination matrix A* from the
  /// stacked free coordinates.
  Eigen::MatrixXd resolve_discrimination(const Eigen::VectorXd& a_free) const;
  /// Stack the active entries of a full q x m matrix.
  Eigen::VectorXd pack_free_a(const Eigen::MatrixXd& a_star) const;

  void validate() const;  // shapes and priors; throws
};

/// Checks the restriction pattern against the known aliasing modes:
/// at least m(m-1)/2 zeros arranged to break rotation, one sign-pinned
/// entry per factor against reflection, and a fixed residual scale D.
IdentifiabilityReport validate_identifiability(const ModelSpec& spec);

/// Default priors sized for a spec: N(0,1) easiness, N(0,1) free loadings
/// with N(1, 0.45^2) on sign-constrained ones, N(0,1) fixed effects,
/// LN(log 0.4, 0.4) loading-matrix entries, LN(log 160, 0.3) scales,
/// LKJ eta = 1.5.
PriorSpec default_priors(const ModelSpec& spec, int p);

}  // namespace geofactor
