#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

#include "geofactor/adaptive.hpp"
#include "geofactor/covariance.hpp"
#include "geofactor/dataset.hpp"
#include "geofactor/model.hpp"
#include "geofactor/rng.hpp"

namespace geofactor {

struct SamplerConfig {
  long iterations = 1000;
  long burn_in = 500;
  long thin = 1;
  double adapt_C = 0.7;
  double adapt_alpha = 0.8;
  double target_accept = 0.234;
  std::uint64_t seed = 0;
  int chains = 1;

  void validate() const;
  long stored_count() const { return (iterations - burn_in) / thin; }
};

/// One full draw of the augmented posterior, plus the cached factorization
/// of the factor covariance for the current (T, phi, nu).
struct ChainState {
  Eigen::VectorXd z;        // nq, item-major blocks of length n
  Eigen::VectorXd theta;    // mn, factor-major blocks of length n
  Eigen::VectorXd c;        // q
  Eigen::VectorXd a_free;   // stacked active discrimination entries
  Eigen::VectorXd beta;     // mp, vec of the p x m slope matrix
  Eigen::VectorXd log_t;    // free loading-matrix entries, log scale
  Eigen::VectorXd log_phi;  // g
  Eigen::VectorXd nu;       // m(m-1)/2
  FactorCovariance fac;
  double cov_log_target = std::numeric_limits<double>::quiet_NaN();

  Eigen::MatrixXd theta_matrix(int n, int m) const {
    return Eigen::Map<const Eigen::MatrixXd>(theta.data(), n, m);
  }
};

/// Thinned post-burn-in samples for every parameter block. Rows are stored
/// draws; column layouts are column-major vectorizations (theta: factor
/// blocks of length n; a: the resolved q x m discrimination matrix).
struct ChainOutput {
  ModelSpec spec;
  SamplerConfig config;
  int n = 0;
  int p = 0;
  int chain_id = 0;
  Eigen::VectorXd residual_sd;  // D; updated by rescaling

  Eigen::MatrixXd c;        // S x q
  Eigen::MatrixXd a_star;   // S x (q*m)
  Eigen::MatrixXd theta;    // S x (m*n)
  Eigen::MatrixXd beta;     // S x (m*p)
  Eigen::MatrixXd t_free;   // S x free_t_count, natural scale
  Eigen::MatrixXd phi;      // S x g
  Eigen::MatrixXd nu;       // S x m(m-1)/2
  Eigen::VectorXd stored_iteration;  // S, 1-based sweep index
  Eigen::VectorXd accept_prob;       // per sweep
  Eigen::VectorXd adapt_log_scale;   // per sweep
  bool rescaled = false;

  long samples() const { return c.rows(); }
  int m() const { return spec.m; }
  /// Content hash over all stored sample blocks.
  std::uint64_t hash() const;
};

/// Per-item conditional variance of the easiness block, (n + sd^-2)^-1;
/// the c update draws with exactly this variance.
double c_conditional_variance(int n, double prior_sd);

// Gibbs blocks. Each draws from the full conditional given the rest of the
// state; repeated calls with the other blocks frozen give i.i.d. draws.
void sample_aux_z(ChainState& s, const Dataset& d, const ModelSpec& spec,
                  RngStream& rng);
void sample_theta(ChainState& s, const Dataset& d, const ModelSpec& spec,
                  RngStream& rng);
void sample_beta(ChainState& s, const Dataset& d, const ModelSpec& spec,
                 RngStream& rng);
void sample_c(ChainState& s, const Dataset& d, const ModelSpec& spec,
              RngStream& rng);
void sample_a(ChainState& s, const Dataset& d, const ModelSpec& spec,
              RngStream& rng);

/// Log conditional target for the covariance-parameter block evaluated at
/// the transformed vector x = (log t, log phi, nu): Gaussian density of
/// theta plus the transformed priors (including the nu Jacobian). The
/// assembled covariance is returned so an accepted proposal can reuse it.
struct CovParamsEval {
  double log_target;
  FactorCovariance fac;
};
CovParamsEval eval_cov_params(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& beta, const Dataset& d,
                              const ModelSpec& spec);

/// Metropolis-within-Gibbs driver for one chain.
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& d, const ModelSpec& spec,
               const SamplerConfig& config);

  ChainState init_state(const Dataset& d, RngStream& rng) const;

  struct SweepInfo {
    bool accepted = false;
    double accept_prob = 1.0;
  };
  /// One full sweep: z, theta, beta, c, a, covariance-parameter MH.
  SweepInfo sweep(ChainState& s, const Dataset& d, RngStream& rng, bool adapt);

  AdaptiveRwm& proposal() { return rwm_; }

 private:
  const ModelSpec& spec_;
  SamplerConfig config_;
  AdaptiveRwm rwm_;
};

/// Run one chain to completion. Deterministic given (seed, chain_id,
/// config, spec, data); the RNG stream is RngStream(seed, "chain", id).
ChainOutput run_chain(const Dataset& d, const ModelSpec& spec,
                      const SamplerConfig& config, int chain_id = 0);

/// Concatenate stored samples of several chains over the same model and
/// data (per-sweep diagnostics are concatenated as well).
ChainOutput pool_chains(const std::vector<ChainOutput>& chains);

/// Post-hoc rescaling to put factors on a unit-variance scale: Q holds the
/// pooled per-factor sds of the stored theta draws, and every block is
/// transformed (a <- Qa on the resolved matrix, theta <- Q^-1 theta,
/// B <- Q^-1 B, T <- Q^-1 T, D <- Q^-1 D) so items' linear predictors are
/// unchanged. Throws NumericalError on a zero-variance factor.
ChainOutput rescale_samples(const ChainOutput& chain);

}  // namespace geofactor
