#include "geofactor/sampler.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "geofactor/common.hpp"
#include "geofactor/distributions.hpp"

namespace geofactor {

namespace {

// Admissible exponent window for the adaptation schedule, alpha in
// ((1+lambda)^-1, 1]; lambda = 0.3 so the conventional alpha = 0.8 passes.
constexpr double kAlphaLambda = 0.3;

Eigen::MatrixXd slope_matrix(const Eigen::VectorXd& beta, int p, int m) {
  return Eigen::Map<const Eigen::MatrixXd>(beta.data(), p, m);
}

// (I_m (x) X) beta, the prior mean of the stacked factors.
Eigen::VectorXd theta_prior_mean(const Eigen::VectorXd& beta,
                                 const Dataset& d, int m) {
  const int n = d.n();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m * n);
  if (d.p() > 0) {
    const Eigen::MatrixXd b = slope_matrix(beta, d.p(), m);
    for (int k = 0; k < m; ++k) mu.segment(k * n, n) = d.X * b.col(k);
  }
  return mu;
}

Eigen::VectorXd pack_cov_params(const ChainState& s) {
  Eigen::VectorXd x(s.log_t.size() + s.log_phi.size() + s.nu.size());
  x << s.log_t, s.log_phi, s.nu;
  return x;
}

void unpack_cov_params(const Eigen::VectorXd& x, ChainState& s) {
  const auto nt = s.log_t.size();
  const auto g = s.log_phi.size();
  s.log_t = x.segment(0, nt);
  s.log_phi = x.segment(nt, g);
  s.nu = x.segment(nt + g, s.nu.size());
}

double gaussian_block_logpdf(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& sd) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double r = (x(i) - mean(i)) / sd(i);
    lp += -0.5 * r * r - std::log(sd(i));
  }
  return lp;
}

// Log target of the covariance-parameter block with the factor covariance
// already factorized (used for the current state, whose covariance is
// cached but whose theta/beta changed earlier in the sweep).
double log_target_given_fac(const FactorCovariance& fac,
                            const Eigen::VectorXd& x,
                            const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& beta, const Dataset& d,
                            const ModelSpec& spec) {
  const Eigen::VectorXd r = theta - theta_prior_mean(beta, d, spec.m);
  const double quad = r.dot(fac.llt().solve(r));
  double lp = -0.5 * (fac.log_det() + quad);
  const auto nt = spec.free_t_count();
  const auto g = spec.g();
  lp += gaussian_block_logpdf(x.segment(0, nt), spec.priors.t_log_mean,
                              spec.priors.t_log_sd);
  lp += gaussian_block_logpdf(x.segment(nt, g), spec.priors.phi_log_mean,
                              spec.priors.phi_log_sd);
  if (spec.m > 1) {
    const Eigen::VectorXd nu = x.segment(nt + g, spec.nu_count());
    lp += lkj_log_density(cpc_transform(nu, spec.m), spec.priors.lkj_eta);
    lp += cpc_log_jacobian(nu, spec.m);
  }
  return lp;
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 1) throw ValidationError("sampler: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw ValidationError("sampler: burn_in must lie in [0, iterations)");
  if (thin < 1) throw ValidationError("sampler: thin must be >= 1");
  if (!(adapt_C > 0.0)) throw ValidationError("sampler: C must be positive");
  const double lo = 1.0 / (1.0 + kAlphaLambda);
  if (!(adapt_alpha > lo && adapt_alpha <= 1.0))
    throw ValidationError("sampler: alpha must lie in (" + std::to_string(lo) +
                          ", 1]");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw ValidationError("sampler: target acceptance must lie in (0,1)");
  if (chains < 1) throw ValidationError("sampler: chains must be >= 1");
}

std::uint64_t ChainOutput::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const Eigen::MatrixXd& m) {
    h = fnv1a64(m.data(), sizeof(double) * m.size(), h);
  };
  mix(c);
  mix(a_star);
  mix(theta);
  mix(beta);
  mix(t_free);
  mix(phi);
  mix(nu);
  return h;
}

void sample_aux_z(ChainState& s, const Dataset& d, const ModelSpec& spec,
                  RngStream& rng) {
  const int n = d.n();
  const int q = d.q();
  const Eigen::MatrixXd a_star = spec.resolve_discrimination(s.a_free);
  const Eigen::MatrixXd theta = s.theta_matrix(n, spec.m);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd mean =
        Eigen::VectorXd::Constant(n, s.c(j)) + theta * a_star.row(j).transpose();
    for (int i = 0; i < n; ++i) {
      double draw;
      if (!d.obs_mask(i, j))
        draw = mean(i) + rng.normal();
      else if (d.y(i, j) == 1)
        draw = rtnorm_lower(rng, mean(i), 0.0);
      else
        draw = rtnorm_upper(rng, mean(i), 0.0);
      s.z(j * n + i) = draw;
    }
  }
}

void sample_theta(ChainState& s, const Dataset& d, const ModelSpec& spec,
                  RngStream& rng) {
  const int n = d.n();
  const int q = d.q();
  const int m = spec.m;
  const Eigen::MatrixXd a_star = spec.resolve_discrimination(s.a_free);

  // Posterior precision (A*'A*) (x) I_n + Sigma_theta^-1.
  Eigen::MatrixXd prec = s.fac.inverse();
  const Eigen::MatrixXd ata = a_star.transpose() * a_star;
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l)
      prec.block(k * n, l * n, n, n).diagonal().array() += ata(k, l);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m * n);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd resid =
        s.z.segment(j * n, n) - Eigen::VectorXd::Constant(n, s.c(j));
    for (int k = 0; k < m; ++k)
      if (a_star(j, k) != 0.0) rhs.segment(k * n, n) += a_star(j, k) * resid;
  }
  if (d.p() > 0)
    rhs += s.fac.llt().solve(theta_prior_mean(s.beta, d, m));

  const CholResult chol = chol_with_jitter(prec);
  const Eigen::VectorXd mean = chol.llt.solve(rhs);
  Eigen::VectorXd xi(m * n);
  for (int i = 0; i < m * n; ++i) xi(i) = rng.normal();
  s.theta = mean + chol.llt.matrixU().solve(xi);
}

void sample_beta(ChainState& s, const Dataset& d, const ModelSpec& spec,
                 RngStream& rng) {
  const int p = d.p();
  if (p == 0) return;
  const int n = d.n();
  const int m = spec.m;
  const Eigen::MatrixXd& inv = s.fac.inverse();

  Eigen::MatrixXd prec(m * p, m * p);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l)
      prec.block(k * p, l * p, p, p) =
          d.X.transpose() * inv.block(k * n, l * n, n, n) * d.X;
  for (Eigen::Index i = 0; i < prec.rows(); ++i)
    prec(i, i) += 1.0 / (spec.priors.beta_sd(i) * spec.priors.beta_sd(i));

  const Eigen::VectorXd w = s.fac.llt().solve(s.theta);
  Eigen::VectorXd rhs(m * p);
  for (int k = 0; k < m; ++k)
    rhs.segment(k * p, p) = d.X.transpose() * w.segment(k * n, n);

  const CholResult chol = chol_with_jitter(prec);
  const Eigen::VectorXd mean = chol.llt.solve(rhs);
  Eigen::VectorXd xi(m * p);
  for (int i = 0; i < m * p; ++i) xi(i) = rng.normal();
  s.beta = mean + chol.llt.matrixU().solve(xi);
}

double c_conditional_variance(int n, double prior_sd) {
  return 1.0 / (n + 1.0 / (prior_sd * prior_sd));
}

void sample_c(ChainState& s, const Dataset& d, const ModelSpec& spec,
              RngStream& rng) {
  const int n = d.n();
  const Eigen::MatrixXd a_star = spec.resolve_discrimination(s.a_free);
  const Eigen::MatrixXd theta = s.theta_matrix(n, spec.m);
  for (int j = 0; j < d.q(); ++j) {
    const double var = c_conditional_variance(n, spec.priors.c_sd(j));
    const Eigen::VectorXd resid =
        s.z.segment(j * n, n) - theta * a_star.row(j).transpose();
    const double mean = var * resid.sum();
    s.c(j) = mean + std::sqrt(var) * rng.normal();
  }
}

void sample_a(ChainState& s, const Dataset& d, const ModelSpec& spec,
              RngStream& rng) {
  const int n = d.n();
  const Eigen::MatrixXd theta = s.theta_matrix(n, spec.m);
  const std::vector<int> offsets = spec.a_offsets();

  for (int j = 0; j < d.q(); ++j) {
    const ItemConstraint& con = spec.constraints[j];
    const int na = con.active_count();
    if (na == 0) continue;

    std::vector<int> cols;
    cols.reserve(na);
    for (int k = 0; k < spec.m; ++k)
      if (con.active(k)) cols.push_back(k);

    Eigen::MatrixXd design(n, na);
    for (int t = 0; t < na; ++t) design.col(t) = theta.col(cols[t]);
    const Eigen::VectorXd resid = s.z.segment(j * n, n) -
                                  Eigen::VectorXd::Constant(n, s.c(j)) -
                                  theta * con.fixed;

    Eigen::MatrixXd prec = design.transpose() * design;
    Eigen::VectorXd rhs = design.transpose() * resid;
    for (int t = 0; t < na; ++t) {
      const double sd = spec.priors.a_sd(j, cols[t]);
      prec(t, t) += 1.0 / (sd * sd);
      rhs(t) += spec.priors.a_mean(j, cols[t]) / (sd * sd);
    }

    auto seg = s.a_free.segment(offsets[j], na);
    const bool any_sign = [&] {
      for (int t = 0; t < na; ++t)
        if (con.signs[cols[t]] != Sign::free) return true;
      return false;
    }();

    if (spec.sign_mode == SignMode::hard && any_sign) {
      // Coordinate scan with truncation on the constrained coordinates.
      Eigen::VectorXd a = seg;
      for (int t = 0; t < na; ++t) {
        double dot = 0.0;
        for (int u = 0; u < na; ++u)
          if (u != t) dot += prec(t, u) * a(u);
        const double var = 1.0 / prec(t, t);
        const double mean = (rhs(t) - dot) * var;
        const double sd = std::sqrt(var);
        switch (con.signs[cols[t]]) {
          case Sign::positive:
            a(t) = sd * rtnorm_lower(rng, mean / sd, 0.0);
            break;
          case Sign::negative:
            a(t) = sd * rtnorm_upper(rng, mean / sd, 0.0);
            break;
          case Sign::free:
            a(t) = mean + sd * rng.normal();
            break;
        }
      }
      seg = a;
    } else {
      const CholResult chol = chol_with_jitter(prec);
      const Eigen::VectorXd mean = chol.llt.solve(rhs);
      Eigen::VectorXd xi(na);
      for (int t = 0; t < na; ++t) xi(t) = rng.normal();
      seg = mean + chol.llt.matrixU().solve(xi);
    }
  }
}

CovParamsEval eval_cov_params(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& beta, const Dataset& d,
                              const ModelSpec& spec) {
  const int nt = spec.free_t_count();
  const int g = spec.g();
  // Proposals far enough out to underflow or overflow the exp transform
  // carry essentially zero posterior mass; veto them instead of feeding
  // degenerate scales into the covariance assembly.
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x(i)) || std::abs(x(i)) > 300.0)
      throw NumericalError("covariance parameters out of range");
  CovParamsEval out;
  const Eigen::MatrixXd T = build_loading_matrix(
      spec.loading_pattern, x.segment(0, nt).array().exp());
  std::vector<Eigen::MatrixXd> gps;
  gps.reserve(g);
  for (int k = 0; k < g; ++k)
    gps.push_back(gp_cov_matrix(d.coords, std::exp(x(nt + k))));
  const Eigen::MatrixXd r_v =
      spec.m > 1 ? cpc_transform(x.segment(nt + g, spec.nu_count()), spec.m)
                 : Eigen::MatrixXd::Identity(1, 1);
  out.fac = factor_cov(T, gps, spec.residual_sd, r_v, d.n());
  out.log_target = log_target_given_fac(out.fac, x, theta, beta, d, spec);
  return out;
}

GibbsSampler::GibbsSampler(const Dataset& d, const ModelSpec& spec,
                           const SamplerConfig& config)
    : spec_(spec),
      config_(config),
      rwm_(std::max(1, spec.free_t_count() + spec.g() + spec.nu_count()),
           config.adapt_C, config.adapt_alpha, config.target_accept) {
  (void)d;
}

ChainState GibbsSampler::init_state(const Dataset& d, RngStream& rng) const {
  const int n = d.n();
  const int q = d.q();
  const int m = spec_.m;
  ChainState s;
  s.z.resize(n * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n; ++i)
      s.z(j * n + i) = d.obs_mask(i, j) ? (d.y(i, j) == 1 ? 0.5 : -0.5)
                                        : rng.normal();
  s.theta = Eigen::VectorXd::Zero(m * n);
  s.c = Eigen::VectorXd::Zero(q);
  s.a_free.resize(spec_.free_a_count());
  {
    int next = 0;
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < m; ++k)
        if (spec_.constraints[j].active(k))
          s.a_free(next++) = spec_.priors.a_mean(j, k);
  }
  s.beta = Eigen::VectorXd::Zero(m * d.p());
  s.log_t = spec_.priors.t_log_mean;
  s.log_phi = spec_.priors.phi_log_mean;
  s.nu = Eigen::VectorXd::Zero(spec_.nu_count());

  CovParamsEval eval =
      eval_cov_params(pack_cov_params(s), s.theta, s.beta, d, spec_);
  s.fac = std::move(eval.fac);
  s.cov_log_target = eval.log_target;
  return s;
}

GibbsSampler::SweepInfo GibbsSampler::sweep(ChainState& s, const Dataset& d,
                                            RngStream& rng, bool adapt) {
  sample_aux_z(s, d, spec_, rng);
  sample_theta(s, d, spec_, rng);
  sample_beta(s, d, spec_, rng);
  sample_c(s, d, spec_, rng);
  sample_a(s, d, spec_, rng);

  SweepInfo info;
  const int dim = spec_.free_t_count() + spec_.g() + spec_.nu_count();
  if (dim == 0) {
    info.accepted = true;
    info.accept_prob = 1.0;
    return info;
  }

  Eigen::VectorXd x = pack_cov_params(s);
  // theta and beta moved earlier in the sweep; refresh the target value at
  // the current covariance parameters using the cached factorization.
  double lp = log_target_given_fac(s.fac, x, s.theta, s.beta, d, spec_);

  std::optional<FactorCovariance> proposed_fac;
  auto log_target = [&](const Eigen::VectorXd& y) -> double {
    try {
      CovParamsEval eval = eval_cov_params(y, s.theta, s.beta, d, spec_);
      proposed_fac = std::move(eval.fac);
      return eval.log_target;
    } catch (const NumericalError&) {
      proposed_fac.reset();
      return -std::numeric_limits<double>::infinity();
    }
  };

  const AdaptiveRwm::Step step = rwm_.step(log_target, x, lp, rng, adapt);
  info.accepted = step.accepted;
  info.accept_prob = step.accept_prob;
  if (step.accepted) {
    unpack_cov_params(x, s);
    s.fac = std::move(*proposed_fac);
    s.cov_log_target = lp;
  }
  return info;
}

ChainOutput run_chain(const Dataset& d, const ModelSpec& spec,
                      const SamplerConfig& config, int chain_id) {
  d.validate();
  spec.validate();
  config.validate();
  if (spec.q() != d.q())
    throw ValidationError("run_chain: spec item count differs from data");
  if (spec.priors.beta_sd.size() != spec.m * d.p())
    throw ValidationError("run_chain: beta prior length differs from m*p");
  const IdentifiabilityReport rep = validate_identifiability(spec);
  if (!rep.ok) {
    std::string msg = "model is not identifiable:";
    for (const auto& line : rep.messages) msg += "\n  - " + line;
    throw ValidationError(msg);
  }

  RngStream rng(config.seed, "chain", static_cast<std::uint64_t>(chain_id));
  GibbsSampler gs(d, spec, config);
  ChainState state = gs.init_state(d, rng);

  const int n = d.n();
  const int p = d.p();
  const int m = spec.m;
  const long stored = config.stored_count();

  ChainOutput out;
  out.spec = spec;
  out.config = config;
  out.n = n;
  out.p = p;
  out.chain_id = chain_id;
  out.residual_sd = spec.residual_sd;
  out.c.resize(stored, d.q());
  out.a_star.resize(stored, d.q() * m);
  out.theta.resize(stored, m * n);
  out.beta.resize(stored, m * p);
  out.t_free.resize(stored, spec.free_t_count());
  out.phi.resize(stored, spec.g());
  out.nu.resize(stored, spec.nu_count());
  out.stored_iteration.resize(stored);
  out.accept_prob.resize(config.iterations);
  out.adapt_log_scale.resize(config.iterations);

  for (long it = 1; it <= config.iterations; ++it) {
    GibbsSampler::SweepInfo info;
    try {
      info = gs.sweep(state, d, rng, it <= config.burn_in);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " +
                           e.what());
    }
    out.accept_prob(it - 1) = info.accept_prob;
    out.adapt_log_scale(it - 1) = gs.proposal().log_scale();

    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      const long row = (it - config.burn_in) / config.thin - 1;
      if (row < stored) {
        out.c.row(row) = state.c;
        const Eigen::MatrixXd a_star =
            spec.resolve_discrimination(state.a_free);
        out.a_star.row(row) =
            Eigen::Map<const Eigen::VectorXd>(a_star.data(), a_star.size());
        out.theta.row(row) = state.theta;
        out.beta.row(row) = state.beta;
        out.t_free.row(row) = state.log_t.array().exp();
        out.phi.row(row) = state.log_phi.array().exp();
        out.nu.row(row) = state.nu;
        out.stored_iteration(row) = static_cast<double>(it);
      }
    }
  }
  return out;
}

ChainOutput pool_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw ValidationError("pool_chains: no chains");
  ChainOutput out = chains.front();
  if (chains.size() == 1) return out;
  long rows = 0, sweeps = 0;
  for (const auto& c : chains) {
    if (c.n != out.n || c.p != out.p || c.spec.q() != out.spec.q() ||
        c.m() != out.m())
      throw ValidationError("pool_chains: chains have different shapes");
    rows += c.samples();
    sweeps += c.accept_prob.size();
  }
  auto stack = [&](auto getter) {
    Eigen::MatrixXd all(rows, getter(chains.front()).cols());
    long at = 0;
    for (const auto& c : chains) {
      all.middleRows(at, getter(c).rows()) = getter(c);
      at += getter(c).rows();
    }
    return all;
  };
  out.c = stack([](const ChainOutput& c) { return c.c; });
  out.a_star = stack([](const ChainOutput& c) { return c.a_star; });
  out.theta = stack([](const ChainOutput& c) { return c.theta; });
  out.beta = stack([](const ChainOutput& c) { return c.beta; });
  out.t_free = stack([](const ChainOutput& c) { return c.t_free; });
  out.phi = stack([](const ChainOutput& c) { return c.phi; });
  out.nu = stack([](const ChainOutput& c) { return c.nu; });
  out.stored_iteration.resize(rows);
  out.accept_prob.resize(sweeps);
  out.adapt_log_scale.resize(sweeps);
  long at = 0, sat = 0;
  for (const auto& c : chains) {
    out.stored_iteration.segment(at, c.samples()) = c.stored_iteration;
    out.accept_prob.segment(sat, c.accept_prob.size()) = c.accept_prob;
    out.adapt_log_scale.segment(sat, c.adapt_log_scale.size()) =
        c.adapt_log_scale;
    at += c.samples();
    sat += c.accept_prob.size();
  }
  return out;
}

ChainOutput rescale_samples(const ChainOutput& chain) {
  if (chain.samples() == 0)
    throw NumericalError("rescale: chain holds no samples");
  const int m = chain.m();
  const int n = chain.n;
  const int p = chain.p;
  const int q = chain.spec.q();

  ChainOutput out = chain;
  for (int k = 0; k < m; ++k) {
    const auto block = chain.theta.middleCols(k * n, n);
    const double mean = block.mean();
    const double count = static_cast<double>(block.size());
    const double sd =
        std::sqrt((block.array() - mean).square().sum() / (count - 1.0));
    if (!(sd > 0.0))
      throw NumericalError("rescale: factor " + std::to_string(k + 1) +
                           " has zero variance across the chain");
    out.theta.middleCols(k * n, n) /= sd;
    out.a_star.middleCols(k * q, q) *= sd;
    if (p > 0) out.beta.middleCols(k * p, p) /= sd;
    out.residual_sd(k) /= sd;
    // Free loading entries live in column-major pattern order.
    int next = 0;
    for (int col = 0; col < chain.spec.loading_pattern.cols(); ++col)
      for (int row = 0; row < chain.spec.loading_pattern.rows(); ++row)
        if (chain.spec.loading_pattern(row, col)) {
          if (row == k) out.t_free.col(next) /= sd;
          ++next;
        }
  }
  out.rescaled = true;
  return out;
}

}  // namespace geofactor
