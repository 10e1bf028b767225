#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "geofactor/adaptive.hpp"
#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"
#include "geofactor/oracle.hpp"
#include "geofactor/sampler.hpp"
#include "geofactor/simulate.hpp"
#include "helpers.hpp"

using namespace geofactor;

namespace {

struct Frozen {
  Dataset data;
  ModelSpec spec;
  SamplerConfig config;
  ChainState state;
  TrueParams par;
};

// n = 3, q = 2, m = 1 instance with one GP factor and a covariate, frozen
// at known parameter values.
Frozen make_frozen(bool with_covariate = true) {
  Frozen f;
  RngStream rng(2024, "test");
  f.data = testutil::tiny_dataset(3, 2, rng);
  if (with_covariate) {
    Eigen::MatrixXd raw(3, 1);
    raw << -1.0, 0.2, 1.4;
    const Standardized st = standardize_covariates(raw);
    f.data.X = st.X;
    f.data.x_mean = st.mean;
    f.data.x_sd = st.sd;
    f.data.covariate_names = {"cov_1"};
  }
  f.spec = testutil::simple_spec(2, 1);
  f.spec.priors = default_priors(f.spec, f.data.p());
  f.spec.priors.phi_log_mean.setConstant(std::log(0.4));
  f.config.iterations = 10;
  f.config.burn_in = 5;
  f.config.seed = 7;

  GibbsSampler gs(f.data, f.spec, f.config);
  RngStream init_rng(7, "chain", 0);
  f.state = gs.init_state(f.data, init_rng);

  // Freeze every block at hand-picked values.
  f.state.c = Eigen::Vector2d(0.3, -0.2);
  f.state.a_free = Eigen::Vector2d(1.1, 0.8);
  if (with_covariate) f.state.beta = Eigen::VectorXd::Constant(1, 0.5);
  f.state.z << 0.7, -0.4, 1.2, 0.1, -0.8, 0.5;
  f.state.log_t.setConstant(std::log(0.9));
  f.state.log_phi.setConstant(std::log(0.4));
  CovParamsEval eval = eval_cov_params(
      Eigen::Vector2d(std::log(0.9), std::log(0.4)), f.state.theta,
      f.state.beta, f.data, f.spec);
  f.state.fac = std::move(eval.fac);
  f.state.cov_log_target = eval.log_target;

  f.par.c = f.state.c;
  f.par.a = f.spec.resolve_discrimination(f.state.a_free);
  f.par.b = with_covariate ? Eigen::MatrixXd::Constant(1, 1, 0.5)
                           : Eigen::MatrixXd(0, 1);
  f.par.t = Eigen::MatrixXd::Constant(1, 1, 0.9);
  f.par.phi = Eigen::VectorXd::Constant(1, 0.4);
  f.par.r_v = Eigen::MatrixXd::Identity(1, 1);
  f.par.d = Eigen::VectorXd::Ones(1);
  return f;
}

struct EmpiricalMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

template <typename DrawFn>
EmpiricalMoments empirical(int dim, int reps, DrawFn&& draw) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd x(dim);
  for (int r = 0; r < reps; ++r) {
    draw(x);
    mean += x;
    sq += x * x.transpose();
  }
  mean /= reps;
  EmpiricalMoments out;
  out.mean = mean;
  out.cov = sq / reps - mean * mean.transpose();
  return out;
}

void check_moments(const EmpiricalMoments& emp, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov, int reps, double z = 4.0) {
  for (int i = 0; i < mean.size(); ++i) {
    const double se = std::sqrt(cov(i, i) / reps);
    INFO("component ", i, ": ", emp.mean(i), " vs ", mean(i));
    CHECK(std::abs(emp.mean(i) - mean(i)) < z * se);
    for (int j = 0; j < mean.size(); ++j) {
      const double se_c =
          std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / reps);
      CHECK(std::abs(emp.cov(i, j) - cov(i, j)) < z * se_c);
    }
  }
}

}  // namespace

TEST_CASE("init_state policy and determinism") {
  RngStream rng(3, "test");
  Dataset d = testutil::tiny_dataset(5, 2, rng);
  d.obs_mask(1, 0) = 0;
  d.obs_mask(4, 1) = 0;
  ModelSpec spec = testutil::simple_spec(2, 2);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.seed = 11;
  GibbsSampler gs(d, spec, config);

  RngStream r1(11, "chain", 0);
  RngStream r2(11, "chain", 0);
  const ChainState s1 = gs.init_state(d, r1);
  const ChainState s2 = gs.init_state(d, r2);
  CHECK(s1.z == s2.z);
  CHECK(s1.a_free == s2.a_free);

  for (int j = 0; j < d.q(); ++j)
    for (int i = 0; i < d.n(); ++i) {
      const double z = s1.z(j * d.n() + i);
      if (!d.obs_mask(i, j)) continue;
      CHECK(z == (d.y(i, j) == 1 ? 0.5 : -0.5));
    }
  CHECK(s1.theta.isZero());
  CHECK(s1.c.isZero());
  // Sign-constrained loadings start at the prior mean 1.
  CHECK(s1.a_free(0) == 1.0);
}

TEST_CASE("sample_aux_z honors the observation signs") {
  Frozen f = make_frozen();
  RngStream rng(5, "test");
  for (int rep = 0; rep < 500; ++rep) {
    sample_aux_z(f.state, f.data, f.spec, rng);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i) {
        const double z = f.state.z(j * 3 + i);
        if (f.data.y(i, j) == 1)
          CHECK(z > 0.0);
        else
          CHECK(z <= 0.0);
      }
  }
}

TEST_CASE("sample_aux_z half-normal mean at zero predictor") {
  Frozen f = make_frozen(false);
  f.state.c.setZero();
  f.state.a_free.setZero();
  f.state.theta.setZero();
  f.data.y.setOnes();
  RngStream rng(6, "test");
  const int reps = 100000;
  double acc = 0;
  for (int r = 0; r < reps; ++r) {
    sample_aux_z(f.state, f.data, f.spec, rng);
    acc += f.state.z(0);
  }
  const double expect = std::sqrt(2.0 / 3.14159265358979323846);
  CHECK(std::abs(acc / reps - expect) <
        3 * std::sqrt((1 - expect * expect) / reps));
}

TEST_CASE("theta conditional matches the joint-Gaussian oracle") {
  Frozen f = make_frozen();
  const JointGaussianOracle oracle(f.par, f.data.coords, f.data.X);
  const OracleMoments cond = oracle.conditional(1, 0, f.state.z);

  RngStream rng(8, "test");
  const int reps = 100000;
  const EmpiricalMoments emp = empirical(3, reps, [&](Eigen::VectorXd& x) {
    sample_theta(f.state, f.data, f.spec, rng);
    x = f.state.theta;
  });
  check_moments(emp, cond.mean, cond.cov, reps);
}

TEST_CASE("theta conditional reduces to the prior without information") {
  Frozen f = make_frozen(false);
  f.state.a_free.setZero();  // A* = 0: likelihood is flat in theta
  f.state.beta.resize(0);
  RngStream rng(9, "test");
  const int reps = 60000;
  const EmpiricalMoments emp = empirical(3, reps, [&](Eigen::VectorXd& x) {
    sample_theta(f.state, f.data, f.spec, rng);
    x = f.state.theta;
  });
  check_moments(emp, Eigen::VectorXd::Zero(3), f.state.fac.sigma(), reps);
}

TEST_CASE("scalar theta conditional: var 1/2, mean (z - c)/2") {
  // n = q = m = 1, a = 1, T = 0, D = 1.
  RngStream setup(10, "test");
  Frozen f;
  f.data = testutil::tiny_dataset(1, 1, setup);
  f.spec = testutil::simple_spec(1, 1, 0);
  f.spec.priors = default_priors(f.spec, 0);
  f.config.seed = 3;
  GibbsSampler gs(f.data, f.spec, f.config);
  RngStream init_rng(3, "chain", 0);
  f.state = gs.init_state(f.data, init_rng);
  f.state.c = Eigen::VectorXd::Constant(1, 0.25);
  f.state.a_free = Eigen::VectorXd::Constant(1, 1.0);
  f.state.z = Eigen::VectorXd::Constant(1, 1.75);

  RngStream rng(11, "test");
  const int reps = 100000;
  const EmpiricalMoments emp = empirical(1, reps, [&](Eigen::VectorXd& x) {
    sample_theta(f.state, f.data, f.spec, rng);
    x = f.state.theta;
  });
  check_moments(emp, Eigen::VectorXd::Constant(1, (1.75 - 0.25) / 2.0),
                Eigen::MatrixXd::Constant(1, 1, 0.5), reps);
}

TEST_CASE("beta conditional matches the GLS oracle") {
  Frozen f = make_frozen();
  f.state.theta << 0.4, -0.6, 0.9;

  // Direct formula: (X' S^-1 X + prior^-1)^-1 and matching mean.
  const Eigen::MatrixXd s_inv = f.state.fac.sigma().inverse();
  const Eigen::MatrixXd xk = f.data.X;  // m = 1
  const double prior_var =
      f.spec.priors.beta_sd(0) * f.spec.priors.beta_sd(0);
  const Eigen::MatrixXd prec =
      xk.transpose() * s_inv * xk +
      Eigen::MatrixXd::Constant(1, 1, 1.0 / prior_var);
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * xk.transpose() * s_inv * f.state.theta;

  RngStream rng(12, "test");
  const int reps = 100000;
  const EmpiricalMoments emp = empirical(1, reps, [&](Eigen::VectorXd& x) {
    sample_beta(f.state, f.data, f.spec, rng);
    x = f.state.beta;
  });
  check_moments(emp, mean, cov, reps);
}

TEST_CASE("beta conditional equals the prior when X vanishes") {
  Frozen f = make_frozen();
  f.data.X.setZero();  // not a valid standardized design, but legal algebra
  RngStream rng(13, "test");
  const int reps = 60000;
  const double prior_var =
      f.spec.priors.beta_sd(0) * f.spec.priors.beta_sd(0);
  const EmpiricalMoments emp = empirical(1, reps, [&](Eigen::VectorXd& x) {
    sample_beta(f.state, f.data, f.spec, rng);
    x = f.state.beta;
  });
  check_moments(emp, Eigen::VectorXd::Zero(1),
                Eigen::MatrixXd::Constant(1, 1, prior_var), reps);
}

TEST_CASE("c-block variance is exact and the conditional is right") {
  CHECK(std::abs(c_conditional_variance(100, 1.0) - 1.0 / 101.0) < 1e-12);
  CHECK(std::abs(c_conditional_variance(1, 1.0) - 0.5) < 1e-12);
  CHECK(std::abs(c_conditional_variance(7, 0.5) - 1.0 / (7.0 + 4.0)) < 1e-12);

  Frozen f = make_frozen();
  // Zero residuals force the posterior mean to zero.
  const Eigen::MatrixXd theta = f.state.theta_matrix(3, 1);
  const Eigen::MatrixXd a_star = f.spec.resolve_discrimination(f.state.a_free);
  for (int j = 0; j < 2; ++j)
    f.state.z.segment(j * 3, 3) = theta * a_star.row(j).transpose();

  RngStream rng(14, "test");
  const int reps = 100000;
  const EmpiricalMoments emp = empirical(2, reps, [&](Eigen::VectorXd& x) {
    sample_c(f.state, f.data, f.spec, rng);
    x = f.state.c;
  });
  const double var = c_conditional_variance(3, 1.0);
  check_moments(emp, Eigen::VectorXd::Zero(2),
                var * Eigen::MatrixXd::Identity(2, 2), reps);
}

TEST_CASE("a conditional matches the ridge oracle") {
  Frozen f = make_frozen();
  f.state.theta << 0.9, -0.3, 0.5;
  const Eigen::MatrixXd theta = f.state.theta_matrix(3, 1);

  const int reps = 100000;
  RngStream rng(15, "test");
  const EmpiricalMoments emp = empirical(2, reps, [&](Eigen::VectorXd& x) {
    sample_a(f.state, f.data, f.spec, rng);
    x = f.state.a_free;
  });

  // Items are independent given theta; the prior on item 1's loading is
  // the sign-constrained N(1, 0.45^2), item 2's is N(0, 1).
  for (int j = 0; j < 2; ++j) {
    const double prior_mean = f.spec.priors.a_mean(j, 0);
    const double prior_sd = f.spec.priors.a_sd(j, 0);
    const Eigen::VectorXd resid =
        f.state.z.segment(j * 3, 3) -
        Eigen::VectorXd::Constant(3, f.state.c(j));
    const double prec =
        theta.col(0).squaredNorm() + 1.0 / (prior_sd * prior_sd);
    const double mean =
        (theta.col(0).dot(resid) + prior_mean / (prior_sd * prior_sd)) / prec;
    CHECK(std::abs(emp.mean(j) - mean) < 4 * std::sqrt(1.0 / prec / reps));
    CHECK(std::abs(emp.cov(j, j) - 1.0 / prec) <
          4 * std::sqrt(2.0 / prec / prec / reps));
    CHECK(std::abs(emp.cov(0, 1)) < 4 * std::sqrt(1.0 / prec / prec / reps));
  }
}

TEST_CASE("a conditional equals the prior when theta is zero") {
  Frozen f = make_frozen();
  f.state.theta.setZero();
  f.state.z.setZero();
  f.state.c.setZero();
  RngStream rng(16, "test");
  const int reps = 60000;
  const EmpiricalMoments emp = empirical(2, reps, [&](Eigen::VectorXd& x) {
    sample_a(f.state, f.data, f.spec, rng);
    x = f.state.a_free;
  });
  Eigen::VectorXd mean(2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  for (int j = 0; j < 2; ++j) {
    mean(j) = f.spec.priors.a_mean(j, 0);
    cov(j, j) = f.spec.priors.a_sd(j, 0) * f.spec.priors.a_sd(j, 0);
  }
  check_moments(emp, mean, cov, reps);
}

TEST_CASE("hard sign mode truncates the constrained coordinate") {
  Frozen f = make_frozen();
  f.spec.sign_mode = SignMode::hard;
  // Push the unconstrained conditional mean negative for item 1.
  f.state.theta << 0.9, -0.3, 0.5;
  f.state.z.segment(0, 3) = Eigen::Vector3d(-3.0, 1.0, -2.5);
  RngStream rng(17, "test");
  for (int rep = 0; rep < 5000; ++rep) {
    sample_a(f.state, f.data, f.spec, rng);
    CHECK(f.state.a_free(0) > 0.0);  // item 1 loading is sign-constrained
  }
}

TEST_CASE("fully fixed discrimination row is a no-op") {
  RngStream setup(18, "test");
  Dataset d = testutil::tiny_dataset(4, 1, setup);
  ModelSpec spec;
  spec.m = 1;
  ItemConstraint con;
  con.fixed = Eigen::VectorXd::Constant(1, 1.0);
  con.active = Eigen::VectorXi::Zero(1);
  con.signs.assign(1, Sign::free);
  spec.constraints = {con};
  spec.loading_pattern = Eigen::MatrixXi::Zero(1, 0);
  spec.residual_sd = Eigen::VectorXd::Ones(1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  GibbsSampler gs(d, spec, config);
  RngStream rng(19, "chain", 0);
  ChainState s = gs.init_state(d, rng);
  CHECK(s.a_free.size() == 0);
  sample_a(s, d, spec, rng);  // must not throw or touch anything
  CHECK(s.a_free.size() == 0);
  CHECK(spec.resolve_discrimination(s.a_free)(0, 0) == 1.0);
}

TEST_CASE("adaptation schedule and MH decision") {
  CHECK(adapt_gamma(0.7, 0.8, 1) == 0.7);
  CHECK(adapt_gamma(0.7, 0.8, 1000) ==
        doctest::Approx(0.7 / std::pow(1000.0, 0.8)));
  // Zero step is always accepted.
  CHECK(mh_accepts(0.0, 0.999999));
  CHECK(mh_accepts(0.0, 1e-12));
  CHECK_FALSE(mh_accepts(-50.0, 0.999999));
}

TEST_CASE("adaptive RWM reaches the target acceptance on a 3-d Gaussian") {
  AdaptiveRwm rwm(3, 0.7, 0.8, 0.234);
  const auto log_target = [](const Eigen::VectorXd& x) {
    return -0.5 * x.squaredNorm();
  };
  RngStream rng(20, "test");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  double lp = log_target(x);
  double acc = 0.0;
  const int iters = 20000;
  const int tail = 10000;
  for (int i = 0; i < iters; ++i) {
    const AdaptiveRwm::Step step = rwm.step(log_target, x, lp, rng, true);
    if (i >= iters - tail) acc += step.accepted ? 1.0 : 0.0;
  }
  CHECK(std::abs(acc / tail - 0.234) < 0.06);
}

TEST_CASE("cov-params MH leaves a no-op model alone") {
  // No free T entries, no GPs, m = 1: the MH block has no parameters.
  RngStream setup(21, "test");
  Dataset d = testutil::tiny_dataset(6, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1, 0);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 20;
  config.burn_in = 10;
  GibbsSampler gs(d, spec, config);
  RngStream rng(22, "chain", 0);
  ChainState s = gs.init_state(d, rng);
  const auto info = gs.sweep(s, d, rng, true);
  CHECK(info.accept_prob == 1.0);
}

TEST_CASE("sign coherence holds after full sweeps") {
  RngStream setup(23, "test");
  Dataset d = testutil::tiny_dataset(12, 3, setup);
  d.obs_mask(2, 1) = 0;
  ModelSpec spec = testutil::simple_spec(3, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 50;
  config.burn_in = 10;
  GibbsSampler gs(d, spec, config);
  RngStream rng(24, "chain", 0);
  ChainState s = gs.init_state(d, rng);
  for (int it = 0; it < 50; ++it) {
    gs.sweep(s, d, rng, it < 10);
    for (int j = 0; j < d.q(); ++j)
      for (int i = 0; i < d.n(); ++i) {
        if (!d.obs_mask(i, j)) continue;
        const double z = s.z(j * d.n() + i);
        CHECK((d.y(i, j) == 1) == (z > 0.0));
      }
  }
}

TEST_CASE("run_chain stores the right number of samples") {
  RngStream setup(25, "test");
  Dataset d = testutil::tiny_dataset(8, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 100;
  config.burn_in = 50;
  config.thin = 10;
  config.seed = 5;
  const ChainOutput out = run_chain(d, spec, config);
  CHECK(out.samples() == 5);
  CHECK(out.stored_iteration(0) == 60.0);
  CHECK(out.stored_iteration(4) == 100.0);
}

TEST_CASE("run_chain is reproducible and chains are distinct") {
  RngStream setup(26, "test");
  Dataset d = testutil::tiny_dataset(8, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 60;
  config.burn_in = 20;
  config.seed = 123;
  const ChainOutput a = run_chain(d, spec, config, 0);
  const ChainOutput b = run_chain(d, spec, config, 0);
  const ChainOutput c = run_chain(d, spec, config, 1);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("rescaling restores unit factor scale without changing fit") {
  RngStream setup(27, "test");
  Dataset d = testutil::tiny_dataset(10, 3, setup);
  ModelSpec spec = testutil::simple_spec(3, 1);
  // Give item 3 a fixed nonzero loading so the resolved matrix exercises
  // the constraint offsets under rescaling.
  spec.constraints[2].active(0) = 0;
  spec.constraints[2].fixed(0) = 1.0;
  spec.constraints[2].signs[0] = Sign::free;
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 80;
  config.burn_in = 30;
  config.seed = 9;
  const ChainOutput chain = run_chain(d, spec, config);
  const ChainOutput scaled = rescale_samples(chain);

  const int n = chain.n;
  const int q = spec.q();
  // Pooled factor sd is one afterwards.
  const auto block = scaled.theta.leftCols(n);
  const double mean = block.mean();
  const double sd = std::sqrt((block.array() - mean).square().sum() /
                              (block.size() - 1.0));
  CHECK(std::abs(sd - 1.0) < 1e-8);

  // Item linear predictors are untouched.
  for (long s = 0; s < chain.samples(); ++s)
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < n; ++i) {
        const double before =
            chain.a_star(s, j) * chain.theta(s, i);  // m = 1 layout
        const double after = scaled.a_star(s, j) * scaled.theta(s, i);
        CHECK(std::abs(before - after) < 1e-12);
      }

  // Loadings and residual scale transform consistently.
  const auto raw_block = chain.theta.leftCols(n);
  const double raw_mean = raw_block.mean();
  const double raw_sd =
      std::sqrt((raw_block.array() - raw_mean).square().sum() /
                (raw_block.size() - 1.0));
  CHECK(scaled.residual_sd(0) ==
        doctest::Approx(chain.residual_sd(0) / raw_sd).epsilon(1e-12));
  for (long s = 0; s < chain.samples(); ++s)
    CHECK(scaled.t_free(s, 0) ==
          doctest::Approx(chain.t_free(s, 0) / raw_sd).epsilon(1e-12));

  // Already unit-scale chains stay put.
  const ChainOutput twice = rescale_samples(scaled);
  CHECK((twice.theta - scaled.theta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((twice.a_star - scaled.a_star).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rescaling a degenerate chain fails loudly") {
  RngStream setup(28, "test");
  Dataset d = testutil::tiny_dataset(4, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 10;
  config.burn_in = 5;
  ChainOutput chain = run_chain(d, spec, config);
  chain.theta.setZero();
  CHECK_THROWS_AS(rescale_samples(chain), NumericalError);
}

TEST_CASE("runaway covariance proposals are vetoed, not fatal") {
  Frozen f = make_frozen();
  CHECK_THROWS_AS(eval_cov_params(Eigen::Vector2d(-500.0, std::log(0.4)),
                                  f.state.theta, f.state.beta, f.data, f.spec),
                  NumericalError);
  CHECK_THROWS_AS(eval_cov_params(Eigen::Vector2d(std::log(0.9), 800.0),
                                  f.state.theta, f.state.beta, f.data, f.spec),
                  NumericalError);
}

TEST_CASE("zero-step proposals are accepted in the cov-params block") {
  // With the proposal pinned at the current point the MH ratio is one.
  Frozen f = make_frozen();
  const Eigen::VectorXd x = Eigen::Vector2d(std::log(0.9), std::log(0.4));
  const CovParamsEval at_x =
      eval_cov_params(x, f.state.theta, f.state.beta, f.data, f.spec);
  const CovParamsEval again =
      eval_cov_params(x, f.state.theta, f.state.beta, f.data, f.spec);
  CHECK(at_x.log_target == again.log_target);
  CHECK(mh_accepts(again.log_target - at_x.log_target, 0.9999999));
}

TEST_CASE("pool_chains concatenates sample blocks") {
  RngStream setup(29, "test");
  Dataset d = testutil::tiny_dataset(6, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 40;
  config.burn_in = 20;
  config.seed = 77;
  const ChainOutput a = run_chain(d, spec, config, 0);
  const ChainOutput b = run_chain(d, spec, config, 1);
  const ChainOutput pooled = pool_chains({a, b});
  CHECK(pooled.samples() == a.samples() + b.samples());
  CHECK(pooled.c.topRows(a.samples()) == a.c);
  CHECK(pooled.c.bottomRows(b.samples()) == b.c);
}
