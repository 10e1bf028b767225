#include "geofactor/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace geofactor {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kTailSwitch = 4.0;  // standardized bound for tail algorithm
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double norm_quantile(double p) {
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double clamped_log_probit(double eta, int y) {
  double p = y == 1 ? norm_cdf(eta) : norm_sf(eta);
  if (p < 1e-12) p = 1e-12;
  if (p > 1.0 - 1e-12) p = 1.0 - 1e-12;
  return std::log(p);
}

namespace {

// Standard truncated draw: X ~ N(0,1) | X > a.
double rtnorm_std_lower(RngStream& rng, double a) {
  if (a <= kTailSwitch) {
    // Map a uniform fraction of the surviving upper-tail mass back through
    // the survival function; working on the tail side keeps precision when
    // a is large positive and reduces to a plain normal draw as a -> -inf.
    const double q = norm_sf(a);
    const double u = rng.uniform();
    return kSqrt2 * boost::math::erfc_inv(2.0 * u * q);
  }
  // Robert (1995) exponential rejection for the deep tail.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log(rng.uniform()) / lambda;
    const double d = x - lambda;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
  }
}

}  // namespace

double rtnorm_lower(RngStream& rng, double mean, double lower) {
  return mean + rtnorm_std_lower(rng, lower - mean);
}

double rtnorm_upper(RngStream& rng, double mean, double upper) {
  return -(-mean + rtnorm_std_lower(rng, -upper + mean));
}

}  // namespace geofactor
