#pragma once

#include "geofactor/rng.hpp"

namespace geofactor {

double norm_pdf(double x);
double norm_cdf(double x);
/// Upper tail P(X > x); accurate for large x.
double norm_sf(double x);
/// Inverse of norm_cdf, full double precision.
double norm_quantile(double p);
/// Probit probability clamped to [1e-12, 1 - 1e-12] before the log.
double clamped_log_probit(double eta, int y);

/// Draw from N(mean, 1) restricted to (lower, inf).
///
/// Inverse-CDF on the complementary tail while the standardized bound is
/// below 4, Robert's exponential-rejection algorithm beyond; stable for
/// standardized bounds out to +-30 and further.
double rtnorm_lower(RngStream& rng, double mean, double lower);
/// Draw from N(mean, 1) restricted to (-inf, upper).
double rtnorm_upper(RngStream& rng, double mean, double upper);

}  // namespace geofactor
