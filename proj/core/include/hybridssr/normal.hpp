#pragma once

namespace hybridssr {

/// Standard normal quantile, Wichura's AS241 (PPND16); |error| < 1e-15
/// relative over (0, 1). Throws ValidationError outside (0, 1).
double z_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Two-sided normal p-value 2 * (1 - Phi(|z|)), computed without
/// cancellation.
double two_sided_normal_p(double z);

}  // namespace hybridssr
