#pragma once

#include <array>
#include <cstddef>

#include "hybridssr/dataset.hpp"
#include "hybridssr/errors.hpp"
#include "hybridssr/propensity.hpp"
#include "hybridssr/random.hpp"
#include "hybridssr/ssr.hpp"

namespace hybridssr {

struct TestResult {
    double theta1_hat = 0.0;
    double theta0_hat = 0.0;
    double sigma_star_sq = 0.0;  // for the t-test: pooled variance
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    std::size_t n_used = 0;
    double df = 0.0;  // 0 for the normal reference
};

/// Thrown when more historical controls are requested than the pool holds.
class HistoricalPoolExhausted : public ValidationError {
   public:
    HistoricalPoolExhausted(std::size_t requested, std::size_t available);

    std::size_t requested() const { return requested_; }
    std::size_t available() const { return available_; }
    std::size_t shortfall() const { return requested_ - available_; }

   private:
    std::size_t requested_;
    std::size_t available_;
};

/*
 * Uniform sample of m subjects without replacement. The result keeps the
 * pool's enrollment order and depends only on the stream state.
 */
Dataset sample_historical_controls(const Dataset& historical, std::size_t m,
                                   RandomStream& stream);

/// Per-subject weight on the control mean:
///   (1 - a) / P(A=0|R=1) * w_r1 + w_r0.
std::vector<double> composite_control_weights(const Dataset& final,
                                              const WeightSet& weights);

/*
 * IPW test of H0: theta1 - theta0 = tau0 with the M-estimation variance.
 *   theta1 = (1/N) sum a y / P(A=1)
 *   theta0 = (1/N) sum c y,  c = composite_control_weights
 *   sigma*^2 = (1/N) sum [a / P(A=1)^2 (y - theta1)^2 + c^2 (y - theta0)^2]
 * P(A=1) is taken over the whole analysis set, historical included.
 */
TestResult ipw_test(const Dataset& final, const WeightSet& weights,
                    const DesignParams& design);

/// Stacked estimating equation at (theta1, theta0), divided by N.
std::array<double, 2> estimating_equation_residual(const Dataset& final,
                                                   const WeightSet& weights,
                                                   double theta1,
                                                   double theta0);

/// Empirical diagonal of the sandwich covariance (mean squared influence of
/// each component), assembled from the estimating function.
std::array<double, 2> sandwich_variance_diagonal(const Dataset& final,
                                                 const WeightSet& weights,
                                                 double theta1, double theta0);

/// Pooled-variance two-sample t-test, treated vs all controls (current and
/// historical pooled), no weighting.
TestResult t_test_unadjusted(const Dataset& pooled, const DesignParams& design);

}  // namespace hybridssr
