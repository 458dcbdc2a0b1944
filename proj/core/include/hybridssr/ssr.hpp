#pragma once

#include <optional>

#include "hybridssr/dataset.hpp"
#include "hybridssr/normal.hpp"
#include "hybridssr/propensity.hpp"

namespace hybridssr {

/// Treatment:control randomization ratio within the current study.
struct AllocationRatio {
    int treated = 2;
    int control = 1;

    bool operator==(const AllocationRatio&) const = default;
};

struct DesignParams {
    double alpha = 0.05;  // two-sided unless one_sided
    double power = 0.8;
    double delta = 3.5;
    double tau0 = 0.0;
    double sigma1_sq = 100.0;  // planning variance, current study
    double sigma0_sq = 100.0;  // planning variance, historical controls
    AllocationRatio alloc_ratio{};
    bool one_sided = false;

    /// Throws ValidationError on out-of-range values.
    void validate() const;

    /// z_{1-alpha/2} + z_{power} (z_{1-alpha} when one_sided).
    double z_sum() const;
};

struct SSRResult {
    int strategy = 0;
    long n_hat = 0;       // per group, after ceiling (and floor, if applied)
    double n_raw = 0.0;   // formula value before rounding
    std::optional<double> s1_sq;
    std::optional<double> sigma1_hat_sq;
    std::optional<double> sigma0_hat_sq;
    std::optional<double> inflation1;  // sigma1_hat_sq / sigma1_sq
    std::optional<double> inflation0;
    std::optional<double> k;
    double alpha = 0.0;
    double power = 0.0;
    double delta = 0.0;
    bool floored = false;
};

/// ceil(2 (z_{1-alpha/2} + z_power)^2 sigma^2 / delta^2), per group.
long initial_sample_size(const DesignParams& design, double sigma);
double initial_sample_size_raw(const DesignParams& design, double sigma);

/*
 * Strategy 1: blinded re-estimation from the IPW-weighted one-sample
 * variance of the pooled interim outcomes. Arm labels are never read.
 */
SSRResult ssr_strategy1(const Dataset& interim, const WeightSet& weights,
                        const DesignParams& design);

/*
 * Strategy 2: outcome-free re-estimation. The planning variances are
 * inflated by each source's weight design effect
 *   P(R=s) mean(1{R=s} W^2) / mean(1{R=s} W)^2
 * and combined with k = P(R=1)/P(R=0). Outcomes are never read.
 */
SSRResult ssr_strategy2(const Dataset& interim, const WeightSet& weights,
                        const DesignParams& design);

/// Raises n_hat to `enrolled` when below it; a trial cannot shrink below the
/// subjects it already has.
SSRResult with_enrollment_floor(SSRResult result, long enrolled);

}  // namespace hybridssr
