#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hybridssr/dataset.hpp"

namespace hybridssr {

struct FitOptions {
    int max_iter = 50;
    double tol = 1e-8;    // on the largest coefficient change
    double ridge = 1e-6;  // penalty used only after separation is detected
};

/// Logistic model for Pr(R = 1 | X); gamma[0] is the intercept.
struct PropensityModel {
    std::vector<double> gamma;
    bool converged = false;
    bool ridge_applied = false;  // separation fallback engaged
    int iterations = 0;
    double final_gradient_norm = 0.0;

    std::size_t num_covariates() const {
        return gamma.empty() ? 0 : gamma.size() - 1;
    }
};

inline constexpr double kPropensityClamp = 1e-12;

/*
 * Maximum-likelihood fit by iteratively reweighted least squares on
 * internally standardized covariates. Coefficients are reported on the
 * original covariate scale.
 *
 * Divergent coefficients (quasi-complete separation) trigger a refit with a
 * small ridge penalty; the result then has converged = false and
 * ridge_applied = true. A rank-deficient design throws NumericalError
 * ("singular design").
 */
PropensityModel fit_propensity(const Dataset& dataset,
                               const FitOptions& options = {});

/// logistic(gamma_0 + gamma' x), clamped to [1e-12, 1 - 1e-12].
double predict_propensity(const PropensityModel& model,
                          std::span<const double> x);

/// Unclamped linear predictor gamma_0 + gamma' x.
double linear_predictor(std::span<const double> gamma,
                        std::span<const double> x);

/// Bernoulli log-likelihood of R given covariates at the supplied gamma.
double propensity_log_likelihood(const Dataset& dataset,
                                 std::span<const double> gamma);

/// Gradient of propensity_log_likelihood: sum_i (r_i - e_i) z_i.
std::vector<double> propensity_score(const Dataset& dataset,
                                     std::span<const double> gamma);

/*
 * Per-subject fusion weights. For subject i with propensity e_i:
 *   w_r1 = 0.5 r / P(R=1)
 *   w_r0 = 0.5 (1 / P(R=1)) (1 - r) e / (1 - e)
 * with P(R=1) the empirical proportion n_c / n. Arm probabilities are only
 * available when no current-study arm is masked.
 */
struct WeightSet {
    std::vector<double> e;
    std::vector<double> w_r1;
    std::vector<double> w_r0;
    double p_r1 = 0.0;
    std::optional<double> p_a1;
    std::optional<double> p_a0_given_r1;

    std::size_t size() const { return e.size(); }
    /// w_r1 + w_r0: the weight of the subject's own source.
    double source_weight(std::size_t i) const { return w_r1[i] + w_r0[i]; }
};

WeightSet compute_weights(const Dataset& dataset, const PropensityModel& model);

/// Same construction from externally supplied propensities, one per record.
WeightSet compute_weights(const Dataset& dataset,
                          std::span<const double> propensities);

}  // namespace hybridssr
