#include "hybridssr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "hybridssr/normal.hpp"

namespace hybridssr {

HistoricalPoolExhausted::HistoricalPoolExhausted(std::size_t requested,
                                                 std::size_t available)
    : ValidationError("historical pool exhausted: requested " +
                      std::to_string(requested) + ", available " +
                      std::to_string(available) + ", shortfall " +
                      std::to_string(requested - available)),
      requested_(requested),
      available_(available) {}

Dataset sample_historical_controls(const Dataset& historical, std::size_t m,
                                   RandomStream& stream) {
    const std::size_t n = historical.size();
    if (m > n) throw HistoricalPoolExhausted(m, n);

    // partial Fisher-Yates over indices, then restore pool order
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());

    std::vector<SubjectRecord> out;
    out.reserve(m);
    for (std::size_t i : idx) out.push_back(historical[i]);
    return Dataset(historical.covariate_names(), std::move(out),
                   historical.enrollment_ordered());
}

namespace {

struct Arms {
    std::vector<double> a;  // 1 treated, 0 control
    std::vector<double> y;
};

// Unmasked arms and observed outcomes are required for final analyses.
Arms unmask(const Dataset& final, const char* op) {
    Arms out;
    out.a.reserve(final.size());
    out.y.reserve(final.size());
    for (const auto& r : final) {
        if (r.arm == Arm::kMasked) {
            throw ValidationError(std::string(op) +
                                  ": masked arm for subject '" + r.id + "'");
        }
        if (!r.y) {
            throw ValidationError(std::string(op) +
                                  ": missing outcome for subject '" + r.id +
                                  "'");
        }
        out.a.push_back(r.arm == Arm::kTreated ? 1.0 : 0.0);
        out.y.push_back(*r.y);
    }
    return out;
}

void check_weights(const Dataset& final, const WeightSet& weights,
                   const char* op) {
    if (weights.size() != final.size()) {
        throw ValidationError(std::string(op) +
                              ": weight set does not match data");
    }
    if (!weights.p_a1 || !weights.p_a0_given_r1) {
        throw ValidationError(std::string(op) +
                              ": weights were computed on masked arms");
    }
    if (!(*weights.p_a1 > 0.0) || !(*weights.p_a0_given_r1 > 0.0)) {
        throw ValidationError(std::string(op) +
                              ": both arms must be non-empty");
    }
}

}  // namespace

std::vector<double> composite_control_weights(const Dataset& final,
                                              const WeightSet& weights) {
    check_weights(final, weights, "composite_control_weights");
    std::vector<double> c(final.size());
    const double p0 = *weights.p_a0_given_r1;
    for (std::size_t i = 0; i < final.size(); ++i) {
        const double control = final[i].arm == Arm::kControl ? 1.0 : 0.0;
        c[i] = control / p0 * weights.w_r1[i] + weights.w_r0[i];
    }
    return c;
}

TestResult ipw_test(const Dataset& final, const WeightSet& weights,
                    const DesignParams& design) {
    design.validate();
    require_valid(final);
    check_weights(final, weights, "ipw_test");
    if (final.n_current() == 0 || final.n_historical() == 0) {
        throw ValidationError("ipw_test: both sources must be non-empty");
    }
    const Arms arms = unmask(final, "ipw_test");
    const auto c = composite_control_weights(final, weights);
    const double pa1 = *weights.p_a1;
    const auto n = static_cast<double>(final.size());

    TestResult t;
    t.n_used = final.size();
    for (std::size_t i = 0; i < final.size(); ++i) {
        t.theta1_hat += arms.a[i] / pa1 * arms.y[i];
        t.theta0_hat += c[i] * arms.y[i];
    }
    t.theta1_hat /= n;
    t.theta0_hat /= n;

    double s = 0.0;
    for (std::size_t i = 0; i < final.size(); ++i) {
        const double d1 = arms.y[i] - t.theta1_hat;
        const double d0 = arms.y[i] - t.theta0_hat;
        s += arms.a[i] / (pa1 * pa1) * d1 * d1 + c[i] * c[i] * d0 * d0;
    }
    t.sigma_star_sq = s / n;
    if (!(t.sigma_star_sq > 0.0)) throw NumericalError("degenerate variance");

    t.statistic = (t.theta1_hat - t.theta0_hat - design.tau0) /
                  std::sqrt(t.sigma_star_sq / n);
    t.p_value = two_sided_normal_p(t.statistic);
    t.reject = t.p_value < design.alpha;
    return t;
}

std::array<double, 2> estimating_equation_residual(const Dataset& final,
                                                   const WeightSet& weights,
                                                   double theta1,
                                                   double theta0) {
    const Arms arms = unmask(final, "estimating_equation_residual");
    const auto c = composite_control_weights(final, weights);
    const double pa1 = *weights.p_a1;
    std::array<double, 2> u{0.0, 0.0};
    for (std::size_t i = 0; i < final.size(); ++i) {
        u[0] += arms.a[i] / pa1 * (arms.y[i] - theta1);
        u[1] += c[i] * (arms.y[i] - theta0);
    }
    const auto n = static_cast<double>(final.size());
    return {u[0] / n, u[1] / n};
}

std::array<double, 2> sandwich_variance_diagonal(const Dataset& final,
                                                 const WeightSet& weights,
                                                 double theta1, double theta0) {
    const Arms arms = unmask(final, "sandwich_variance_diagonal");
    const auto c = composite_control_weights(final, weights);
    const double pa1 = *weights.p_a1;
    std::array<double, 2> v{0.0, 0.0};
    for (std::size_t i = 0; i < final.size(); ++i) {
        const double psi1 = arms.a[i] / pa1 * (arms.y[i] - theta1);
        const double psi0 = c[i] * (arms.y[i] - theta0);
        v[0] += psi1 * psi1;
        v[1] += psi0 * psi0;
    }
    const auto n = static_cast<double>(final.size());
    return {v[0] / n, v[1] / n};
}

TestResult t_test_unadjusted(const Dataset& pooled, const DesignParams& design) {
    design.validate();
    require_valid(pooled);
    const Arms arms = unmask(pooled, "t_test_unadjusted");
    double n1 = 0, n0 = 0, s1 = 0, s0 = 0;
    for (std::size_t i = 0; i < arms.a.size(); ++i) {
        if (arms.a[i] > 0.5) {
            n1 += 1, s1 += arms.y[i];
        } else {
            n0 += 1, s0 += arms.y[i];
        }
    }
    if (n1 < 2 || n0 < 2) {
        throw ValidationError("t_test_unadjusted: each arm needs >= 2 subjects");
    }
    const double m1 = s1 / n1, m0 = s0 / n0;
    double ss = 0.0;
    for (std::size_t i = 0; i < arms.a.size(); ++i) {
        const double d = arms.y[i] - (arms.a[i] > 0.5 ? m1 : m0);
        ss += d * d;
    }
    TestResult t;
    t.n_used = pooled.size();
    t.theta1_hat = m1;
    t.theta0_hat = m0;
    t.df = n1 + n0 - 2.0;
    t.sigma_star_sq = ss / t.df;
    const double se = std::sqrt(t.sigma_star_sq * (1.0 / n1 + 1.0 / n0));
    if (!(se > 0.0)) throw NumericalError("degenerate variance");
    t.statistic = (m1 - m0 - design.tau0) / se;
    const boost::math::students_t dist(t.df);
    t.p_value = 2.0 * boost::math::cdf(boost::math::complement(
                          dist, std::fabs(t.statistic)));
    t.reject = t.p_value < design.alpha;
    return t;
}

}  // namespace hybridssr
