#include "hybridssr/ssr.hpp"

#include <cmath>
#include <string>

#include "hybridssr/errors.hpp"

namespace hybridssr {

void DesignParams::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(alpha)) throw ValidationError("design: alpha outside (0, 1)");
    if (!in_unit(power)) throw ValidationError("design: power outside (0, 1)");
    if (!(delta > 0.0)) throw ValidationError("design: delta must be > 0");
    if (!(sigma1_sq > 0.0) || !(sigma0_sq > 0.0)) {
        throw ValidationError("design: planning variances must be > 0");
    }
    if (!std::isfinite(tau0)) throw ValidationError("design: tau0 not finite");
    if (alloc_ratio.treated < 1 || alloc_ratio.control < 1) {
        throw ValidationError("design: allocation ratio components must be >= 1");
    }
}

double DesignParams::z_sum() const {
    const double za = z_quantile(one_sided ? 1.0 - alpha : 1.0 - alpha / 2.0);
    return za + z_quantile(power);
}

namespace {

long ceil_size(double raw) {
    if (!std::isfinite(raw)) throw NumericalError("sample size not finite");
    return std::max(1L, static_cast<long>(std::ceil(raw)));
}

SSRResult echo(int strategy, const DesignParams& design) {
    SSRResult r;
    r.strategy = strategy;
    r.alpha = design.alpha;
    r.power = design.power;
    r.delta = design.delta;
    return r;
}

}  // namespace

double initial_sample_size_raw(const DesignParams& design, double sigma) {
    design.validate();
    if (!(sigma > 0.0)) throw ValidationError("planning SD must be > 0");
    const double z = design.z_sum();
    return 2.0 * z * z * sigma * sigma / (design.delta * design.delta);
}

long initial_sample_size(const DesignParams& design, double sigma) {
    return ceil_size(initial_sample_size_raw(design, sigma));
}

SSRResult ssr_strategy1(const Dataset& interim, const WeightSet& weights,
                        const DesignParams& design) {
    design.validate();
    require_valid(interim);
    if (weights.size() != interim.size()) {
        throw ValidationError("ssr_strategy1: weight set does not match data");
    }
    double sum_w = 0.0, sum_wy = 0.0;
    for (std::size_t i = 0; i < interim.size(); ++i) {
        const auto& y = interim[i].y;
        if (!y) throw ValidationError("strategy 1 requires outcomes");
        const double w = weights.source_weight(i);
        sum_w += w;
        sum_wy += w * *y;
    }
    if (!(sum_w > 1.0)) {
        throw NumericalError("insufficient effective weight");
    }
    const double ybar = sum_wy / sum_w;
    double ss = 0.0;
    for (std::size_t i = 0; i < interim.size(); ++i) {
        const double dev = *interim[i].y - ybar;
        ss += weights.source_weight(i) * dev * dev;
    }
    SSRResult r = echo(1, design);
    r.s1_sq = ss / (sum_w - 1.0);
    const double z = design.z_sum();
    r.n_raw = 2.0 * z * z * *r.s1_sq / (design.delta * design.delta);
    r.n_hat = ceil_size(r.n_raw);
    return r;
}

SSRResult ssr_strategy2(const Dataset& interim, const WeightSet& weights,
                        const DesignParams& design) {
    design.validate();
    require_valid(interim);
    if (weights.size() != interim.size()) {
        throw ValidationError("ssr_strategy2: weight set does not match data");
    }
    const auto n = static_cast<double>(interim.size());
    double m1 = 0.0, m1sq = 0.0, m0 = 0.0, m0sq = 0.0;
    for (std::size_t i = 0; i < interim.size(); ++i) {
        if (interim[i].is_current()) {
            m1 += weights.w_r1[i];
            m1sq += weights.w_r1[i] * weights.w_r1[i];
        } else {
            m0 += weights.w_r0[i];
            m0sq += weights.w_r0[i] * weights.w_r0[i];
        }
    }
    m1 /= n, m1sq /= n, m0 /= n, m0sq /= n;
    if (!(m1 > 0.0) || !(m0 > 0.0)) {
        throw NumericalError("ssr_strategy2: zero weight mass in a source");
    }
    const double p_r1 = static_cast<double>(interim.n_current()) / n;
    const double p_r0 = 1.0 - p_r1;

    SSRResult r = echo(2, design);
    r.k = p_r1 / p_r0;
    r.inflation1 = p_r1 * m1sq / (m1 * m1);
    r.inflation0 = p_r0 * m0sq / (m0 * m0);
    r.sigma1_hat_sq = design.sigma1_sq * *r.inflation1;
    r.sigma0_hat_sq = design.sigma0_sq * *r.inflation0;
    const double z = design.z_sum();
    r.n_raw = (1.0 + *r.k) * z * z * (*r.sigma1_hat_sq / *r.k + *r.sigma0_hat_sq) /
              (design.delta * design.delta);
    r.n_hat = ceil_size(r.n_raw);
    return r;
}

SSRResult with_enrollment_floor(SSRResult result, long enrolled) {
    if (result.n_hat < enrolled) {
        result.n_hat = enrolled;
        result.floored = true;
    }
    return result;
}

}  // namespace hybridssr
