#include "hybridssr/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "hybridssr/errors.hpp"

namespace hybridssr {

namespace {

// |standardized coefficient| beyond this is treated as divergence.
constexpr double kDivergenceBound = 30.0;

double logistic(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double t = std::exp(eta);
    return t / (1.0 + t);
}

// log(1 + exp(eta)) without overflow
double softplus(double eta) {
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::fabs(eta)));
}

struct Design {
    Eigen::MatrixXd z;  // n x (p+1), column 0 = 1, others standardized
    Eigen::VectorXd r;
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
};

Design build_design(const Dataset& dataset) {
    const auto n = static_cast<Eigen::Index>(dataset.size());
    const auto p = static_cast<Eigen::Index>(dataset.num_covariates());
    Design d;
    d.z.resize(n, p + 1);
    d.r.resize(n);
    d.center = Eigen::VectorXd::Zero(p);
    d.scale = Eigen::VectorXd::Ones(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = dataset[static_cast<std::size_t>(i)];
        d.z(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            d.z(i, j + 1) = rec.x[static_cast<std::size_t>(j)];
        }
        d.r(i) = rec.is_current() ? 1.0 : 0.0;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        auto col = d.z.col(j + 1);
        const double mean = col.mean();
        const double sd =
            n > 1 ? std::sqrt((col.array() - mean).square().sum() /
                              static_cast<double>(n - 1))
                  : 0.0;
        if (!(sd > 0.0)) throw NumericalError("singular design");
        d.center(j) = mean;
        d.scale(j) = sd;
        col = (col.array() - mean) / sd;
    }
    return d;
}

double penalized_loglik(const Design& d, const Eigen::VectorXd& beta,
                        double ridge) {
    const Eigen::VectorXd eta = d.z * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += d.r(i) * eta(i) - softplus(eta(i));
    }
    return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

struct IrlsResult {
    Eigen::VectorXd beta;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
};

IrlsResult irls(const Design& d, double ridge, int max_iter, double tol) {
    const Eigen::Index k = d.z.cols();
    IrlsResult res;
    res.beta = Eigen::VectorXd::Zero(k);
    // start from the marginal log-odds
    const double pbar = d.r.mean();
    res.beta(0) = std::log(pbar / (1.0 - pbar));
    double ll = penalized_loglik(d, res.beta, ridge);

    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        const Eigen::VectorXd eta = d.z * res.beta;
        Eigen::VectorXd mu(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = logistic(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        Eigen::VectorXd grad = d.z.transpose() * (d.r - mu);
        Eigen::MatrixXd info = d.z.transpose() * w.asDiagonal() * d.z;
        if (ridge > 0.0) {
            grad.tail(k - 1) -= ridge * res.beta.tail(k - 1);
            info.diagonal().tail(k - 1).array() += ridge;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        const double max_pivot = ldlt.vectorD().cwiseAbs().maxCoeff();
        const double min_pivot = ldlt.vectorD().minCoeff();
        if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-13 * max_pivot)) {
            // a collapsing information matrix with a finite design means
            // the fitted probabilities are saturating
            if (ridge == 0.0 && res.beta.tail(k - 1).cwiseAbs().maxCoeff() > 5)
            {
                res.diverged = true;
                return res;
            }
            throw NumericalError("singular design");
        }
        Eigen::VectorXd step = ldlt.solve(grad);

        // step halving guards against overshoot
        Eigen::VectorXd next = res.beta + step;
        double next_ll = penalized_loglik(d, next, ridge);
        for (int h = 0; h < 30 && !(next_ll >= ll - 1e-12 * std::fabs(ll));
             ++h) {
            step *= 0.5;
            next = res.beta + step;
            next_ll = penalized_loglik(d, next, ridge);
        }
        res.beta = next;
        ll = next_ll;
        if (!std::isfinite(ll) ||
            res.beta.tail(k - 1).cwiseAbs().maxCoeff() > kDivergenceBound) {
            res.diverged = true;
            return res;
        }
        if (step.cwiseAbs().maxCoeff() < tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

void check_fit_preconditions(const Dataset& dataset) {
    require_valid(dataset);
    if (dataset.n_current() == 0 || dataset.n_historical() == 0) {
        throw ValidationError(
            "fit_propensity: need at least one subject from each source");
    }
}

}  // namespace

double linear_predictor(std::span<const double> gamma,
                        std::span<const double> x) {
    if (gamma.size() != x.size() + 1) {
        throw ValidationError("propensity: covariate dimension " +
                              std::to_string(x.size()) + " does not match " +
                              std::to_string(gamma.size() - 1));
    }
    double eta = gamma[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += gamma[j + 1] * x[j];
    return eta;
}

double predict_propensity(const PropensityModel& model,
                          std::span<const double> x) {
    const double e = logistic(linear_predictor(model.gamma, x));
    return std::clamp(e, kPropensityClamp, 1.0 - kPropensityClamp);
}

double propensity_log_likelihood(const Dataset& dataset,
                                 std::span<const double> gamma) {
    double ll = 0.0;
    for (const auto& rec : dataset) {
        const double eta = linear_predictor(gamma, rec.x);
        ll += (rec.is_current() ? eta : 0.0) - softplus(eta);
    }
    return ll;
}

std::vector<double> propensity_score(const Dataset& dataset,
                                     std::span<const double> gamma) {
    std::vector<double> g(gamma.size(), 0.0);
    for (const auto& rec : dataset) {
        const double resid = (rec.is_current() ? 1.0 : 0.0) -
                             logistic(linear_predictor(gamma, rec.x));
        g[0] += resid;
        for (std::size_t j = 0; j < rec.x.size(); ++j) {
            g[j + 1] += resid * rec.x[j];
        }
    }
    return g;
}

PropensityModel fit_propensity(const Dataset& dataset,
                               const FitOptions& options) {
    check_fit_preconditions(dataset);
    const Design d = build_design(dataset);

    IrlsResult res = irls(d, 0.0, options.max_iter, options.tol);
    PropensityModel model;
    if (res.diverged) {
        res = irls(d, options.ridge, std::max(options.max_iter, 200),
                   options.tol);
        if (res.diverged || !res.converged) {
            throw NumericalError(
                "fit_propensity: ridge refit failed to converge");
        }
        model.ridge_applied = true;
        model.converged = false;
    } else {
        model.converged = res.converged;
    }
    model.iterations = res.iterations;

    // back-transform: eta = b0 + sum b_j (x_j - c_j) / s_j
    const auto p = d.center.size();
    model.gamma.assign(static_cast<std::size_t>(p) + 1, 0.0);
    double intercept = res.beta(0);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double slope = res.beta(j + 1) / d.scale(j);
        model.gamma[static_cast<std::size_t>(j) + 1] = slope;
        intercept -= slope * d.center(j);
    }
    model.gamma[0] = intercept;

    const auto g = propensity_score(dataset, model.gamma);
    double norm = 0.0;
    for (double v : g) norm += v * v;
    model.final_gradient_norm = std::sqrt(norm);
    return model;
}

WeightSet compute_weights(const Dataset& dataset,
                          std::span<const double> propensities) {
    require_valid(dataset);
    const std::size_t n = dataset.size();
    if (propensities.size() != n) {
        throw ValidationError("compute_weights: " +
                              std::to_string(propensities.size()) +
                              " propensities for " + std::to_string(n) +
                              " subjects");
    }
    if (n == 0 || dataset.n_current() == 0 || dataset.n_historical() == 0) {
        throw ValidationError("single-source dataset");
    }

    WeightSet w;
    w.p_r1 = static_cast<double>(dataset.n_current()) / static_cast<double>(n);
    w.e.resize(n);
    w.w_r1.assign(n, 0.0);
    w.w_r0.assign(n, 0.0);

    std::size_t treated = 0, current_control = 0;
    bool any_masked = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = dataset[i];
        const double raw = propensities[i];
        if (!(raw >= 0.0 && raw <= 1.0)) {
            throw ValidationError("compute_weights: propensity for '" +
                                  rec.id + "' outside [0, 1]");
        }
        if (rec.is_historical() && raw >= 1.0) {
            throw NumericalError(
                "compute_weights: historical subject '" + rec.id +
                "' has propensity 1");
        }
        const double e =
            std::clamp(raw, kPropensityClamp, 1.0 - kPropensityClamp);
        w.e[i] = e;
        if (rec.is_current()) {
            w.w_r1[i] = 0.5 / w.p_r1;
            if (rec.arm == Arm::kMasked) any_masked = true;
            if (rec.arm == Arm::kTreated) ++treated;
            if (rec.arm == Arm::kControl) ++current_control;
        } else {
            w.w_r0[i] = 0.5 / w.p_r1 * e / (1.0 - e);
        }
    }
    if (!any_masked) {
        w.p_a1 = static_cast<double>(treated) / static_cast<double>(n);
        w.p_a0_given_r1 = static_cast<double>(current_control) /
                          static_cast<double>(dataset.n_current());
    }
    return w;
}

WeightSet compute_weights(const Dataset& dataset,
                          const PropensityModel& model) {
    std::vector<double> e;
    e.reserve(dataset.size());
    for (const auto& rec : dataset) {
        e.push_back(predict_propensity(model, rec.x));
    }
    return compute_weights(dataset, e);
}

}  // namespace hybridssr
