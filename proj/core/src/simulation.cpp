#include "hybridssr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "hybridssr/errors.hpp"
#include "hybridssr/inference.hpp"
#include "hybridssr/propensity.hpp"

namespace hybridssr {

namespace {

// substreams of one replication's counter space
constexpr std::uint32_t kHistoricalSubstream = 0;
constexpr std::uint32_t kCurrentSubstream = 1;
constexpr std::uint32_t kRandomizationSubstream = 2;
constexpr std::uint32_t kSamplingSubstream = 3;  // + size source

std::string subject_id(char prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%05zu", prefix, index + 1);
    return buf;
}

}  // namespace

double Scenario::control_outcome_variance(const PopulationParams& pop) const {
    return beta[2] * beta[2] * pop.var1 + beta[3] * beta[3] * pop.p * (1 - pop.p) +
           beta[4] * beta[4] * pop.var2 + beta[5] * beta[5] * pop.var3 +
           pop.outcome_var;
}

double Scenario::control_outcome_mean(const PopulationParams& pop) const {
    return beta[0] + beta[2] * pop.mu1 + beta[3] * pop.p + beta[4] * pop.mu2 +
           beta[5] * pop.mu3;
}

void Scenario::validate() const {
    for (const auto* pop : {&current, &historical}) {
        if (!(pop->var1 > 0 && pop->var2 > 0 && pop->var3 > 0 &&
              pop->outcome_var > 0)) {
            throw ValidationError("scenario '" + label +
                                  "': variances must be > 0");
        }
        if (!(pop->p > 0.0 && pop->p < 1.0)) {
            throw ValidationError("scenario '" + label +
                                  "': Bernoulli rate outside (0, 1)");
        }
    }
    if (gamma.size() != 5) {
        throw ValidationError("scenario '" + label +
                              "': gamma needs 5 coefficients");
    }
    if (n_h < 1) throw ValidationError("scenario '" + label + "': n_h < 1");
}

Scenario scenario_preset(int id, double treatment_effect, double beta5,
                         std::size_t n_h) {
    Scenario s;
    PopulationParams& h = s.historical;
    switch (id) {
        case 1:
            break;
        case 2:
            h.mu1 = 77, h.p = 0.4;
            break;
        case 3:
            h = {77, 0.4, 15, 20, 8.0 * 8.0, 3.2 * 3.2, 3.7 * 3.7, 100.0};
            break;
        case 4:
            h = {73, 0.6, 13, 22, 8.0 * 8.0, 3.2 * 3.2, 3.7 * 3.7, 100.0};
            break;
        case 5:
            h = {73, 0.6, 13, 22, 7.0 * 7.0, 2.5 * 2.5, 3.0 * 3.0, 8.0 * 8.0};
            break;
        default:
            throw ValidationError("unknown scenario preset " +
                                  std::to_string(id));
    }
    s.label = "Scenario " + std::to_string(id);
    s.beta[1] = treatment_effect;
    s.beta[5] = beta5;
    s.n_h = n_h;
    return s;
}

const std::vector<std::string>& simulation_covariate_names() {
    static const std::vector<std::string> names{"x1", "x2", "x3", "x4"};
    return names;
}

SubjectRecord draw_subject(const Scenario& scenario,
                           const PopulationParams& pop, Source source, Arm arm,
                           std::string id, RandomStream& stream) {
    SubjectRecord r;
    r.id = std::move(id);
    r.source = source;
    r.arm = arm;
    const double x1 = stream.normal(pop.mu1, std::sqrt(pop.var1));
    const double x2 = stream.bernoulli(pop.p) ? 1.0 : 0.0;
    const double x3 = stream.normal(pop.mu2, std::sqrt(pop.var2));
    const double x4 = stream.normal(pop.mu3, std::sqrt(pop.var3));
    const double eps = stream.normal(0.0, std::sqrt(pop.outcome_var));
    const auto& b = scenario.beta;
    const double a = arm == Arm::kTreated ? 1.0 : 0.0;
    r.y = b[0] + b[1] * a + b[2] * x1 + b[3] * x2 + b[4] * x3 + b[5] * x4 + eps;
    r.x = {x1, x2, x3, x4};
    return r;
}

CurrentStudyGenerator::CurrentStudyGenerator(const Scenario& scenario,
                                             AllocationRatio ratio,
                                             std::uint64_t seed,
                                             std::uint32_t replication)
    : scenario_(scenario),
      ratio_(ratio),
      covariates_(seed, replication, kCurrentSubstream),
      randomization_(seed, replication, kRandomizationSubstream) {
    if (ratio.treated < 1 || ratio.control < 1) {
        throw ValidationError("allocation ratio components must be >= 1");
    }
    block_.assign(static_cast<std::size_t>(ratio.treated), Arm::kTreated);
    block_.insert(block_.end(), static_cast<std::size_t>(ratio.control),
                  Arm::kControl);
    block_pos_ = block_.size();
}

void CurrentStudyGenerator::draw_one() {
    if (block_pos_ == block_.size()) {
        for (std::size_t i = block_.size(); i > 1; --i) {
            std::swap(block_[i - 1], block_[randomization_.below(i)]);
        }
        block_pos_ = 0;
    }
    const Arm arm = block_[block_pos_++];
    if (arm == Arm::kTreated) ++treated_count_;
    subjects_.push_back(draw_subject(scenario_, scenario_.current,
                                     Source::kCurrent, arm,
                                     subject_id('c', subjects_.size()),
                                     covariates_));
}

const std::vector<SubjectRecord>& CurrentStudyGenerator::ensure(
    std::size_t count) {
    while (subjects_.size() < count) draw_one();
    return subjects_;
}

const std::vector<SubjectRecord>& CurrentStudyGenerator::ensure_treated(
    std::size_t treated) {
    while (treated_count_ < treated) draw_one();
    return subjects_;
}

Dataset generate_historical(const Scenario& scenario, std::uint64_t seed,
                            std::uint32_t replication) {
    RandomStream stream(seed, replication, kHistoricalSubstream);
    std::vector<SubjectRecord> records;
    records.reserve(scenario.n_h);
    for (std::size_t i = 0; i < scenario.n_h; ++i) {
        records.push_back(draw_subject(scenario, scenario.historical,
                                       Source::kHistorical, Arm::kControl,
                                       subject_id('h', i), stream));
    }
    return Dataset(simulation_covariate_names(), std::move(records));
}

ScenarioData generate_scenario_data(const Scenario& scenario,
                                    std::size_t n_current,
                                    AllocationRatio ratio, std::uint64_t seed,
                                    std::uint32_t replication) {
    if (n_current < 3) {
        throw ValidationError("generate_scenario_data: need >= 3 subjects");
    }
    scenario.validate();
    CurrentStudyGenerator gen(scenario, ratio, seed, replication);
    return {Dataset(simulation_covariate_names(), gen.ensure(n_current)),
            generate_historical(scenario, seed, replication)};
}

std::size_t planned_current_size(long n, AllocationRatio ratio) {
    const long controls =
        (n * ratio.control + ratio.treated - 1) / ratio.treated;
    return static_cast<std::size_t>(n + controls);
}

namespace {

WeightSet weights_for(const Dataset& data, const Scenario& scenario,
                      PropensityMode mode) {
    if (mode == PropensityMode::kFit) {
        return compute_weights(data, fit_propensity(data));
    }
    PropensityModel fixed;
    fixed.gamma = scenario.gamma;
    fixed.converged = true;
    return compute_weights(data, fixed);
}

// Current prefix holding n treated subjects (never shorter than what was
// already enrolled at interim) plus the historical control shortfall.
Dataset assemble_final(CurrentStudyGenerator& gen, long n,
                       std::size_t enrolled, const Dataset& historical,
                       RandomStream& sampling, bool& truncated) {
    const auto& subjects = gen.ensure_treated(static_cast<std::size_t>(n));
    std::size_t length = enrolled, treated = 0, controls = 0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (subjects[i].arm == Arm::kTreated && ++treated == std::size_t(n)) {
            length = std::max(length, i + 1);
            break;
        }
    }
    std::vector<SubjectRecord> current(subjects.begin(),
                                       subjects.begin() + long(length));
    treated = 0;
    for (const auto& s : current) {
        (s.arm == Arm::kTreated ? treated : controls) += 1;
    }
    std::size_t shortfall = treated > controls ? treated - controls : 0;
    if (shortfall > historical.size()) {
        shortfall = historical.size();
        truncated = true;
    }
    Dataset cur(historical.covariate_names(), std::move(current));
    return cur.concat(sample_historical_controls(historical, shortfall,
                                                 sampling));
}

}  // namespace

ReplicationOutcome run_replication(const Scenario& scenario,
                                   const SimDesign& sim, std::uint64_t seed,
                                   std::uint32_t replication) {
    const DesignParams& design = sim.design;
    design.validate();
    scenario.validate();
    if (!(sim.interim_fraction > 0.0 && sim.interim_fraction < 1.0)) {
        throw ValidationError("interim fraction outside (0, 1)");
    }

    ReplicationOutcome out;
    out.seed_index = replication;

    // (1)-(2) historical data and the design-stage size
    const Dataset historical = generate_historical(scenario, seed, replication);
    std::vector<double> hy;
    hy.reserve(historical.size());
    for (const auto& r : historical) hy.push_back(*r.y);
    const auto hist_sd = column_stats(hy).sd;
    if (!hist_sd) throw ValidationError("need >= 2 historical subjects");
    out.initial_n = initial_sample_size(design, *hist_sd);

    // (3) enroll to the interim fraction
    CurrentStudyGenerator gen(scenario, design.alloc_ratio, seed, replication);
    const auto planned = planned_current_size(out.initial_n, design.alloc_ratio);
    const auto interim_count = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::floor(sim.interim_fraction *
                                               static_cast<double>(planned))));
    const auto& enrolled = gen.ensure(interim_count);
    std::vector<SubjectRecord> interim_current(enrolled.begin(),
                                               enrolled.begin() + long(interim_count));
    long interim_treated = 0;
    for (const auto& s : interim_current) {
        if (s.arm == Arm::kTreated) ++interim_treated;
    }

    // (4) blinded re-estimation on current-so-far + all historical
    const Dataset interim =
        Dataset(historical.covariate_names(), std::move(interim_current))
            .masked()
            .concat(historical);
    const WeightSet interim_w =
        weights_for(interim, scenario, sim.propensity_mode);

    DesignParams ssr2_design = design;
    ssr2_design.sigma1_sq = sim.sigma1_sq.value_or(scenario.current.outcome_var);
    ssr2_design.sigma0_sq =
        sim.sigma0_sq.value_or(scenario.historical.outcome_var);

    const auto ssr1 = with_enrollment_floor(
        ssr_strategy1(interim, interim_w, design), interim_treated);
    const auto ssr2 = with_enrollment_floor(
        ssr_strategy2(interim.without_outcomes(), interim_w, ssr2_design),
        interim_treated);
    out.ssr1_n = ssr1.n_hat;
    out.ssr2_n = ssr2.n_hat;
    out.inflation0 = ssr2.inflation0.value_or(0.0);

    // (5) one final dataset per size source; Strategy j and No ad j share it
    struct FinalPlan {
        long n;
        AnalysisArm ipw_arm;
        int ttest_arm;  // -1: none
    };
    const FinalPlan plans[] = {
        {out.ssr1_n, kStrategy1, kNoAdjust1},
        {out.ssr2_n, kStrategy2, kNoAdjust2},
        {out.initial_n, kNoSsr, -1},
    };
    for (std::uint32_t k = 0; k < 3; ++k) {
        const auto& plan = plans[k];
        RandomStream sampling(seed, replication, kSamplingSubstream + k);
        Dataset final;
        try {
            final = assemble_final(gen, plan.n, interim_count, historical,
                                   sampling, out.truncated);
        } catch (const Error&) {
            out.failed[plan.ipw_arm] = true;
            if (plan.ttest_arm >= 0) out.failed[std::size_t(plan.ttest_arm)] = true;
            continue;
        }
        try {
            const auto w = weights_for(final, scenario, sim.propensity_mode);
            out.reject[plan.ipw_arm] = ipw_test(final, w, design).reject;
        } catch (const Error&) {
            out.failed[plan.ipw_arm] = true;
        }
        if (plan.ttest_arm >= 0) {
            const auto arm = std::size_t(plan.ttest_arm);
            try {
                out.reject[arm] = t_test_unadjusted(final, design).reject;
            } catch (const Error&) {
                out.failed[arm] = true;
            }
        }
    }
    return out;
}

ScenarioMetrics aggregate(const std::string& label, double treatment_effect,
                          const std::vector<ReplicationOutcome>& outcomes) {
    ScenarioMetrics m;
    m.label = label;
    m.treatment_effect = treatment_effect;
    m.reps = outcomes.size();
    if (outcomes.empty()) return m;
    const auto reps = static_cast<double>(outcomes.size());
    std::array<double, kNumAnalysisArms> rejects{};
    double sum_n0 = 0, sum_n1 = 0, sum_n2 = 0, sum_infl = 0;
    for (const auto& o : outcomes) {
        for (std::size_t a = 0; a < kNumAnalysisArms; ++a) {
            rejects[a] += o.reject[a] ? 1.0 : 0.0;
            m.arms[a].failures += o.failed[a] ? 1 : 0;
        }
        sum_n0 += double(o.initial_n);
        sum_n1 += double(o.ssr1_n);
        sum_n2 += double(o.ssr2_n);
        sum_infl += o.inflation0;
        m.truncations += o.truncated ? 1 : 0;
    }
    for (std::size_t a = 0; a < kNumAnalysisArms; ++a) {
        const double p = rejects[a] / reps;
        m.arms[a].rate = 100.0 * p;
        m.arms[a].mc_se = 100.0 * std::sqrt(p * (1.0 - p) / reps);
    }
    m.mean_initial_n = sum_n0 / reps;
    m.mean_ssr1_n = sum_n1 / reps;
    m.mean_ssr2_n = sum_n2 / reps;
    m.mean_inflation0 = sum_infl / reps;
    return m;
}

unsigned resolve_thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HYBRIDSSR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return unsigned(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

MetricsTable run_study_sim(const StudyConfig& config) {
    if (config.reps < 1) throw ValidationError("reps must be >= 1");
    if (config.scenarios.empty()) throw ValidationError("no scenarios");
    config.design.design.validate();
    for (const auto& s : config.scenarios) s.validate();
    const std::size_t total = config.scenarios.size() * config.reps;
    if (total > std::size_t{0xFFFFFFFFu}) {
        throw ValidationError("too many replications for the stream layout");
    }

    std::vector<ReplicationOutcome> outcomes(total);
    std::vector<std::string> errors(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < total;) {
            const auto& scenario = config.scenarios[t / config.reps];
            try {
                outcomes[t] = run_replication(scenario, config.design,
                                              config.seed,
                                              static_cast<std::uint32_t>(t));
            } catch (const std::exception& e) {
                errors[t] = e.what();
            }
        }
    };
    const unsigned threads = std::min<std::size_t>(
        resolve_thread_count(config.threads), total);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (std::size_t t = 0; t < total; ++t) {
        if (!errors[t].empty()) {
            throw ValidationError("replication " + std::to_string(t) + ": " +
                                  errors[t]);
        }
    }

    MetricsTable table;
    table.seed = config.seed;
    table.interim_fraction = config.design.interim_fraction;
    for (std::size_t j = 0; j < config.scenarios.size(); ++j) {
        const auto first = outcomes.begin() + long(j * config.reps);
        std::vector<ReplicationOutcome> slice(first, first + long(config.reps));
        table.rows.push_back(aggregate(config.scenarios[j].label,
                                       config.scenarios[j].treatment_effect(),
                                       slice));
    }
    return table;
}

}  // namespace hybridssr
