#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridssr/dataset.hpp"
#include "hybridssr/random.hpp"
#include "hybridssr/ssr.hpp"

namespace hybridssr {

/// Distribution of the four baseline covariates and the outcome noise in
/// one source: x1 ~ N(mu1, var1), x2 ~ Ber(p), x3 ~ N(mu2, var2),
/// x4 ~ N(mu3, var3), eps ~ N(0, outcome_var).
struct PopulationParams {
    double mu1 = 75.0;
    double p = 0.5;
    double mu2 = 14.0;
    double mu3 = 21.0;
    double var1 = 8.5 * 8.5;
    double var2 = 2.8 * 2.8;
    double var3 = 3.6 * 3.6;
    double outcome_var = 10.0 * 10.0;

    bool operator==(const PopulationParams&) const = default;
};

inline constexpr std::array<double, 5> kGeneratorGamma{2.030, -0.019, -0.106,
                                                   0.095, -0.009};

enum class PropensityMode { kFit, kFixed };

struct Scenario {
    std::string label;
    PopulationParams current{};
    PopulationParams historical{};
    /// Outcome coefficients for (1, a, x1, x2, x3, x4).
    std::array<double, 6> beta{1.0, 0.0, 1.0, 1.0, 1.0, 1.0};
    std::vector<double> gamma{kGeneratorGamma.begin(), kGeneratorGamma.end()};
    std::size_t n_h = 169;

    double treatment_effect() const { return beta[1]; }
    /// Variance of a control outcome in the given population.
    double control_outcome_variance(const PopulationParams& pop) const;
    double control_outcome_mean(const PopulationParams& pop) const;
    void validate() const;
};

/// Scenarios 1-5 of the simulation study. beta5 is the x4 coefficient.
Scenario scenario_preset(int id, double treatment_effect, double beta5 = 1.0,
                         std::size_t n_h = 169);

const std::vector<std::string>& simulation_covariate_names();

/*
 * Sequential subject source for one replication. Covariates and noise come
 * from one substream; 2:1-style permuted-block randomization from another,
 * so the first n subjects are the same however many are drawn later.
 */
class CurrentStudyGenerator {
   public:
    CurrentStudyGenerator(const Scenario& scenario, AllocationRatio ratio,
                          std::uint64_t seed, std::uint32_t replication);

    /// Draws subjects until `count` exist; returns all drawn so far.
    const std::vector<SubjectRecord>& ensure(std::size_t count);
    /// Draws subjects until `treated` of them are treated.
    const std::vector<SubjectRecord>& ensure_treated(std::size_t treated);
    const std::vector<SubjectRecord>& subjects() const { return subjects_; }

   private:
    void draw_one();

    const Scenario& scenario_;
    AllocationRatio ratio_;
    RandomStream covariates_;
    RandomStream randomization_;
    std::vector<Arm> block_;
    std::size_t block_pos_ = 0;
    std::vector<SubjectRecord> subjects_;
    std::size_t treated_count_ = 0;
};

/// One subject from `pop` with the given arm; draws x1..x4 then noise.
SubjectRecord draw_subject(const Scenario& scenario,
                           const PopulationParams& pop, Source source, Arm arm,
                           std::string id, RandomStream& stream);

struct ScenarioData {
    Dataset current;
    Dataset historical;
};

/// n_current randomized current subjects plus scenario.n_h historical
/// controls, deterministic in (seed, replication).
ScenarioData generate_scenario_data(const Scenario& scenario,
                                    std::size_t n_current,
                                    AllocationRatio ratio, std::uint64_t seed,
                                    std::uint32_t replication);

Dataset generate_historical(const Scenario& scenario, std::uint64_t seed,
                            std::uint32_t replication);

enum AnalysisArm : std::size_t {
    kStrategy1 = 0,
    kStrategy2 = 1,
    kNoSsr = 2,
    kNoAdjust1 = 3,
    kNoAdjust2 = 4,
};
inline constexpr std::size_t kNumAnalysisArms = 5;
inline constexpr std::array<const char*, kNumAnalysisArms> kAnalysisArmNames{
    "Strategy 1", "Strategy 2", "No SSR", "No ad1", "No ad2"};

struct SimDesign {
    DesignParams design{};
    /// Strategy 2 planning variances; default to the scenario's outcome
    /// (noise) variances sigma_c^2 and sigma_h^2.
    std::optional<double> sigma1_sq;
    std::optional<double> sigma0_sq;
    double interim_fraction = 0.5;
    PropensityMode propensity_mode = PropensityMode::kFit;
};

struct ReplicationOutcome {
    std::uint32_t seed_index = 0;
    long initial_n = 0;
    long ssr1_n = 0;
    long ssr2_n = 0;
    double inflation0 = 0.0;  // Strategy 2 historical design effect
    std::array<bool, kNumAnalysisArms> reject{};
    std::array<bool, kNumAnalysisArms> failed{};  // numerical breakdown
    bool truncated = false;  // historical pool could not cover a shortfall
};

/// Planned current-study enrollment for per-group size n: n treated plus
/// the matching number of current controls under the allocation ratio.
std::size_t planned_current_size(long n, AllocationRatio ratio);

ReplicationOutcome run_replication(const Scenario& scenario,
                                   const SimDesign& design, std::uint64_t seed,
                                   std::uint32_t replication);

struct ArmMetrics {
    double rate = 0.0;     // rejections per 100 replications
    double mc_se = 0.0;    // binomial Monte Carlo SE, same units
    std::size_t failures = 0;
};

struct ScenarioMetrics {
    std::string label;
    double treatment_effect = 0.0;
    std::array<ArmMetrics, kNumAnalysisArms> arms{};
    double mean_initial_n = 0.0;
    double mean_ssr1_n = 0.0;
    double mean_ssr2_n = 0.0;
    double mean_inflation0 = 0.0;
    std::size_t reps = 0;
    std::size_t truncations = 0;
};

struct MetricsTable {
    std::vector<ScenarioMetrics> rows;
    std::uint64_t seed = 0;
    double interim_fraction = 0.0;
};

struct StudyConfig {
    std::vector<Scenario> scenarios;
    SimDesign design{};
    std::size_t reps = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = HYBRIDSSR_THREADS, else hardware
};

/// Worker count: explicit request, else HYBRIDSSR_THREADS, else hardware.
unsigned resolve_thread_count(unsigned requested);

/// All replications of every scenario; identical output for any thread
/// count. Scenario j uses stream ids j * reps + r.
MetricsTable run_study_sim(const StudyConfig& config);

ScenarioMetrics aggregate(const std::string& label, double treatment_effect,
                          const std::vector<ReplicationOutcome>& outcomes);

}  // namespace hybridssr
