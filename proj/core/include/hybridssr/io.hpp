#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridssr/dataset.hpp"
#include "hybridssr/inference.hpp"
#include "hybridssr/simulation.hpp"
#include "hybridssr/ssr.hpp"

namespace hybridssr {

/*
 * Dataset CSV: header `id,study,arm,y,<covariate names...>`, LF endings,
 * '.' decimal separator. An empty arm is MASKED, an empty y is ABSENT.
 * Parse errors throw ValidationError prefixed with "line N:".
 */
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::string& path, const Dataset& dataset);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

enum class OutputFormat { kCsv, kMarkdown };
OutputFormat parse_output_format(const std::string& text);

/// Fixed-column table rendered as CSV or aligned markdown.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void write(std::ostream& out, OutputFormat format) const;
};

/*
 * Flat JSON run configuration. Keys are literal dotted names, e.g.
 * {"design.alpha": 0.05, "sim.reps": 2000}. Unknown keys are rejected.
 */
struct RunConfig {
    DesignParams design{};
    bool sigma1_sq_set = false;
    bool sigma0_sq_set = false;

    std::vector<int> scenario_ids{1, 2, 3, 4, 5};
    std::vector<double> treatment_effects{0.0, 3.5};
    nlohmann::json scenario_overrides = nlohmann::json::object();

    std::size_t reps = 10000;
    std::optional<std::uint64_t> seed;
    double interim_fraction = 0.5;
    std::size_t n_h = 169;
    double beta5 = 1.0;
    PropensityMode propensity_mode = PropensityMode::kFit;
};

RunConfig parse_run_config(const nlohmann::json& flat);
RunConfig load_run_config(const std::string& path);

/// Expands scenario ids x treatment effects, applying overrides.
StudyConfig make_study_config(const RunConfig& config);

Table metrics_table(const MetricsTable& metrics);
Table ssr_table(const std::vector<SSRResult>& results);
Table test_table(const TestResult& result, const DesignParams& design);
Table summary_table(const SummaryTable& summary);
Table weights_table(const Dataset& dataset, const WeightSet& weights);

/// min/Q1/median/Q3/max of e and w_r0 per source (type-7 quantiles).
Table weight_quantile_table(const Dataset& dataset, const WeightSet& weights);

/// Linear-interpolation (type 7) sample quantile; `values` need not be
/// sorted.
double sample_quantile(std::vector<double> values, double q);

}  // namespace hybridssr
