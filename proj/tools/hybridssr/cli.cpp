#include "hybridssr/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybridssr/errors.hpp"
#include "hybridssr/inference.hpp"
#include "hybridssr/io.hpp"
#include "hybridssr/propensity.hpp"
#include "hybridssr/simulation.hpp"
#include "hybridssr/ssr.hpp"

namespace hybridssr {

namespace {

struct Options {
    std::string config_path;
    std::string data_path;
    std::string design_path;
    std::string out_path;
    std::string format = "csv";
    std::string strategy = "both";
    std::string method = "ipw";
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> fill_seed;
    std::optional<double> tau0;
    std::optional<long> enrolled;
    double sigma = 0.0;
    unsigned threads = 0;
    std::string propensity_column;
    bool masked = false;
};

// Fitted weights, or weights from propensities stored in a named column.
WeightSet weights_for(const Dataset& data, const Options& o) {
    if (o.propensity_column.empty()) {
        return compute_weights(data, fit_propensity(data));
    }
    const auto& names = data.covariate_names();
    const auto it =
        std::find(names.begin(), names.end(), o.propensity_column);
    if (it == names.end()) {
        throw ValidationError("no column '" + o.propensity_column + "'");
    }
    const auto j = static_cast<std::size_t>(it - names.begin());
    std::vector<double> e;
    e.reserve(data.size());
    for (const auto& r : data) e.push_back(r.x[j]);
    return compute_weights(data, e);
}

RunConfig design_config(const Options& o) {
    return o.design_path.empty() ? RunConfig{} : load_run_config(o.design_path);
}

void emit(const Table& table, const Options& o, std::ostream& out) {
    const auto format = parse_output_format(o.format);
    if (o.out_path.empty()) {
        table.write(out, format);
        return;
    }
    std::ofstream file(o.out_path, std::ios::binary);
    if (!file) throw ValidationError("cannot write '" + o.out_path + "'");
    table.write(file, format);
}

int cmd_simulate(const Options& o, std::ostream& out) {
    RunConfig config =
        o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.reps) config.reps = *o.reps;
    if (o.seed) config.seed = *o.seed;
    if (!config.seed) {
        throw ValidationError("simulate requires --seed (or sim.seed)");
    }
    StudyConfig study = make_study_config(config);
    study.threads = o.threads;
    emit(metrics_table(run_study_sim(study)), o, out);
    return kExitOk;
}

int cmd_ssr(const Options& o, std::ostream& out) {
    const Dataset data = load_dataset(o.data_path);
    require_valid(data);
    const DesignParams design = design_config(o).design;
    const WeightSet w = weights_for(data, o);
    std::vector<SSRResult> results;
    auto floor = [&](SSRResult r) {
        return o.enrolled ? with_enrollment_floor(r, *o.enrolled) : r;
    };
    if (o.strategy == "1" || o.strategy == "both") {
        results.push_back(floor(ssr_strategy1(data, w, design)));
    }
    if (o.strategy == "2" || o.strategy == "both") {
        results.push_back(floor(ssr_strategy2(data, w, design)));
    }
    if (results.empty()) {
        throw ValidationError("--strategy must be 1, 2 or both");
    }
    emit(ssr_table(results), o, out);
    return kExitOk;
}

int cmd_test(const Options& o, std::ostream& out) {
    Dataset data = load_dataset(o.data_path);
    require_valid(data);
    DesignParams design = design_config(o).design;
    if (o.tau0) design.tau0 = *o.tau0;
    if (o.fill_seed) {
        // balance arms by sampling the control shortfall from the pool
        const Dataset current = data.subset(Source::kCurrent);
        std::size_t treated = 0, controls = 0;
        for (const auto& r : current) {
            if (r.arm == Arm::kTreated) ++treated;
            if (r.arm == Arm::kControl) ++controls;
        }
        RandomStream stream(*o.fill_seed, 0, 0);
        const std::size_t m = treated > controls ? treated - controls : 0;
        data = current.concat(sample_historical_controls(
            data.subset(Source::kHistorical), m, stream));
    }
    TestResult result;
    if (o.method == "ipw") {
        result = ipw_test(data, weights_for(data, o), design);
    } else if (o.method == "ttest") {
        result = t_test_unadjusted(data, design);
    } else {
        throw ValidationError("--method must be ipw or ttest");
    }
    emit(test_table(result, design), o, out);
    return kExitOk;
}

int cmd_weights(const Options& o, std::ostream& out) {
    const Dataset data = load_dataset(o.data_path);
    const WeightSet w = weights_for(data, o);
    const auto format = parse_output_format(o.format);
    if (!o.out_path.empty()) {
        std::ofstream file(o.out_path, std::ios::binary);
        if (!file) throw ValidationError("cannot write '" + o.out_path + "'");
        weights_table(data, w).write(file, format);
    }
    weight_quantile_table(data, w).write(out, format);
    return kExitOk;
}

int cmd_summarize(const Options& o, std::ostream& out) {
    emit(summary_table(summarize(load_dataset(o.data_path), o.masked)), o, out);
    return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
    const DesignParams design = design_config(o).design;
    Table t;
    t.columns = {"sigma", "delta", "alpha", "power", "n_raw", "n_per_group"};
    t.rows.push_back({format_double(o.sigma), format_double(design.delta),
                      format_double(design.alpha), format_double(design.power),
                      format_double(initial_sample_size_raw(design, o.sigma)),
                      std::to_string(initial_sample_size(design, o.sigma))});
    emit(t, o, out);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Blinded sample size re-estimation for hybrid-control trials"};
    app.require_subcommand(1);
    Options o;

    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "csv or markdown")
            ->check(CLI::IsMember({"csv", "markdown", "md"}));
    };
    auto add_propensity = [&](CLI::App* sub) {
        sub->add_option("--propensity-column", o.propensity_column,
                        "Covariate column holding Pr(R=1|X); skips the fit");
    };

    auto* simulate = app.add_subcommand("simulate", "Run the simulation study");
    simulate->add_option("--config", o.config_path, "Flat JSON config")
        ->check(CLI::ExistingFile);
    simulate->add_option("--reps", o.reps, "Replications per scenario");
    simulate->add_option("--seed", o.seed, "Master seed (required)");
    simulate->add_option("--out", o.out_path, "Output file (default stdout)");
    simulate->add_option("--threads", o.threads,
                         "Worker count (0 = HYBRIDSSR_THREADS or hardware)");
    add_format(simulate);

    auto* ssr = app.add_subcommand("ssr", "Re-estimate the sample size");
    ssr->add_option("--data", o.data_path, "Interim dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    ssr->add_option("--design", o.design_path, "Flat JSON design")
        ->check(CLI::ExistingFile);
    ssr->add_option("--strategy", o.strategy, "1, 2 or both")
        ->check(CLI::IsMember({"1", "2", "both"}));
    ssr->add_option("--enrolled", o.enrolled,
                    "Per-group count already enrolled (floor)");
    add_propensity(ssr);
    add_format(ssr);

    auto* test = app.add_subcommand("test", "Final-analysis test");
    test->add_option("--data", o.data_path, "Final dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    test->add_option("--design", o.design_path, "Flat JSON design")
        ->check(CLI::ExistingFile);
    test->add_option("--tau0", o.tau0, "Null difference (overrides design)");
    test->add_option("--fill-seed", o.fill_seed,
                     "Sample the control shortfall from the historical pool");
    test->add_option("--method", o.method, "ipw or ttest")
        ->check(CLI::IsMember({"ipw", "ttest"}));
    add_propensity(test);
    add_format(test);

    auto* weights = app.add_subcommand("weights", "Propensities and weights");
    weights->add_option("--data", o.data_path, "Dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    weights->add_option("--out", o.out_path, "Per-subject weights file");
    add_propensity(weights);
    add_format(weights);

    auto* summarize_cmd = app.add_subcommand("summarize", "Baseline summary");
    summarize_cmd->add_option("--data", o.data_path, "Dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    summarize_cmd->add_flag("--masked", o.masked, "Blinded view");
    add_format(summarize_cmd);

    auto* plan = app.add_subcommand("plan", "Design-stage sample size");
    plan->add_option("--sigma", o.sigma, "Planning SD")->required();
    plan->add_option("--design", o.design_path, "Flat JSON design")
        ->check(CLI::ExistingFile);
    add_format(plan);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "E:" << kExitValidation << ":" << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (ssr->parsed()) return cmd_ssr(o, out);
        if (test->parsed()) return cmd_test(o, out);
        if (weights->parsed()) return cmd_weights(o, out);
        if (summarize_cmd->parsed()) return cmd_summarize(o, out);
        if (plan->parsed()) return cmd_plan(o, out);
    } catch (const Error& e) {
        const int code = e.kind() == ErrorKind::kNumerical ? kExitNumerical
                                                           : kExitValidation;
        err << "E:" << code << ":" << e.what() << '\n';
        return code;
    } catch (const std::exception& e) {
        err << "E:" << kExitNumerical << ":" << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitValidation;
}

}  // namespace hybridssr
