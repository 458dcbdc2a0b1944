#include "hybridssr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "hybridssr/errors.hpp"

namespace hybridssr {

namespace {

const std::vector<std::string> kRequiredColumns{"id", "study", "arm", "y"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(std::move(field));
    return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw ValidationError("line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& text, std::size_t line,
                    const std::string& column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        fail_line(line, "non-numeric value '" + text + "' in column '" +
                            column + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        throw ValidationError("line 1: missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        fail_line(1, "CRLF line endings are not accepted");
    }
    const auto header = split_csv(line);
    for (std::size_t j = 0; j < kRequiredColumns.size(); ++j) {
        if (j >= header.size()) {
            fail_line(1, "missing required column '" + kRequiredColumns[j] + "'");
        }
        if (header[j] != kRequiredColumns[j]) {
            if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(),
                          header[j]) != kRequiredColumns.end()) {
                fail_line(1, "column '" + header[j] + "' out of order");
            }
            fail_line(1, "unknown column '" + header[j] + "' (expected '" +
                             kRequiredColumns[j] + "')");
        }
    }
    std::vector<std::string> covariates(header.begin() + 4, header.end());
    std::set<std::string> seen;
    for (const auto& name : covariates) {
        if (name.empty()) fail_line(1, "empty covariate name");
        if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) !=
                kRequiredColumns.end() ||
            !seen.insert(name).second) {
            fail_line(1, "duplicate column '" + name + "'");
        }
    }

    std::vector<SubjectRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            fail_line(line_no, "CRLF line endings are not accepted");
        }
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            fail_line(line_no, "expected " + std::to_string(header.size()) +
                                   " fields, found " +
                                   std::to_string(fields.size()));
        }
        SubjectRecord r;
        r.id = fields[0];
        if (fields[1] == "1") {
            r.source = Source::kCurrent;
        } else if (fields[1] == "0") {
            r.source = Source::kHistorical;
        } else {
            fail_line(line_no, "study must be 0 or 1, found '" + fields[1] + "'");
        }
        if (fields[2].empty()) {
            r.arm = Arm::kMasked;
        } else if (fields[2] == "1") {
            r.arm = Arm::kTreated;
        } else if (fields[2] == "0") {
            r.arm = Arm::kControl;
        } else {
            fail_line(line_no, "arm must be 0, 1 or empty, found '" +
                                   fields[2] + "'");
        }
        if (!fields[3].empty()) r.y = parse_number(fields[3], line_no, "y");
        r.x.reserve(covariates.size());
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            r.x.push_back(parse_number(fields[4 + j], line_no, covariates[j]));
        }
        records.push_back(std::move(r));
    }
    return Dataset(std::move(covariates), std::move(records));
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    out << "id,study,arm,y";
    for (const auto& name : dataset.covariate_names()) out << ',' << name;
    out << '\n';
    for (const auto& r : dataset) {
        out << r.id << ',' << (r.is_current() ? '1' : '0') << ',';
        if (r.arm != Arm::kMasked) out << (r.arm == Arm::kTreated ? '1' : '0');
        out << ',';
        if (r.y) out << format_double(*r.y);
        for (double v : r.x) out << ',' << format_double(v);
        out << '\n';
    }
}

void save_dataset(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    write_dataset(out, dataset);
}

OutputFormat parse_output_format(const std::string& text) {
    if (text == "csv") return OutputFormat::kCsv;
    if (text == "markdown" || text == "md") return OutputFormat::kMarkdown;
    throw ValidationError("unknown output format '" + text + "'");
}

void Table::write(std::ostream& out, OutputFormat format) const {
    if (format == OutputFormat::kCsv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                if (j) out << ',';
                out << cells[j];
            }
            out << '\n';
        };
        line(columns);
        for (const auto& row : rows) line(row);
        return;
    }
    std::vector<std::size_t> width(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        width[j] = std::max<std::size_t>(3, columns[j].size());
        for (const auto& row : rows) width[j] = std::max(width[j], row[j].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        out << '|';
        for (std::size_t j = 0; j < cells.size(); ++j) {
            out << ' ' << std::left << std::setw(int(width[j])) << cells[j]
                << " |";
        }
        out << '\n';
    };
    line(columns);
    out << '|';
    for (auto w : width) out << std::string(w + 2, '-') << '|';
    out << '\n';
    for (const auto& row : rows) line(row);
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string opt(const std::optional<double>& v, int digits = 6) {
    return v ? fixed(*v, digits) : std::string();
}

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("config: bad value for '" + key + "'");
    }
}

const std::set<std::string> kScenarioOverrideKeys{
    "scenario.mu1h", "scenario.ph",    "scenario.mu2h",  "scenario.mu3h",
    "scenario.var1h", "scenario.var2h", "scenario.var3h", "scenario.var_h",
    "scenario.gamma", "scenario.label"};

}  // namespace

RunConfig parse_run_config(const nlohmann::json& flat) {
    if (!flat.is_object()) {
        throw ValidationError("config: top level must be a JSON object");
    }
    RunConfig c;
    for (const auto& [key, v] : flat.items()) {
        if (key == "design.alpha") {
            c.design.alpha = get_as<double>(v, key);
        } else if (key == "design.power") {
            c.design.power = get_as<double>(v, key);
        } else if (key == "design.delta") {
            c.design.delta = get_as<double>(v, key);
        } else if (key == "design.tau0") {
            c.design.tau0 = get_as<double>(v, key);
        } else if (key == "design.sigma1_sq") {
            c.design.sigma1_sq = get_as<double>(v, key);
            c.sigma1_sq_set = true;
        } else if (key == "design.sigma0_sq") {
            c.design.sigma0_sq = get_as<double>(v, key);
            c.sigma0_sq_set = true;
        } else if (key == "design.alloc_ratio") {
            const auto r = get_as<std::vector<int>>(v, key);
            if (r.size() != 2) {
                throw ValidationError("config: design.alloc_ratio needs [t, c]");
            }
            c.design.alloc_ratio = {r[0], r[1]};
        } else if (key == "design.one_sided") {
            c.design.one_sided = get_as<bool>(v, key);
        } else if (key == "scenario.ids") {
            c.scenario_ids = get_as<std::vector<int>>(v, key);
        } else if (key == "scenario.beta1") {
            c.treatment_effects = v.is_array()
                                      ? get_as<std::vector<double>>(v, key)
                                      : std::vector<double>{get_as<double>(v, key)};
        } else if (kScenarioOverrideKeys.contains(key)) {
            c.scenario_overrides[key] = v;
        } else if (key == "sim.reps") {
            c.reps = get_as<std::size_t>(v, key);
        } else if (key == "sim.seed") {
            c.seed = get_as<std::uint64_t>(v, key);
        } else if (key == "sim.interim_fraction") {
            c.interim_fraction = get_as<double>(v, key);
        } else if (key == "sim.n_h") {
            c.n_h = get_as<std::size_t>(v, key);
        } else if (key == "sim.beta5") {
            c.beta5 = get_as<double>(v, key);
        } else if (key == "sim.propensity_mode") {
            const auto mode = get_as<std::string>(v, key);
            if (mode == "fit") {
                c.propensity_mode = PropensityMode::kFit;
            } else if (mode == "fixed") {
                c.propensity_mode = PropensityMode::kFixed;
            } else {
                throw ValidationError("config: sim.propensity_mode must be "
                                      "'fit' or 'fixed'");
            }
        } else {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }
    c.design.validate();
    if (!(c.interim_fraction > 0.0 && c.interim_fraction < 1.0)) {
        throw ValidationError("config: sim.interim_fraction outside (0, 1)");
    }
    if (c.reps < 1) throw ValidationError("config: sim.reps must be >= 1");
    if (c.scenario_ids.empty() || c.treatment_effects.empty()) {
        throw ValidationError("config: empty scenario list");
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config '" + path + "': " + e.what());
    }
    return parse_run_config(j);
}

StudyConfig make_study_config(const RunConfig& config) {
    StudyConfig s;
    s.reps = config.reps;
    s.seed = config.seed.value_or(0);
    s.design.design = config.design;
    if (config.sigma1_sq_set) s.design.sigma1_sq = config.design.sigma1_sq;
    if (config.sigma0_sq_set) s.design.sigma0_sq = config.design.sigma0_sq;
    s.design.interim_fraction = config.interim_fraction;
    s.design.propensity_mode = config.propensity_mode;

    const auto& o = config.scenario_overrides;
    for (double effect : config.treatment_effects) {
        for (int id : config.scenario_ids) {
            Scenario sc = scenario_preset(id, effect, config.beta5, config.n_h);
            auto& h = sc.historical;
            auto num = [&](const char* key, double& target) {
                if (o.contains(key)) target = get_as<double>(o.at(key), key);
            };
            num("scenario.mu1h", h.mu1);
            num("scenario.ph", h.p);
            num("scenario.mu2h", h.mu2);
            num("scenario.mu3h", h.mu3);
            num("scenario.var1h", h.var1);
            num("scenario.var2h", h.var2);
            num("scenario.var3h", h.var3);
            num("scenario.var_h", h.outcome_var);
            if (o.contains("scenario.gamma")) {
                sc.gamma = get_as<std::vector<double>>(o.at("scenario.gamma"),
                                                       "scenario.gamma");
            }
            if (o.contains("scenario.label")) {
                sc.label = get_as<std::string>(o.at("scenario.label"),
                                               "scenario.label");
            }
            sc.validate();
            s.scenarios.push_back(std::move(sc));
        }
    }
    return s;
}

Table metrics_table(const MetricsTable& metrics) {
    Table t;
    t.columns = {"scenario", "beta1"};
    for (const char* arm : kAnalysisArmNames) t.columns.emplace_back(arm);
    for (const char* col : {"# of SS", "# of SSR1", "# of SSR2"}) {
        t.columns.emplace_back(col);
    }
    for (const char* arm : kAnalysisArmNames) {
        t.columns.push_back(std::string("SE ") + arm);
    }
    t.columns.insert(t.columns.end(), {"reps", "truncated", "failures"});
    for (const auto& row : metrics.rows) {
        std::vector<std::string> cells{row.label, format_double(row.treatment_effect)};
        std::size_t failures = 0;
        for (const auto& arm : row.arms) {
            cells.push_back(fixed(arm.rate, 2));
            failures += arm.failures;
        }
        cells.push_back(fixed(row.mean_initial_n, 1));
        cells.push_back(fixed(row.mean_ssr1_n, 1));
        cells.push_back(fixed(row.mean_ssr2_n, 1));
        for (const auto& arm : row.arms) cells.push_back(fixed(arm.mc_se, 2));
        cells.push_back(std::to_string(row.reps));
        cells.push_back(std::to_string(row.truncations));
        cells.push_back(std::to_string(failures));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

Table ssr_table(const std::vector<SSRResult>& results) {
    Table t;
    t.columns = {"strategy", "n_hat",        "n_raw",         "s1_sq",
                 "sigma1_hat_sq", "sigma0_hat_sq", "inflation1", "inflation0",
                 "k",        "alpha",        "power",         "delta"};
    for (const auto& r : results) {
        t.rows.push_back({std::to_string(r.strategy), std::to_string(r.n_hat),
                          fixed(r.n_raw, 4), opt(r.s1_sq), opt(r.sigma1_hat_sq),
                          opt(r.sigma0_hat_sq), opt(r.inflation1),
                          opt(r.inflation0), opt(r.k), format_double(r.alpha),
                          format_double(r.power), format_double(r.delta)});
    }
    return t;
}

Table test_table(const TestResult& r, const DesignParams& design) {
    Table t;
    t.columns = {"theta1_hat", "theta0_hat", "sigma_star_sq", "statistic",
                 "p_value",    "reject",     "n_used",        "tau0"};
    t.rows.push_back({fixed(r.theta1_hat, 5), fixed(r.theta0_hat, 5),
                      fixed(r.sigma_star_sq, 5), fixed(r.statistic, 5),
                      fixed(r.p_value, 6), r.reject ? "1" : "0",
                      std::to_string(r.n_used), format_double(design.tau0)});
    return t;
}

Table summary_table(const SummaryTable& summary) {
    Table t;
    t.columns = {"variable"};
    for (const auto& g : summary.groups) t.columns.push_back(g.label);
    auto cell = [](const ColumnStats& s) {
        if (!s.mean) return std::string();
        std::string out = fixed(*s.mean, 2);
        if (s.sd) out += " (" + fixed(*s.sd, 2) + ")";
        return out;
    };
    std::vector<std::string> n_row{"N"};
    for (const auto& g : summary.groups) n_row.push_back(std::to_string(g.count));
    t.rows.push_back(std::move(n_row));
    for (std::size_t j = 0; j < summary.covariate_names.size(); ++j) {
        std::vector<std::string> row{summary.covariate_names[j]};
        for (const auto& g : summary.groups) row.push_back(cell(g.covariates[j]));
        t.rows.push_back(std::move(row));
    }
    std::vector<std::string> y_row{"y"};
    for (const auto& g : summary.groups) y_row.push_back(g.y ? cell(*g.y) : "");
    t.rows.push_back(std::move(y_row));
    return t;
}

Table weights_table(const Dataset& dataset, const WeightSet& weights) {
    Table t;
    t.columns = {"id", "study", "e", "w_r0", "w_r1"};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        t.rows.push_back({dataset[i].id, dataset[i].is_current() ? "1" : "0",
                          format_double(weights.e[i]),
                          format_double(weights.w_r0[i]),
                          format_double(weights.w_r1[i])});
    }
    return t;
}

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Table weight_quantile_table(const Dataset& dataset, const WeightSet& weights) {
    Table t;
    t.columns = {"quantity", "study", "n", "min", "q1", "median", "q3", "max"};
    for (const char* quantity : {"e", "w_r0"}) {
        for (Source source : {Source::kCurrent, Source::kHistorical}) {
            std::vector<double> v;
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                if (dataset[i].source != source) continue;
                v.push_back(quantity[0] == 'e' ? weights.e[i] : weights.w_r0[i]);
            }
            std::vector<std::string> row{
                quantity, source == Source::kCurrent ? "1" : "0",
                std::to_string(v.size())};
            for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                row.push_back(v.empty() ? "" : format_double(sample_quantile(v, q)));
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

}  // namespace hybridssr
