#include "hybridssr/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include "hybridssr/errors.hpp"

namespace hybridssr {

Dataset::Dataset(std::vector<std::string> covariate_names,
                 std::vector<SubjectRecord> records, bool enrollment_ordered)
    : covariate_names_(std::move(covariate_names)),
      records_(std::move(records)),
      enrollment_ordered_(enrollment_ordered) {
    for (const auto& r : records_) {
        if (r.is_current()) ++n_current_;
    }
}

Dataset Dataset::subset(Source source) const {
    std::vector<SubjectRecord> out;
    for (const auto& r : records_) {
        if (r.source == source) out.push_back(r);
    }
    return Dataset(covariate_names_, std::move(out), enrollment_ordered_);
}

Dataset Dataset::masked() const {
    auto out = records_;
    for (auto& r : out) {
        if (r.is_current()) r.arm = Arm::kMasked;
    }
    return Dataset(covariate_names_, std::move(out), enrollment_ordered_);
}

Dataset Dataset::without_outcomes() const {
    auto out = records_;
    for (auto& r : out) r.y.reset();
    return Dataset(covariate_names_, std::move(out), enrollment_ordered_);
}

Dataset Dataset::concat(const Dataset& other) const {
    if (other.covariate_names_ != covariate_names_) {
        throw ValidationError("concat: covariate names differ");
    }
    auto out = records_;
    out.insert(out.end(), other.records_.begin(), other.records_.end());
    return Dataset(covariate_names_, std::move(out),
                   enrollment_ordered_ && other.enrollment_ordered_);
}

std::vector<Violation> validate(const Dataset& dataset) {
    std::vector<Violation> out;
    std::unordered_set<std::string> seen;
    const std::size_t p = dataset.num_covariates();
    for (const auto& r : dataset) {
        if (r.id.empty()) out.push_back({r.id, "empty id"});
        if (!seen.insert(r.id).second) out.push_back({r.id, "duplicate id"});
        if (r.is_historical()) {
            if (r.arm == Arm::kTreated) {
                out.push_back({r.id, "historical subject with a=1"});
            } else if (r.arm == Arm::kMasked) {
                out.push_back({r.id, "historical subject with masked arm"});
            }
        }
        if (r.x.size() != p) {
            out.push_back({r.id, "covariate count mismatch"});
        } else {
            for (double v : r.x) {
                if (!std::isfinite(v)) {
                    out.push_back({r.id, "incomplete covariates"});
                    break;
                }
            }
        }
        if (r.y && !std::isfinite(*r.y)) {
            out.push_back({r.id, "non-finite outcome"});
        }
    }
    return out;
}

void require_valid(const Dataset& dataset) {
    auto violations = validate(dataset);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw ValidationError("invalid dataset: " + v.message + " (id '" +
                              v.id + "')");
    }
}

ColumnStats column_stats(const std::vector<double>& values) {
    ColumnStats s;
    s.count = values.size();
    if (values.empty()) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

namespace {

GroupSummary summarize_group(std::string label,
                             const std::vector<const SubjectRecord*>& members,
                             std::size_t p, bool with_y) {
    GroupSummary g;
    g.label = std::move(label);
    g.count = members.size();
    std::vector<double> column;
    column.reserve(members.size());
    for (std::size_t j = 0; j < p; ++j) {
        column.clear();
        for (const auto* r : members) column.push_back(r->x[j]);
        g.covariates.push_back(column_stats(column));
    }
    if (with_y) {
        column.clear();
        for (const auto* r : members) {
            if (r->y) column.push_back(*r->y);
        }
        g.y = column_stats(column);
    }
    return g;
}

}  // namespace

SummaryTable summarize(const Dataset& dataset, bool masked) {
    require_valid(dataset);
    const std::size_t p = dataset.num_covariates();
    std::vector<const SubjectRecord*> historical, control, treated, current;
    for (const auto& r : dataset) {
        if (r.is_historical()) {
            historical.push_back(&r);
            continue;
        }
        current.push_back(&r);
        if (masked) continue;
        if (r.arm == Arm::kMasked) {
            throw ValidationError(
                "summarize: masked arm in unmasked view (id '" + r.id + "')");
        }
        (r.arm == Arm::kTreated ? treated : control).push_back(&r);
    }

    SummaryTable t;
    t.covariate_names = dataset.covariate_names();
    t.masked = masked;
    t.groups.push_back(
        summarize_group(kGroupHistoricalPlacebo, historical, p, true));
    if (!masked) {
        t.groups.push_back(
            summarize_group(kGroupCurrentPlacebo, control, p, true));
        t.groups.push_back(
            summarize_group(kGroupCurrentTreated, treated, p, true));
    }
    t.groups.push_back(summarize_group(kGroupCurrentTotal, current, p, masked));
    return t;
}

}  // namespace hybridssr
