#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hybridssr {

/// Study membership R: 1 = current randomized study, 0 = historical control.
enum class Source : unsigned char { kHistorical = 0, kCurrent = 1 };

/// Treatment assignment A. kMasked models a blinded current-study subject.
enum class Arm : unsigned char { kControl = 0, kTreated = 1, kMasked = 2 };

struct SubjectRecord {
    std::string id;
    Source source = Source::kCurrent;
    Arm arm = Arm::kMasked;
    std::optional<double> y;  // empty = outcome not (yet) observed
    std::vector<double> x;

    bool is_current() const { return source == Source::kCurrent; }
    bool is_historical() const { return source == Source::kHistorical; }
};

/*
 * An ordered, immutable collection of subjects sharing one covariate layout.
 *
 * Construction never throws on invariant breaches; use validate() to list
 * them. Operations downstream check their own preconditions.
 */
class Dataset {
   public:
    Dataset() = default;
    Dataset(std::vector<std::string> covariate_names,
            std::vector<SubjectRecord> records,
            bool enrollment_ordered = true);

    const std::vector<SubjectRecord>& records() const { return records_; }
    const std::vector<std::string>& covariate_names() const {
        return covariate_names_;
    }
    const SubjectRecord& operator[](std::size_t i) const { return records_[i]; }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    std::size_t num_covariates() const { return covariate_names_.size(); }
    std::size_t n_current() const { return n_current_; }
    std::size_t n_historical() const { return records_.size() - n_current_; }
    bool enrollment_ordered() const { return enrollment_ordered_; }

    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

    /// Subjects with the given source, order preserved.
    Dataset subset(Source source) const;

    /// Copy with every current-study arm replaced by kMasked.
    Dataset masked() const;

    /// Copy with every outcome removed.
    Dataset without_outcomes() const;

    /// Records of `this` followed by those of `other` (same covariate names).
    Dataset concat(const Dataset& other) const;

   private:
    std::vector<std::string> covariate_names_;
    std::vector<SubjectRecord> records_;
    bool enrollment_ordered_ = true;
    std::size_t n_current_ = 0;
};

struct Violation {
    std::string id;
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Every broken invariant, one entry per (record, invariant). Empty means
/// the dataset is acceptable to every downstream operation.
std::vector<Violation> validate(const Dataset& dataset);

/// Throws ValidationError naming the first violation, if any.
void require_valid(const Dataset& dataset);

struct ColumnStats {
    std::size_t count = 0;
    std::optional<double> mean;
    std::optional<double> sd;  // n-1 denominator; empty when count < 2
};

struct GroupSummary {
    std::string label;
    std::size_t count = 0;
    std::vector<ColumnStats> covariates;
    std::optional<ColumnStats> y;  // empty when the group's outcome is hidden
};

struct SummaryTable {
    std::vector<std::string> covariate_names;
    std::vector<GroupSummary> groups;
    bool masked = false;
};

inline constexpr const char* kGroupHistoricalPlacebo = "historical placebo";
inline constexpr const char* kGroupCurrentPlacebo = "current placebo";
inline constexpr const char* kGroupCurrentTreated = "current treated";
inline constexpr const char* kGroupCurrentTotal = "current total";

/*
 * Per-group baseline summary. The masked view drops the arm-specific rows
 * and never inspects current-study arms; outcome statistics are then pooled
 * over the whole current study.
 */
SummaryTable summarize(const Dataset& dataset, bool masked);

/// Mean and n-1 SD of a sample; absent entries are skipped.
ColumnStats column_stats(const std::vector<double>& values);

}  // namespace hybridssr
