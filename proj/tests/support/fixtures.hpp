#pragma once

#include <string>
#include <vector>

#include "hybridssr/dataset.hpp"
#include "hybridssr/random.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace hybridssr;

inline SubjectRecord subject(std::string id, int r, int a, double y,
                             std::vector<double> x = {0.0}) {
    SubjectRecord s;
    s.id = std::move(id);
    s.source = r ? Source::kCurrent : Source::kHistorical;
    s.arm = a ? Arm::kTreated : Arm::kControl;
    s.y = y;
    s.x = std::move(x);
    return s;
}

// Treated y = (10, 12); current control y = 9; historical y = (8, 7) with
// propensities (0.6, 0.4).
inline Dataset worked_example() {
    return Dataset({"x1"}, {subject("t1", 1, 1, 10), subject("t2", 1, 1, 12),
                            subject("c1", 1, 0, 9), subject("h1", 0, 0, 8),
                            subject("h2", 0, 0, 7)});
}
inline const std::vector<double> kWorkedPropensities{0.5, 0.5, 0.5, 0.6, 0.4};

inline std::vector<oracle::Subject> worked_example_oracle() {
    return {{1, 1, 10, 0.5}, {1, 1, 12, 0.5}, {1, 0, 9, 0.5},
            {0, 0, 8, 0.6},  {0, 0, 7, 0.4}};
}

// Random hybrid dataset: n_t treated, n_c current controls, n_h historical,
// two covariates, and a propensity per subject in [0.05, 0.95].
struct RandomHybrid {
    Dataset data;
    std::vector<double> e;
};

inline RandomHybrid random_hybrid(RandomStream& rng, std::size_t n_t,
                                  std::size_t n_c, std::size_t n_h) {
    std::vector<SubjectRecord> recs;
    std::vector<double> e;
    auto add = [&](const char* prefix, std::size_t count, int r, int a) {
        for (std::size_t i = 0; i < count; ++i) {
            recs.push_back(subject(prefix + std::to_string(i), r, a,
                                   rng.normal(50 + 3 * a, 10),
                                   {rng.normal(0, 1), rng.normal(5, 2)}));
            e.push_back(0.05 + 0.9 * rng.uniform());
        }
    };
    add("t", n_t, 1, 1);
    add("c", n_c, 1, 0);
    add("h", n_h, 0, 0);
    return {Dataset({"x1", "x2"}, std::move(recs)), std::move(e)};
}

}  // namespace fixtures
