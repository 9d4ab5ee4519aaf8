#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pmp/instance.hpp"

namespace pmp {

constexpr int kColleges = 7;  // A..G

// u_{sc} = theta[a][y] + gamma[a][a'] + z_c + sigma * eps
struct UtilityModelParams {
    std::array<std::array<double, 4>, kColleges> theta{};   // college x year
    std::array<std::array<double, kColleges>, kColleges> gamma{};  // student x course college
    std::vector<std::pair<double, double>> z_quantiles;     // (prob, value) anchors
    double sigma = 1.0;
    int choice_set_size = 80;
    // choice-set draw weights: student college x course college enrollment shares
    std::array<std::array<double, kColleges>, kColleges> pair_share{};
    std::vector<std::pair<double, double>> capacity_quantiles;
    int departments_per_college = 3;
};

UtilityModelParams default_params();

// piecewise-linear inverse CDF through the anchors
double quantile_interp(const std::vector<std::pair<double, double>>& anchors, double u);

struct CensusSpec {
    std::array<std::array<int, 4>, kColleges> students{};  // per college, per year
    std::array<int, kColleges> courses{};

    int total_students() const;
    int total_courses() const;

    // full-population census scaled by `ratio` (students spread evenly over years)
    static CensusSpec scaled(double ratio);
};

struct ReserveGenSpec {
    double course_fraction = 0.3;  // share of courses that carry a reserve
    double seat_fraction = 0.25;   // reserved share of capacity
};

struct GenConfig {
    UtilityModelParams params;
    CensusSpec census;
    ReserveGenSpec reserves;
    int k = 5;
    PriorityMode mode = PriorityMode::Hybrid;

    GenConfig() : params(default_params()), census(CensusSpec::scaled(0.1)) {}
};

// Deterministic in (config, seed). `utility_seed` overrides only the noise
// draw, keeping the structural draws (capacities, z, choice sets, reserves)
// fixed — used to redraw utility environments on an otherwise identical
// instance.
Instance generate_instance(const GenConfig& config, uint64_t seed,
                           std::optional<uint64_t> utility_seed = std::nullopt);

// factory of utility environments for reserve estimation
std::function<Instance(uint64_t)> environment_factory(const GenConfig& config, uint64_t seed);

}  // namespace pmp
