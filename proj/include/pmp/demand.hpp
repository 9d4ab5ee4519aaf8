#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pmp/instance.hpp"

namespace pmp {

// All prices and budgets live on a fixed 1e-6 grid of the budget scale so that
// affordability checks are exact and incremental/full recomputation agree.
using Units = long long;
constexpr double kGridScale = 1e6;

inline Units to_units(double v) { return (Units)std::llround(v * kGridScale); }
inline double from_units(Units u) { return (double)u / kGridScale; }

constexpr Units kDefaultBbar = 1251000;  // 1.251

// One scalar t per course, expanded to priority-specific prices.
struct PriceParameter {
    std::vector<Units> t;
    Units bbar = kDefaultBbar;

    Units max_t(int R) const { return (Units)R * bbar; }
};

enum class PricingRule {
    PrioritySpecific,  // p_{c,r} = max(t_c - (r-1)*bbar, 0)
    Uniform,           // p_c = t_c at every level
    Kludgy,            // p_{c,r} = t_c * (1 - (r-1)/R)
};

Units faced_price(PricingRule rule, Units t, int level, int R, Units bbar);

// 1 + floor(t/bbar), clamped to R at the top boundary
int cutoff_level(Units t, Units bbar, int R);

struct ExpandedPrices {
    std::vector<std::vector<Units>> price;  // [course][level-1]
    std::vector<int> cutoff;                // r*_c
};

ExpandedPrices expand_prices(const PriceParameter& p, int R);

// Most-preferred affordable schedule for one utility row.
//   row:    (course, utility) pairs, any order
//   faced:  price faced for the matching row entry, same length
//   id_rank: global lexicographic rank of each course id (tie-breaking)
// Ties: max utility, then min cost, then lexicographically smallest sorted
// course-id sequence.
std::vector<int> student_demand(const std::vector<std::pair<int, double>>& row,
                                const std::vector<Units>& faced, Units budget, int k,
                                const std::vector<int>& id_rank);

// convenience wrapper building faced prices from the instance's priorities
std::vector<int> demand_for_student(const Instance& inst, int s, PricingRule rule,
                                    const PriceParameter& p, Units budget);

struct BatchDemand {
    Allocation alloc;
    std::vector<int> z;   // excess per course (under-enrollment clamped at free courses)
    double znorm = 0.0;
    int solves = 0;       // instrumentation: student demand recomputations
};

// z_c = enrollment - q_c when the level-1 price is positive, else clamped at 0.
void compute_excess(const Instance& inst, const PriceParameter& p, const Allocation& alloc,
                    std::vector<int>& z, double& znorm);

BatchDemand batch_demand(const Instance& inst, PricingRule rule, const PriceParameter& p,
                         const std::vector<Units>& budgets, bool parallel = true);

// ideal bundle = demand at all-zero prices (top-k positive utilities)
std::vector<std::vector<int>> ideal_bundles(const Instance& inst);

// Recomputes only students whose previous schedule became unaffordable or who
// are off their ideal bundle and saw an in-budget price drop on a wanted course.
BatchDemand incremental_batch_demand(const Instance& inst, PricingRule rule,
                                     const PriceParameter& prev_p, const Allocation& prev,
                                     const PriceParameter& new_p,
                                     const std::vector<Units>& budgets,
                                     const std::vector<std::vector<int>>& ideal);

}  // namespace pmp
