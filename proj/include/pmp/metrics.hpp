#pragma once

#include <array>
#include <vector>

#include "pmp/engine.hpp"
#include "pmp/instance.hpp"

namespace pmp {

// A blocking opportunity: student s strictly prefers schedule `courses`, which
// is feasible under adjusted capacities q'_c = enrollment (seats freed only by
// displacing strictly-lower-priority holders).
struct Block {
    int student = -1;
    std::vector<int> courses;
};

std::vector<Block> check_stability(const Instance& inst, const Allocation& alloc);

struct EfficiencyVerdict {
    bool skipped = false;     // enumeration guard exceeded; no verdict
    bool efficient = false;
    // when inefficient: a Pareto-dominating allocation respecting priorities
    std::vector<std::vector<int>> dominator;
};

EfficiencyVerdict check_priority_efficiency(const Instance& inst, const Allocation& alloc,
                                            long long max_candidates = 1000000);

struct EnvyProfile {
    std::vector<int> depth;      // per student, 0..k
    std::vector<int> histogram;  // size k+1, sums to n
};

EnvyProfile envy_profile(const Instance& inst, const Allocation& alloc);

// share of students who would gain a strictly preferred schedule by taking a
// seat (or seat share) held by a strictly-lower-priority student
double priority_violations(const Instance& inst, const Allocation& alloc);

struct CompareReport {
    // shares per year (index year-1) and overall
    std::array<double, 4> prefer_a{}, prefer_b{}, indifferent{};
    double overall_prefer_a = 0.0, overall_prefer_b = 0.0;
    // mean relative total-utility change among students with u(A) != u(B)
    double mean_relative_gain = 0.0;
    int changed = 0;
    std::array<double, 4> std_a{}, std_b{}, std_change_pct{};
};

CompareReport compare(const Instance& inst, const Allocation& a, const Allocation& b);

struct PriceStats {
    std::vector<int> cutoff_hist;            // index level-1, size R
    std::vector<double> mean_cutoff_price;   // by cutoff level, 0 where empty
    std::vector<std::array<int, 4>> paid_by_year;  // [count paid][year-1], count 0..k
};

PriceStats price_statistics(const Instance& inst, const EquilibriumResult& eq,
                            PricingRule rule = PricingRule::PrioritySpecific);

}  // namespace pmp
