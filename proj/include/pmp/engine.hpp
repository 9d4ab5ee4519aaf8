#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pmp/demand.hpp"
#include "pmp/instance.hpp"

namespace pmp {

struct EngineConfig {
    double beta = 0.25;              // budget spread, 1/(k-1) for the envy guarantee
    Units bbar = kDefaultBbar;
    PricingRule rule = PricingRule::PrioritySpecific;
    double gamma_step = 1.0;         // tatonnement step scale
    int patience = 30;               // scaled by the round number
    double improve_eps = 0.01;
    int max_iters = 600;             // phase-one iteration cap, scaled by round number
    int max_rounds = 6;
    int phase2_max_passes = 40;
    // fraction-of-courses thresholds for over-enrollment >= 1..5
    std::vector<double> target_error_distribution = {0.073, 0.041, 0.033, 0.025, 0.019};
    int outer_restarts = 3;
    uint64_t seed = 0;
    bool parallel = true;
};

struct PhaseTrace {
    int rounds = 0;
    int restarts = 0;
    long long iterations = 0;
    long long demand_solves = 0;
};

struct EquilibriumResult {
    Allocation alloc;
    PriceParameter prices;
    std::vector<Units> budgets;
    std::vector<int> cutoffs;
    std::vector<int> z;
    double error = 0.0;
    double theory_bound = 0.0;
    bool certified = false;
    bool boundcheck = false;
    bool oversubcheck = false;
    PhaseTrace trace;
};

// evenly spaced budgets on [1, 1+beta]; rank[0] = highest-budget student
std::vector<Units> assign_budgets(const std::vector<int>& student_rank, double beta);

// seniority (year descending) with a seeded tie-break shared across mechanisms
std::vector<int> seniority_rank(const Instance& inst, uint64_t tiebreak_seed);

// educated price guess from ideal-bundle over-demand
PriceParameter initial_price(const Instance& inst, const std::vector<Units>& budgets,
                             const EngineConfig& cfg);

struct PhaseState {
    PriceParameter p;
    BatchDemand bd;
};

struct PhaseOneResult {
    bool boundcheck = false;
    long long iterations = 0;
};

struct PhaseTwoResult {
    bool boundcheck = false;
    bool oversubcheck = false;
};

PhaseOneResult phase_one(PhaseState& state, const Instance& inst,
                         const std::vector<Units>& budgets,
                         const std::vector<std::vector<int>>& ideal, const EngineConfig& cfg,
                         int nround);

PhaseTwoResult phase_two(PhaseState& state, const Instance& inst,
                         const std::vector<Units>& budgets,
                         const std::vector<std::vector<int>>& ideal, const EngineConfig& cfg);

EquilibriumResult solve(const Instance& inst, const EngineConfig& cfg,
                        std::optional<std::vector<int>> student_rank = std::nullopt);

// Independent check of the equilibrium definition against an explicit
// level-price matrix (course x level, units).
struct VerifyReport {
    bool demand_optimal = false;
    bool condition_star = false;
    bool cutoff_demander = false;
    bool budgets_in_range = false;
    bool bound_ok = false;
    double error = 0.0;

    bool ok() const {
        return demand_optimal && condition_star && cutoff_demander && budgets_in_range &&
               bound_ok;
    }
};

VerifyReport verify_equilibrium(const Instance& inst,
                                const std::vector<std::vector<Units>>& prices,
                                const std::vector<Units>& budgets, const Allocation& alloc,
                                double alpha, double beta, Units bbar = kDefaultBbar);

}  // namespace pmp
