#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmp/engine.hpp"
#include "pmp/instance.hpp"

namespace pmp {

struct TieBreak {
    enum Kind { Single, Multiple } kind = Single;
    std::vector<int> pos;                      // single: permutation position per student
    std::vector<std::vector<uint64_t>> keys;   // multiple: [course][student]

    // single order shared with the PMP budget rank
    static TieBreak single_from_rank(const std::vector<int>& rank_order);
    static TieBreak multiple(int n, int m, uint64_t seed);

    // strict comparison of students in course c's eyes, given priority levels
    bool before(int course, int a, int b, int level_a, int level_b) const;
};

// Remaining seats per course: reserved pools (year-descending spec order)
// ahead of regular seats for eligible students.
struct SeatLedger {
    std::vector<std::vector<int>> pool_specs;  // per course, reserve indices, year desc
    std::vector<std::vector<int>> pool_left;
    std::vector<int> regular_left;

    SeatLedger(const Instance& inst, const std::vector<ReserveSpec>& reserves);
    bool available(const Instance& inst, const std::vector<ReserveSpec>& reserves, int s,
                   int c) const;
    void take(const Instance& inst, const std::vector<ReserveSpec>& reserves, int s, int c);
};

// serial dictatorship in rank order, greedy over utilities, reserves honored
Allocation rsd(const Instance& inst, const std::vector<ReserveSpec>& reserves,
               const std::vector<int>& student_rank);

// many-to-many student-proposing deferred acceptance; pass reserves for the
// minority-reserve variant
Allocation da(const Instance& inst, const TieBreak& tiebreak,
              const std::vector<ReserveSpec>* reserves = nullptr);

// average reserve-eligible DA-STB enrollment over utility environments,
// rounded half-away-from-zero and capped at capacity
std::vector<ReserveSpec> optimal_reserves(const Instance& inst,
                                          const std::function<Instance(uint64_t)>& env_factory,
                                          int n_envs, uint64_t seed);

// flat-price special cases of the engine
EquilibriumResult aceei(const Instance& inst, EngineConfig cfg, bool kludgy);

// simultaneous eating, cohort by cohort (year 4 first), reserved mass first
Allocation ps_seniority_reserves(const Instance& inst);

}  // namespace pmp
