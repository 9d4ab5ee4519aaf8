#pragma once

#include <vector>

#include "pmp/instance.hpp"

namespace pmp {

// One course's reserve structure: capacity q, criteria A_1..A_I with reserve
// counts r[i], and per-cell student counts x[T] for every criterion-membership
// subset T (x[0] counts students matching no criterion).
struct ReserveSystem {
    int q = 0;
    std::vector<int> r;  // size I
    std::vector<int> x;  // size 1 << I

    int criteria() const { return (int)r.size(); }
    int total_students() const;
};

// Hall-condition inequality family: for every criterion subset P,
//   sum of x[T] over T subset of P  <=  q - sum of r[j] over j outside P.
bool is_feasible(const ReserveSystem& sys);

// Independent check: explicit bipartite matching of students to seats
// (reserved pools plus open seats). Guarded to <= 200 students.
bool feasibility_oracle(const ReserveSystem& sys);

struct ReserveChange {
    int course;
    int spec_index;  // index into Instance::reserves
    int old_seats;
    int new_seats;
};

struct AdjustResult {
    std::vector<ReserveSpec> reserves;      // full adjusted list
    std::vector<ReserveChange> log;
    std::vector<int> adjusted_capacity;     // max(q_c, enrollment_c)
};

// Builds the ReserveSystem a course faces under an allocation (cells from the
// specs' department/year predicates, q raised to enrollment if over-enrolled).
ReserveSystem course_system(const Instance& inst, const std::vector<int>& enrollment_students,
                            int course, const std::vector<ReserveSpec>& reserves);

// Cyclic decrement (year-descending spec order, zero-seat specs skipped) until
// every course's system passes is_feasible.
AdjustResult adjust_reserves(const Instance& inst, const Allocation& alloc);

}  // namespace pmp
