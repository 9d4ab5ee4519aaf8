#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pmp/instance.hpp"
#include "pmp/rng.hpp"

namespace pmp::testing {

inline Student student(std::string id, char college, int year, std::string dept) {
    Student s;
    s.id = std::move(id);
    s.college = college;
    s.year = year;
    s.department = std::move(dept);
    return s;
}

inline Course course(std::string id, char college, int capacity) {
    Course c;
    c.id = std::move(id);
    c.college = college;
    c.capacity = capacity;
    return c;
}

inline ReserveSpec reserve(int course, std::vector<std::string> depts, std::vector<int> years,
                           int seats) {
    ReserveSpec r;
    r.course = course;
    if (depts.size() == 1 && depts[0] == "All") r.all_departments = true;
    else r.departments = std::move(depts);
    if (years.empty()) r.all_years = true;
    else r.years = std::move(years);
    r.seats = seats;
    return r;
}

// The canonical 2-student / 2-course fixture: one seat each, unit demand,
// opposed top choices, each student reserve-eligible for the other's favorite.
inline Instance two_by_two() {
    Instance inst;
    inst.k = 1;
    inst.R = 8;
    inst.mode = PriorityMode::Hybrid;
    inst.students = {student("s1", 'A', 1, "d1"), student("s2", 'A', 1, "d2")};
    inst.courses = {course("A", 'A', 1), course("B", 'A', 1)};
    inst.reserves = {reserve(0, {"d2"}, {}, 1), reserve(1, {"d1"}, {}, 1)};
    inst.utilities = {{{0, 2.0}, {1, 1.0}}, {{0, 1.0}, {1, 2.0}}};
    inst.finalize();
    return inst;
}

// Small random instance: hybrid priorities, a few random reserves, utility
// rows over random course subsets. Deterministic in seed.
inline Instance random_instance(uint64_t seed, int n = 30, int m = 10, int k = 3,
                                int choice = 8) {
    SplitMix64 g(seed);
    Instance inst;
    inst.k = k;
    inst.R = 8;
    inst.mode = PriorityMode::Hybrid;
    for (int s = 0; s < n; ++s)
        inst.students.push_back(student("s" + std::to_string(s), (char)('A' + g.below(7)),
                                        1 + (int)g.below(4), "d" + std::to_string(g.below(3))));
    for (int c = 0; c < m; ++c)
        inst.courses.push_back(course("c" + std::to_string(c), (char)('A' + g.below(7)),
                                      1 + (int)g.below(5)));
    for (int c = 0; c < m; ++c) {
        if (g.uniform() < 0.4) {
            int year = 1 + (int)g.below(4);
            int seats = std::min(inst.courses[c].capacity, 1 + (int)g.below(2));
            inst.reserves.push_back(reserve(c, {"d" + std::to_string(g.below(3))},
                                            {year}, seats));
        }
    }
    inst.utilities.assign(n, {});
    for (int s = 0; s < n; ++s) {
        std::vector<int> pool(m);
        for (int c = 0; c < m; ++c) pool[c] = c;
        for (int i = 0; i < choice && i < m; ++i) {
            int j = i + (int)g.below(m - i);
            std::swap(pool[i], pool[j]);
            inst.utilities[s].emplace_back(pool[i], g.normal() + 0.5);
        }
    }
    inst.finalize();
    return inst;
}

}  // namespace pmp::testing
