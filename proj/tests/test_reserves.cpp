#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "common.hpp"
#include "pmp/reserves.hpp"

using namespace pmp;
using namespace pmp::testing;

TEST_CASE("hand-evaluated two-criterion systems") {
    ReserveSystem sys;
    sys.q = 10;
    sys.r = {3, 4};
    sys.x = {3, 0, 0, 0};
    CHECK(is_feasible(sys));
    CHECK(feasibility_oracle(sys));

    sys.x[0] = 4;  // x_0 = 4 > q - r1 - r2 = 3
    CHECK_FALSE(is_feasible(sys));
    CHECK_FALSE(feasibility_oracle(sys));
}

TEST_CASE("capacity-only cases") {
    ReserveSystem sys;
    sys.q = 5;
    sys.x = {5};
    CHECK(is_feasible(sys));
    CHECK(feasibility_oracle(sys));
    sys.x = {6};
    CHECK_FALSE(is_feasible(sys));
    CHECK_FALSE(feasibility_oracle(sys));
}

TEST_CASE("fully reserved course leaves no open seat") {
    ReserveSystem sys;
    sys.q = 3;
    sys.r = {3};
    sys.x = {1, 0};
    CHECK_FALSE(is_feasible(sys));
    CHECK_FALSE(feasibility_oracle(sys));
}

TEST_CASE("zero reserves are always feasible up to capacity") {
    ReserveSystem sys;
    sys.q = 4;
    sys.r = {0, 0};
    sys.x = {1, 1, 1, 1};
    CHECK(is_feasible(sys));
    CHECK(feasibility_oracle(sys));
}

TEST_CASE("oracle equivalence on enumerated two-criterion systems") {
    // the exhaustive I<=3 sweep lives in the acceptance suite; spot-sweep I=2 here
    int checked = 0;
    for (int q = 0; q <= 4; ++q)
        for (int r0 = 0; r0 <= 2; ++r0)
            for (int r1 = 0; r1 <= 2; ++r1)
                for (int x0 = 0; x0 <= 3; ++x0)
                    for (int x1 = 0; x1 <= 3; ++x1)
                        for (int x2 = 0; x2 <= 3; ++x2)
                            for (int x3 = 0; x3 <= 3; ++x3) {
                                ReserveSystem sys;
                                sys.q = q;
                                sys.r = {r0, r1};
                                sys.x = {x0, x1, x2, x3};
                                CHECK(is_feasible(sys) == feasibility_oracle(sys));
                                ++checked;
                            }
    CHECK(checked == 5 * 9 * 256);
}

namespace {

Instance adjust_fixture() {
    // course 0: q=4, year-4 reserve of 3 seats, but only one year-4 student enrolls
    Instance inst;
    inst.k = 1;
    inst.R = 8;
    inst.mode = PriorityMode::Hybrid;
    inst.students = {student("a", 'A', 4, "d"), student("b", 'A', 1, "d"),
                     student("c", 'A', 2, "d"), student("d", 'A', 3, "d")};
    inst.courses = {course("X", 'A', 4), course("Y", 'A', 4)};
    inst.reserves = {reserve(0, {"All"}, {4}, 3)};
    inst.utilities.assign(4, {});
    inst.finalize();
    return inst;
}

}  // namespace

TEST_CASE("adjust_reserves decrements an over-sized reserve until feasible") {
    Instance inst = adjust_fixture();
    Allocation alloc(4);
    for (int s = 0; s < 4; ++s) alloc.set_schedule(s, {0});

    AdjustResult res = adjust_reserves(inst, alloc);
    REQUIRE(res.log.size() == 1);
    CHECK(res.log[0].course == 0);
    CHECK(res.log[0].old_seats == 3);
    CHECK(res.log[0].new_seats == 1);
    CHECK(res.reserves[0].seats == 1);

    std::vector<int> enrolled = {0, 1, 2, 3};
    CHECK(is_feasible(course_system(inst, enrolled, 0, res.reserves)));
}

TEST_CASE("feasible course is untouched") {
    Instance inst = adjust_fixture();
    Allocation alloc(4);
    alloc.set_schedule(0, {0});  // the year-4 student only
    AdjustResult res = adjust_reserves(inst, alloc);
    CHECK(res.log.empty());
    CHECK(res.reserves[0].seats == 3);
}

TEST_CASE("over-enrollment raises effective capacity first") {
    Instance inst = adjust_fixture();
    inst.courses[0].capacity = 2;
    inst.reserves[0].seats = 2;
    inst.finalize();
    Allocation alloc(4);
    for (int s = 0; s < 4; ++s) alloc.set_schedule(s, {0});  // enrollment 4 > q=2

    AdjustResult res = adjust_reserves(inst, alloc);
    CHECK(res.adjusted_capacity[0] == 4);
    // with q_eff=4 and one year-4 student among four, r=2 forces x_0=3 <= 4-2 false -> r=1
    CHECK(res.reserves[0].seats == 1);
}

TEST_CASE("adjustment never increases reserves and always ends feasible") {
    // randomized property over small systems embedded in instances
    Instance inst = adjust_fixture();
    for (unsigned seed = 0; seed < 30; ++seed) {
        Allocation alloc(4);
        for (int s = 0; s < 4; ++s)
            if ((seed >> s) & 1) alloc.set_schedule(s, {0});
        AdjustResult res = adjust_reserves(inst, alloc);
        for (size_t i = 0; i < res.reserves.size(); ++i)
            CHECK(res.reserves[i].seats <= inst.reserves[i].seats);
        std::vector<int> enrolled;
        for (int s = 0; s < 4; ++s)
            if ((seed >> s) & 1) enrolled.push_back(s);
        CHECK(is_feasible(course_system(inst, enrolled, 0, res.reserves)));
    }
}
