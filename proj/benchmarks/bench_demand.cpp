// Serial vs OpenMP batch demand on a full-scale synthetic market.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "pmp/demand.hpp"
#include "pmp/engine.hpp"
#include "pmp/rng.hpp"
#include "pmp/synthgen.hpp"

using namespace pmp;

namespace {

double now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

int main(int argc, char** argv) {
    double scale = argc > 1 ? std::atof(argv[1]) : 0.1;
    int reps = argc > 2 ? std::atoi(argv[2]) : 20;

    GenConfig gen;
    gen.census = CensusSpec::scaled(scale);
    Instance inst = generate_instance(gen, 1);
    std::printf("instance: %d students, %d courses, k=%d\n", inst.n(), inst.m(), inst.k);

    EngineConfig cfg;
    auto rank = seniority_rank(inst, 1);
    auto budgets = assign_budgets(rank, cfg.beta);

    // random price vectors spanning free to unaffordable
    SplitMix64 g(7);
    std::vector<PriceParameter> prices(reps);
    for (auto& p : prices) {
        p.bbar = cfg.bbar;
        p.t.resize(inst.m());
        for (auto& t : p.t) t = (Units)g.below(2 * (uint64_t)inst.R * p.bbar);
    }

    double serial = 0.0, parallel = 0.0;
    long long mismatches = 0;
    for (const auto& p : prices) {
        double t0 = now();
        BatchDemand a = batch_demand(inst, cfg.rule, p, budgets, false);
        double t1 = now();
        BatchDemand b = batch_demand(inst, cfg.rule, p, budgets, true);
        double t2 = now();
        serial += t1 - t0;
        parallel += t2 - t1;
        if (a.alloc.rows != b.alloc.rows || a.z != b.z) ++mismatches;
    }

    std::printf("%d price vectors\n", reps);
    std::printf("serial:   %8.2f ms/vector\n", 1e3 * serial / reps);
    std::printf("parallel: %8.2f ms/vector\n", 1e3 * parallel / reps);
    std::printf("speedup:  %8.2fx\n", serial / parallel);
    std::printf("mismatches: %lld\n", mismatches);
    return mismatches == 0 ? 0 : 1;
}
