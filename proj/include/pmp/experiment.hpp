#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmp/engine.hpp"
#include "pmp/instance.hpp"
#include "pmp/mechanisms.hpp"
#include "pmp/metrics.hpp"
#include "pmp/synthgen.hpp"

namespace pmp {

enum class Mechanism { Pmp, Rsd, RsdOptimal, DaStb, DaMtb, Aceei, AceeiKludgy, Ps };

std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);

struct ExperimentPlan {
    // instance source: file wins over the generator when set
    std::optional<std::string> instance_path;
    GenConfig gen;
    uint64_t structure_seed = 1;  // fixed population; per-seed runs redraw utilities

    std::vector<Mechanism> mechanisms;
    std::vector<uint64_t> seeds;
    EngineConfig engine;
    int optimal_reserve_envs = 20;
    std::string out_dir;  // empty = no files
    int jobs = 1;

    void validate() const;  // throws ValidationError
    uint64_t hash() const;
};

struct MechanismRun {
    Mechanism mech = Mechanism::Rsd;
    Allocation alloc;
    bool certified = true;  // engine-backed mechanisms may fail to certify
    double seconds = 0.0;
    std::optional<EquilibriumResult> eq;

    // summary statistics filled by the runner
    double mean_utility = 0.0;
    double violation_share = 0.0;
    int envy_ge2 = -1;          // deterministic allocations only
    int stability_blocks = -1;  // deterministic allocations only
    std::optional<CompareReport> vs_first;  // against the plan's first mechanism
};

struct SeedResult {
    uint64_t seed = 0;
    uint64_t draw_hash = 0;  // utilities + shared tie-break, for replay checks
    bool failed = false;
    std::string error;
    std::vector<MechanismRun> runs;
};

struct ExperimentResult {
    uint64_t plan_hash = 0;
    std::vector<SeedResult> seeds;

    bool all_ok() const;
};

// one shared draw (utilities + single tie-break), all mechanisms on it
SeedResult run_seed(const ExperimentPlan& plan, uint64_t seed,
                    const Instance* file_instance = nullptr);

ExperimentResult run_experiment(const ExperimentPlan& plan);

struct SweepRow {
    double value = 0.0;
    // shares for the plan's first mechanism against its second
    double prefer_a = 0.0, indifferent = 0.0, prefer_b = 0.0;
};

// axis: "choice_set_size" or "sigma"
std::vector<SweepRow> sweep(ExperimentPlan plan, const std::string& axis,
                            const std::vector<double>& values);

// stable content hashes for determinism checks
uint64_t allocation_hash(const Allocation& alloc);
uint64_t instance_hash(const Instance& inst);

}  // namespace pmp
