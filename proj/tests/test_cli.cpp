#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "common.hpp"
#include "pmp/experiment.hpp"

using namespace pmp;
using namespace pmp::testing;
namespace fs = std::filesystem;

namespace {

ExperimentPlan tiny_plan() {
    ExperimentPlan plan;
    plan.gen.census = CensusSpec::scaled(0.02);
    plan.gen.params.choice_set_size = 20;
    plan.structure_seed = 11;
    plan.mechanisms = {Mechanism::Pmp, Mechanism::Rsd};
    plan.seeds = {1, 2};
    return plan;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(PMPMARKET_BIN) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("mechanism names round-trip") {
    for (Mechanism m : {Mechanism::Pmp, Mechanism::Rsd, Mechanism::RsdOptimal, Mechanism::DaStb,
                        Mechanism::DaMtb, Mechanism::Aceei, Mechanism::AceeiKludgy, Mechanism::Ps})
        CHECK(mechanism_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(mechanism_from_string("bogus"), ValidationError);
}

TEST_CASE("plan validation rejects duplicates and empties") {
    ExperimentPlan plan = tiny_plan();
    CHECK_NOTHROW(plan.validate());
    plan.seeds = {3, 3};
    CHECK_THROWS_AS(plan.validate(), ValidationError);
    plan.seeds = {1};
    plan.mechanisms.clear();
    CHECK_THROWS_AS(plan.validate(), ValidationError);
}

TEST_CASE("mechanisms within a seed share one draw and replay identically") {
    ExperimentPlan plan = tiny_plan();
    plan.mechanisms = {Mechanism::Pmp, Mechanism::Rsd, Mechanism::DaStb, Mechanism::DaMtb,
                       Mechanism::Ps};
    SeedResult a = run_seed(plan, 5);
    SeedResult b = run_seed(plan, 5);
    REQUIRE_FALSE(a.failed);
    CHECK(a.draw_hash == b.draw_hash);
    REQUIRE(a.runs.size() == b.runs.size());
    for (size_t i = 0; i < a.runs.size(); ++i)
        CHECK(allocation_hash(a.runs[i].alloc) == allocation_hash(b.runs[i].alloc));
    // a different seed redraws
    SeedResult c = run_seed(plan, 6);
    CHECK(a.draw_hash != c.draw_hash);
}

TEST_CASE("per-seed failures are recorded without aborting the run") {
    ExperimentPlan plan = tiny_plan();
    plan.instance_path = "/nonexistent/instance.json";
    SeedResult sr = run_seed(plan, 1);
    CHECK(sr.failed);
    CHECK_FALSE(sr.error.empty());
    CHECK(sr.runs.empty());
}

TEST_CASE("run_experiment persists allocations, metrics, and aggregates") {
    fs::path dir = fresh_dir("pmp_cli_exp");
    ExperimentPlan plan = tiny_plan();
    plan.seeds = {1};
    plan.out_dir = dir.string();
    ExperimentResult res = run_experiment(plan);
    CHECK(res.all_ok());

    int allocs = 0, metrics = 0, aggregates = 0, compares = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("s1_", 0) == 0) ++allocs;
        if (name.rfind("metrics_", 0) == 0) ++metrics;
        if (name.rfind("aggregate_", 0) == 0) ++aggregates;
        if (name.rfind("compare_", 0) == 0) ++compares;
    }
    CHECK(allocs == 2);  // one per mechanism
    CHECK(metrics == 1);
    CHECK(aggregates == 1);
    CHECK(compares == 1);

    SUBCASE("a rerun is byte-identical") {
        std::map<std::string, std::string> before;
        for (const auto& e : fs::directory_iterator(dir))
            before[e.path().filename().string()] = slurp(e.path());
        ExperimentResult res2 = run_experiment(plan);
        CHECK(res2.plan_hash == res.plan_hash);
        for (const auto& e : fs::directory_iterator(dir)) {
            auto it = before.find(e.path().filename().string());
            REQUIRE(it != before.end());
            CHECK(slurp(e.path()) == it->second);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("plan hash reacts to inputs and lands in filenames") {
    ExperimentPlan plan = tiny_plan();
    uint64_t h = plan.hash();
    plan.seeds.push_back(99);
    CHECK(plan.hash() != h);
    plan = tiny_plan();
    plan.gen.params.sigma = 1.5;
    CHECK(plan.hash() != h);
}

TEST_CASE("single-value sweep matches a plain experiment") {
    ExperimentPlan plan = tiny_plan();
    auto rows = sweep(plan, "sigma", {1.0});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].value == 1.0);

    // reproduce by hand: sigma is already 1.0 in the plan
    ExperimentResult res = run_experiment(plan);
    double pa = 0.0;
    int count = 0;
    for (const auto& sr : res.seeds)
        for (const auto& run : sr.runs)
            if (run.mech == Mechanism::Rsd && run.vs_first) {
                pa += run.vs_first->overall_prefer_a;
                ++count;
            }
    CHECK(rows[0].prefer_a == doctest::Approx(pa / count));
    CHECK(rows[0].prefer_a + rows[0].indifferent + rows[0].prefer_b == doctest::Approx(1.0));
}

TEST_CASE("sweep rejects unknown axes and lone mechanisms") {
    ExperimentPlan plan = tiny_plan();
    CHECK_THROWS_AS(sweep(plan, "nonsense", {1.0}), ValidationError);
    plan.mechanisms = {Mechanism::Pmp};
    CHECK_THROWS_AS(sweep(plan, "sigma", {1.0}), ValidationError);
}

TEST_CASE("cli binary: gen then run round-trips with exit code 0") {
    fs::path dir = fresh_dir("pmp_cli_bin");
    std::string inst = (dir / "inst.json").string();
    CHECK(run_cli("--seed 4 gen --scale 0.02 --choice-set-size 20 --out " + inst) == 0);
    CHECK(fs::exists(inst));
    CHECK(run_cli("--seed 4 --out-dir " + (dir / "out").string() +
                  " run pmp da-stb --seeds 1 --instance " + inst) == 0);
    CHECK(fs::exists(dir / "out"));
    SUBCASE("unknown mechanism exits nonzero") {
        CHECK(run_cli("run warlock --seeds 1") != 0);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli binary: demand eval and metrics reports run on a generated pair") {
    fs::path dir = fresh_dir("pmp_cli_met");
    std::string inst = (dir / "inst.json").string();
    REQUIRE(run_cli("--seed 9 gen --scale 0.02 --choice-set-size 20 --out " + inst) == 0);
    REQUIRE(run_cli("--seed 9 --out-dir " + (dir / "out").string() +
                    " run rsd --seeds 1 --instance " + inst) == 0);
    std::string alloc;
    for (const auto& e : fs::directory_iterator(dir / "out"))
        if (e.path().filename().string().rfind("s1_rsd", 0) == 0) alloc = e.path().string();
    REQUIRE_FALSE(alloc.empty());
    CHECK(run_cli("metrics --instance " + inst + " --alloc " + alloc +
                  " --report violations") == 0);
    CHECK(run_cli("demand eval --instance " + inst) == 0);
    CHECK(run_cli("reserves adjust --instance " + inst + " --alloc " + alloc) == 0);
    fs::remove_all(dir);
}
