#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "opuq/acquire.hpp"
#include "opuq/bo.hpp"
#include "opuq/csvio.hpp"

using namespace opuq;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BoConfig tiny_config(BoMode mode) {
    BoConfig cfg;
    cfg.mode = mode;
    cfg.trials = 1;
    cfg.iterations = 1;
    cfg.schedule_factor = 1e-5;  // every stage collapses to a single step
    cfg.seed = 99;
    cfg.candidate_count = 64;
    cfg.time_points = 9;
    cfg.batch = 64;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("bo");

TEST_CASE("mode names parse and print") {
    CHECK(parse_bo_mode("param") == BoMode::ParamToFunction);
    CHECK(parse_bo_mode("function") == BoMode::FunctionToFunction);
    CHECK(bo_mode_name(BoMode::ParamToFunction) == "param");
    CHECK(bo_mode_name(BoMode::FunctionToFunction) == "function");
    CHECK_THROWS_WITH_AS((void)parse_bo_mode("bananas"), doctest::Contains("unknown mode"),
                         std::invalid_argument);
    CHECK(bo_strategy_name(BoStrategy::Ucb) == "ucb");
    CHECK(bo_strategy_name(BoStrategy::Greedy) == "greedy");
    CHECK(bo_strategy_name(BoStrategy::Random) == "random");
}

TEST_CASE("full-length query budgets follow the decay schedule") {
    for (BoMode mode : {BoMode::ParamToFunction, BoMode::FunctionToFunction}) {
        const BoModeDefaults md = bo_mode_defaults(mode);
        AcquisitionSchedule sched;
        sched.random0 = md.random0;
        std::size_t total = md.init_count;
        for (std::size_t it = 0; it < 20; ++it)
            total += md.picks_per_iter + sched.random_count(it);
        if (mode == BoMode::ParamToFunction)
            CHECK(total == 294);
        else
            CHECK(total == 147);
    }
}

TEST_CASE("defaults differ per mode") {
    const auto p = bo_mode_defaults(BoMode::ParamToFunction);
    CHECK(p.init_count == 50);
    CHECK(p.picks_per_iter == 10);
    CHECK(p.random0 == 5.0);
    REQUIRE(p.stages.size() == 3);
    CHECK(p.stages[0].first == 15000);
    CHECK(p.stages[0].second == 1e-4);
    CHECK(p.stages[2].second == 1e-5);
    const auto f = bo_mode_defaults(BoMode::FunctionToFunction);
    CHECK(f.init_count == 10);
    CHECK(f.picks_per_iter == 5);
    CHECK(f.random0 == 4.0);
    REQUIRE(f.stages.size() == 3);
    CHECK(f.stages[0].first == 5000);
}

TEST_CASE("tiny param run records every strategy and counts queries") {
    const BoConfig cfg = tiny_config(BoMode::ParamToFunction);
    const BoReport rep = run_bo(cfg);

    REQUIRE(rep.rows.size() == 3);  // 1 trial x 3 strategies x 1 iteration
    const BoStrategy order[] = {BoStrategy::Ucb, BoStrategy::Greedy, BoStrategy::Random};
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rep.rows[i].trial == 0);
        CHECK(rep.rows[i].iteration == 0);
        CHECK(rep.rows[i].strategy == order[i]);
        CHECK(std::isfinite(rep.rows[i].value_error));
        CHECK(rep.rows[i].value_error >= 0.0);
        CHECK(std::isfinite(rep.rows[i].location_error));
        CHECK(rep.rows[i].location_error >= 0.0);
    }

    REQUIRE(rep.summaries.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rep.summaries[i].trial == 0);
        CHECK(rep.summaries[i].strategy == order[i]);
        // 50 initial + 10 picks + 5 uniform supplements
        CHECK(rep.summaries[i].queries == 65);
    }
}

TEST_CASE("tiny function run counts queries and orders rows") {
    BoConfig cfg = tiny_config(BoMode::FunctionToFunction);
    cfg.trials = 2;
    cfg.iterations = 2;
    const BoReport rep = run_bo(cfg);

    REQUIRE(rep.rows.size() == 12);  // 2 trials x 3 strategies x 2 iterations
    std::size_t idx = 0;
    const BoStrategy order[] = {BoStrategy::Ucb, BoStrategy::Greedy, BoStrategy::Random};
    for (std::size_t trial = 0; trial < 2; ++trial)
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t it = 0; it < 2; ++it) {
                CHECK(rep.rows[idx].trial == trial);
                CHECK(rep.rows[idx].strategy == order[s]);
                CHECK(rep.rows[idx].iteration == it);
                ++idx;
            }

    REQUIRE(rep.summaries.size() == 6);
    // 10 initial + 2 x 5 picks + supplements round(4), round(3.6) = 4 + 4
    for (const auto& s : rep.summaries) CHECK(s.queries == 28);
}

TEST_CASE("reruns with one seed are identical, other seeds differ") {
    const BoConfig cfg = tiny_config(BoMode::ParamToFunction);
    const BoReport a = run_bo(cfg);
    const BoReport b = run_bo(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].value_error == b.rows[i].value_error);
        CHECK(a.rows[i].location_error == b.rows[i].location_error);
    }

    TempFile fa("bo_rep_a.csv"), fb("bo_rep_b.csv");
    write_bo_report(a, fa.path);
    write_bo_report(b, fb.path);
    CHECK(slurp(fa.path) == slurp(fb.path));

    BoConfig other = cfg;
    other.seed = 100;
    const BoReport c = run_bo(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        any_diff = any_diff || a.rows[i].value_error != c.rows[i].value_error;
    CHECK(any_diff);
}

TEST_CASE("grid candidates run deterministically too") {
    BoConfig cfg = tiny_config(BoMode::ParamToFunction);
    cfg.grid_candidates = true;
    const BoReport a = run_bo(cfg);
    const BoReport b = run_bo(cfg);
    REQUIRE(a.rows.size() == 3);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(std::isfinite(a.rows[i].value_error));
        CHECK(a.rows[i].value_error == b.rows[i].value_error);
        CHECK(a.rows[i].location_error == b.rows[i].location_error);
    }
}

TEST_CASE("report and quantile files have the expected shape") {
    BoConfig cfg = tiny_config(BoMode::ParamToFunction);
    cfg.iterations = 2;
    const BoReport rep = run_bo(cfg);

    TempFile frep("bo_shape_report.csv"), fq("bo_shape_quant.csv");
    write_bo_report(rep, frep.path);
    const CsvTable tab = read_csv(frep.path);
    REQUIRE(tab.header.size() == 5);
    CHECK(tab.header[0] == "trial");
    CHECK(tab.header[2] == "strategy");
    REQUIRE(tab.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(tab.num(i, "trial") == static_cast<double>(rep.rows[i].trial));
        CHECK(tab.num(i, "value_error") == rep.rows[i].value_error);
        CHECK(tab.rows[i][2] == bo_strategy_name(rep.rows[i].strategy));
    }

    write_bo_quantiles(rep, fq.path);
    const CsvTable qt = read_csv(fq.path);
    REQUIRE(qt.header.size() == 19);  // iteration + 3 strategies x 2 metrics x 3 quantiles
    CHECK(qt.header[1] == "ucb_value_q20");
    CHECK(qt.header[18] == "random_location_q80");
    REQUIRE(qt.rows.size() == 2);
    // single trial: every quantile of a one-point sample equals that point
    CHECK(qt.num(0, "ucb_value_q20") == rep.rows[0].value_error);
    CHECK(qt.num(0, "ucb_value_q80") == rep.rows[0].value_error);
}

TEST_CASE("quantile interpolates linearly") {
    const std::vector<double> v{30.0, 10.0, 50.0, 20.0, 40.0};
    CHECK(quantile(v, 0.0) == 10.0);
    CHECK(quantile(v, 1.0) == 50.0);
    CHECK(quantile(v, 0.5) == 30.0);
    CHECK(quantile(v, 0.25) == 20.0);
    CHECK(quantile(v, 0.1) == doctest::Approx(14.0).epsilon(1e-15));
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({7.5}, 0.3) == 7.5);
    CHECK_THROWS_WITH_AS((void)quantile({}, 0.5), doctest::Contains("empty"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)quantile({1.0}, 1.5), doctest::Contains("outside"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)quantile({1.0}, -0.1), doctest::Contains("outside"),
                         std::invalid_argument);
}

TEST_CASE("bad configurations are rejected") {
    BoConfig cfg = tiny_config(BoMode::ParamToFunction);
    cfg.iterations = 0;
    CHECK_THROWS_WITH_AS((void)run_bo(cfg), doctest::Contains("iterations"),
                         std::invalid_argument);
    cfg = tiny_config(BoMode::ParamToFunction);
    cfg.time_points = 1;
    CHECK_THROWS_WITH_AS((void)run_bo(cfg), doctest::Contains("time points"),
                         std::invalid_argument);
    cfg = tiny_config(BoMode::ParamToFunction);
    cfg.batch = 0;
    CHECK_THROWS_WITH_AS((void)run_bo(cfg), doctest::Contains("batch"), std::invalid_argument);
    cfg = tiny_config(BoMode::ParamToFunction);
    cfg.schedule_factor = 0.0;
    CHECK_THROWS_WITH_AS((void)run_bo(cfg), doctest::Contains("schedule factor"),
                         std::invalid_argument);
    cfg = tiny_config(BoMode::ParamToFunction);
    cfg.candidate_count = 3;  // below the 10 picks a param iteration makes
    CHECK_THROWS_WITH_AS((void)run_bo(cfg), doctest::Contains("candidate set"),
                         std::invalid_argument);
}

TEST_SUITE_END();
