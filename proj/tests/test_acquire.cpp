#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "opuq/acquire.hpp"
#include "opuq/dense.hpp"
#include "opuq/rng.hpp"

using namespace opuq;

namespace {

// Reference picker, written as the flat rule: among candidates strictly
// farther than the current gap from every earlier pick, take the best
// acquisition value with ties to the lower index; halve the gap (persistently)
// whenever nothing qualifies, dropping it to zero below 1e-12.
std::vector<std::size_t> reference_batch(const DenseMatrix& cand, const std::vector<double>& score,
                                         const std::vector<double>& sigma, double explore,
                                         double spacing, std::size_t k) {
    const std::size_t n = cand.rows();
    std::vector<double> acq(n);
    for (std::size_t i = 0; i < n; ++i) acq[i] = score[i] + explore * sigma[i];
    std::vector<std::size_t> picks;
    std::vector<char> used(n, 0);
    double gap = spacing;
    while (picks.size() < k) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            bool ok = true;
            if (gap > 0.0) {
                for (std::size_t p : picks) {
                    double d2 = 0.0;
                    for (std::size_t d = 0; d < cand.cols(); ++d) {
                        const double t = cand(i, d) - cand(p, d);
                        d2 += t * t;
                    }
                    if (!(std::sqrt(d2) > gap)) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) continue;
            if (best == n || acq[i] > acq[best]) best = i;
        }
        if (best == n) {
            gap = gap < 1e-12 ? 0.0 : gap * 0.5;
            continue;
        }
        picks.push_back(best);
        used[best] = 1;
    }
    return picks;
}

DenseMatrix points(const std::vector<double>& flat, std::size_t dim) {
    DenseMatrix m(flat.size() / dim, dim);
    for (std::size_t i = 0; i < flat.size(); ++i) m(i / dim, i % dim) = flat[i];
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("acquire");

TEST_CASE("round half to even") {
    CHECK(round_half_even(4.5) == 4);
    CHECK(round_half_even(3.5) == 4);
    CHECK(round_half_even(2.5) == 2);
    CHECK(round_half_even(0.5) == 0);
    CHECK(round_half_even(1.5) == 2);
    CHECK(round_half_even(-2.5) == -2);
    CHECK(round_half_even(-4.5) == -4);
    CHECK(round_half_even(-3.5) == -4);
    CHECK(round_half_even(2.3) == 2);
    CHECK(round_half_even(2.7) == 3);
    CHECK(round_half_even(-2.3) == -2);
    CHECK(round_half_even(-2.7) == -3);
    CHECK(round_half_even(7.0) == 7);
    CHECK(round_half_even(-7.0) == -7);
    CHECK(round_half_even(0.0) == 0);
}

TEST_CASE("schedule decays geometrically") {
    AcquisitionSchedule s;
    CHECK(s.explore(0) == 2.0);
    CHECK(s.explore(1) == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(s.spacing(0) == 1.0);
    CHECK(s.spacing(3) == doctest::Approx(0.729).epsilon(1e-15));
}

TEST_CASE("supplement counts follow the rounded decay") {
    AcquisitionSchedule s5;
    s5.random0 = 5.0;
    const std::vector<std::size_t> expect5{5, 4, 4, 4, 3, 3, 3, 2, 2, 2,
                                           2, 2, 1, 1, 1, 1, 1, 1, 1, 1};
    std::size_t total5 = 0;
    for (std::size_t i = 0; i < expect5.size(); ++i) {
        CHECK(s5.random_count(i) == expect5[i]);
        total5 += s5.random_count(i);
    }
    CHECK(total5 == 44);

    AcquisitionSchedule s4;
    s4.random0 = 4.0;
    std::size_t total4 = 0;
    for (std::size_t i = 0; i < 20; ++i) total4 += s4.random_count(i);
    CHECK(total4 == 37);
}

TEST_CASE("zero explore and zero spacing return the exact top-k") {
    const auto cand = points({0, 0, 1, 0, 2, 0, 3, 0, 4, 0, 5, 0}, 2);
    const std::vector<double> score{0.3, 0.9, 0.1, 0.9, 0.7, 0.2};
    const std::vector<double> sigma{9.0, 0.0, 9.0, 9.0, 0.0, 9.0};
    const auto picks = acquire_batch(cand, score, sigma, 0.0, 0.0, 4);
    // ties at 0.9 go to the lower index
    const std::vector<std::size_t> expect{1, 3, 4, 0};
    CHECK(picks == expect);
}

TEST_CASE("duplicate candidates never block a zero-spacing batch") {
    const auto cand = points({1, 1, 1, 1, 1, 1}, 2);
    const std::vector<double> score{0.5, 0.5, 0.5};
    const std::vector<double> sigma{0.0, 0.0, 0.0};
    const auto picks = acquire_batch(cand, score, sigma, 0.0, 0.0, 3);
    const std::vector<std::size_t> expect{0, 1, 2};
    CHECK(picks == expect);
}

TEST_CASE("spacing excludes candidates at exactly the gap distance") {
    const auto cand = points({0, 0, 1, 0, 3, 0}, 2);
    const std::vector<double> score{1.0, 0.9, 0.5};
    const std::vector<double> sigma{0.0, 0.0, 0.0};
    auto picks = acquire_batch(cand, score, sigma, 0.0, 1.0, 2);
    CHECK(picks == std::vector<std::size_t>{0, 2});
    picks = acquire_batch(cand, score, sigma, 0.0, 0.999, 2);
    CHECK(picks == std::vector<std::size_t>{0, 1});
}

TEST_CASE("infeasible spacing is halved until a pick exists") {
    const auto cand = points({0, 0, 1, 0, 0, 1}, 2);
    const std::vector<double> score{1.0, 0.8, 0.6};
    const std::vector<double> sigma{0.0, 0.0, 0.0};
    // gap 8 blocks everything after the first pick; halving to 1 admits
    // nothing (distance 1 is not strictly greater), 0.5 admits both
    const auto picks = acquire_batch(cand, score, sigma, 0.0, 8.0, 3);
    CHECK(picks == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("exploration weight only matters through sigma differences") {
    Rng rng(31);
    DenseMatrix cand(12, 2);
    for (double& v : cand.flat()) v = rng.uniform(-1.0, 1.0);
    std::vector<double> score(12);
    for (double& v : score) v = rng.uniform(0.0, 1.0);
    const std::vector<double> flat_sigma(12, 0.4);
    const auto a = acquire_batch(cand, score, flat_sigma, 0.0, 0.0, 5);
    const auto b = acquire_batch(cand, score, flat_sigma, 3.7, 0.0, 5);
    CHECK(a == b);

    // and a constant score shift never changes the ranking
    std::vector<double> shifted = score;
    for (double& v : shifted) v += 123.0;
    std::vector<double> sigma(12);
    for (double& v : sigma) v = rng.uniform(0.0, 1.0);
    const auto c = acquire_batch(cand, score, sigma, 1.3, 0.0, 5);
    const auto d = acquire_batch(cand, shifted, sigma, 1.3, 0.0, 5);
    CHECK(c == d);
}

TEST_CASE("matches the reference picker on random instances") {
    Rng rng(32);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.uniform_index(9);
        const std::size_t dim = 1 + rng.uniform_index(3);
        DenseMatrix cand(n, dim);
        for (double& v : cand.flat()) v = rng.uniform(-1.0, 1.0);
        if (n >= 4 && rep % 3 == 0) {
            // force exact duplicates into the pool
            for (std::size_t d = 0; d < dim; ++d) cand(1, d) = cand(0, d);
        }
        std::vector<double> score(n), sigma(n);
        for (double& v : score) v = rng.uniform(-2.0, 2.0);
        for (double& v : sigma) v = rng.uniform(0.0, 1.0);
        const double explore = rep % 4 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
        double spacing = 0.0;
        if (rep % 5 == 1) spacing = 50.0;  // forces repeated halving
        if (rep % 5 == 2) spacing = rng.uniform(0.0, 1.5);
        const std::size_t k = 1 + rng.uniform_index(n);
        const auto got = acquire_batch(cand, score, sigma, explore, spacing, k);
        const auto want = reference_batch(cand, score, sigma, explore, spacing, k);
        REQUIRE(got == want);
    }
}

TEST_CASE("invalid inputs are rejected") {
    const auto cand = points({0, 0, 1, 1}, 2);
    const std::vector<double> score{1.0, 2.0};
    const std::vector<double> sigma{0.1, 0.2};
    CHECK_THROWS_WITH_AS((void)acquire_batch(DenseMatrix(0, 2), {}, {}, 0, 0, 0),
                         doctest::Contains("empty candidate"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)acquire_batch(cand, std::vector<double>{1.0}, sigma, 0, 0, 1),
                         doctest::Contains("length"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)acquire_batch(cand, score, sigma, 0, 0, 3),
                         doctest::Contains("batch larger"), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS((void)acquire_batch(cand, std::vector<double>{1.0, nan}, sigma, 0, 0, 1),
                         doctest::Contains("non-finite score"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        (void)acquire_batch(cand, score, std::vector<double>{0.1, -0.2}, 0, 0, 1),
        doctest::Contains("negative sigma"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        (void)acquire_batch(cand, score, std::vector<double>{0.1, nan}, 0, 0, 1),
        doctest::Contains("negative sigma"), std::invalid_argument);
}

TEST_SUITE_END();
