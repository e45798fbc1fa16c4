#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opuq/field.hpp"
#include "opuq/rng.hpp"

using namespace opuq;

namespace {

std::vector<std::vector<double>> grid_points(int side) {
    std::vector<std::vector<double>> pts;
    const double h = 1.0 / (side - 1);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) pts.push_back({c * h, r * h});
    return pts;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("kernel identities and a hand value") {
    const SqExpKernel k{0.5};
    const std::vector<double> x = {0.0, 0.0};
    const std::vector<double> y = {0.3, 0.4};
    CHECK(kernel_eval(k, x, x) == 1.0);
    CHECK(kernel_eval(k, x, y) == kernel_eval(k, y, x));
    CHECK(kernel_eval(k, x, y) == doctest::Approx(std::exp(-0.25 / 0.5)).epsilon(1e-15));
    const std::vector<double> bad = {1.0};
    CHECK_THROWS(kernel_eval(k, x, bad));
}

TEST_CASE("cholesky of a 2x2 matrix matches the closed form") {
    DenseMatrix a = DenseMatrix::from_rows(2, 2, {4, 2, 2, 3});
    REQUIRE(cholesky_lower(a));
    CHECK(a(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a(0, 1) == 0.0);

    // L L^T reconstructs the input
    DenseMatrix rec(2, 2);
    gemm(Trans::No, Trans::Yes, 1.0, a, a, 0.0, rec);
    CHECK(rec(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(rec(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(rec(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("cholesky rejects an indefinite matrix") {
    DenseMatrix a = DenseMatrix::from_rows(2, 2, {1, 2, 2, 1});
    CHECK_FALSE(cholesky_lower(a));
}

TEST_CASE("sample moments match the kernel within Monte Carlo error") {
    const std::vector<std::vector<double>> pts = {{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.3}};
    const FieldSampler sampler(pts, SqExpKernel{0.3}, 99);
    const Rng root(1234);
    const int n = 20000;
    std::vector<double> mean(3, 0.0);
    std::vector<double> cov(9, 0.0);
    for (int i = 0; i < n; ++i) {
        Rng sub = root.split(static_cast<std::uint64_t>(i));
        const std::vector<double> z = sampler.sample_with(sub);
        REQUIRE(z.size() == 3);
        for (int a = 0; a < 3; ++a) {
            mean[a] += z[a];
            for (int b = 0; b < 3; ++b) cov[a * 3 + b] += z[a] * z[b];
        }
    }
    for (int a = 0; a < 3; ++a) {
        mean[a] /= n;
        CHECK(std::abs(mean[a]) < 4.5 / std::sqrt(static_cast<double>(n)));
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double k = kernel_eval(sampler.kernel(), pts[a], pts[b]);
            const double expect = k + (a == b ? sampler.jitter() : 0.0);
            const double got = cov[a * 3 + b] / n;
            // var of z_a z_b is 1 + k^2 for unit-variance jointly normal pairs
            const double band = 4.5 * std::sqrt((1.0 + k * k) / n);
            CHECK(std::abs(got - expect) < band);
        }
    }
}

TEST_CASE("samples flatten as the length scale grows") {
    SUBCASE("derived spread bound at length scale 100") {
        const auto pts = grid_points(5);
        const FieldSampler sampler(pts, SqExpKernel{100.0}, 7);
        double k_min = 1.0;
        for (const auto& p : pts)
            for (const auto& q : pts) k_min = std::min(k_min, kernel_eval(sampler.kernel(), p, q));
        const double bound = 5.0 * std::sqrt(2.0 * (1.0 - k_min) + 2.0 * sampler.jitter());
        const Rng root(555);
        for (int rep = 0; rep < 20; ++rep) {
            Rng sub = root.split(static_cast<std::uint64_t>(rep));
            const std::vector<double> z = sampler.sample_with(sub);
            for (double v : z)
                for (double w : z) CHECK(std::abs(v - w) <= bound);
        }
    }

    SUBCASE("values agree to 1e-3 once the scale dwarfs the domain") {
        const std::vector<std::vector<double>> pts = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
        const FieldSampler sampler(pts, SqExpKernel{1e6}, 7);
        const Rng root(556);
        for (int rep = 0; rep < 20; ++rep) {
            Rng sub = root.split(static_cast<std::uint64_t>(rep));
            const std::vector<double> z = sampler.sample_with(sub);
            for (double v : z)
                for (double w : z) CHECK(std::abs(v - w) <= 1e-3);
        }
    }
}

TEST_CASE("duplicate points force jitter but stay usable") {
    const std::vector<std::vector<double>> pts = {{0.5, 0.5}, {0.5, 0.5}};
    const FieldSampler sampler(pts, SqExpKernel{0.3}, 3);
    CHECK(sampler.jitter() >= 1e-12);
    CHECK(sampler.jitter() <= 1e-6);
    Rng rng(17);
    const std::vector<double> z = sampler.sample_with(rng);
    CHECK(std::abs(z[0] - z[1]) < 1e-5);
}

TEST_CASE("an unfactorable covariance reports the condition estimate") {
    const std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 1.0}};
    CHECK_THROWS_WITH_AS(FieldSampler(pts, SqExpKernel{std::nan("")}, 3),
                         doctest::Contains("condition"), std::runtime_error);
}

TEST_CASE("sampling is deterministic per seed and per substream") {
    const auto pts = grid_points(3);
    FieldSampler a(pts, SqExpKernel{0.4}, 42);
    FieldSampler b(pts, SqExpKernel{0.4}, 42);
    CHECK(a.sample() == b.sample());
    CHECK(a.sample() == b.sample());

    const Rng root(9);
    Rng s1 = root.split(5);
    Rng s2 = root.split(5);
    CHECK(a.sample_with(s1) == a.sample_with(s2));
}

}  // TEST_SUITE
