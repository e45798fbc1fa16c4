#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <functional>
#include <vector>

#include "opuq/dense.hpp"
#include "opuq/rng.hpp"
#include "opuq/tape.hpp"

using namespace opuq;

namespace {

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    DenseMatrix m(r, c);
    for (double& v : m.flat()) v = scale * rng.normal();
    return m;
}

using Builder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

double eval_scalar(const Builder& build, const std::vector<DenseMatrix>& inputs) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const DenseMatrix& m : inputs) ids.push_back(tape.input(m, false));
    const NodeId out = build(tape, ids);
    return tape.value(out)(0, 0);
}

/// Central-difference check of every input element against the tape adjoint.
void check_gradient(const Builder& build, std::vector<DenseMatrix> inputs, double h = 1e-6,
                    double tol = 1e-6) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const DenseMatrix& m : inputs) ids.push_back(tape.input(m, true));
    const NodeId out = build(tape, ids);
    tape.backward(out);

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        REQUIRE(tape.adjoint_set(ids[k]));
        const DenseMatrix& adj = tape.adjoint(ids[k]);
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double kept = inputs[k].flat()[i];
            inputs[k].flat()[i] = kept + h;
            const double up = eval_scalar(build, inputs);
            inputs[k].flat()[i] = kept - h;
            const double down = eval_scalar(build, inputs);
            inputs[k].flat()[i] = kept;
            const double fd = (up - down) / (2.0 * h);
            const double ad = adj.flat()[i];
            const double denom = std::max({1.0, std::abs(fd), std::abs(ad)});
            INFO("input ", k, " element ", i, " fd=", fd, " ad=", ad);
            CHECK(std::abs(fd - ad) / denom < tol);
        }
    }
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("affine + leaky_relu gradients match finite differences") {
    Rng rng(31);
    const Builder build = [](Tape& t, const std::vector<NodeId>& in) {
        const NodeId y = t.affine(in[0], in[1], in[2]);
        return t.mean_all(t.leaky_relu(y, 0.01));
    };
    check_gradient(build, {random_matrix(rng, 3, 4), random_matrix(rng, 5, 4),
                           random_matrix(rng, 1, 5)});
}

TEST_CASE("row_inner gradients match finite differences") {
    Rng rng(32);
    const Builder build = [](Tape& t, const std::vector<NodeId>& in) {
        return t.mean_all(t.row_inner(in[0], in[1]));
    };
    check_gradient(build, {random_matrix(rng, 4, 6), random_matrix(rng, 4, 6)});
}

TEST_CASE("elementwise chain gradients match finite differences") {
    Rng rng(33);
    const Builder build = [](Tape& t, const std::vector<NodeId>& in) {
        const NodeId prod = t.mul(in[0], in[1]);
        const NodeId bent = t.square(t.shift(in[0], 0.3));
        const NodeId mix = t.sub(prod, bent);
        const NodeId damped = t.exp(t.scale(mix, 0.05));
        return t.mean_all(t.add(damped, in[1]));
    };
    check_gradient(build, {random_matrix(rng, 3, 3, 0.5), random_matrix(rng, 3, 3, 0.5)});
}

TEST_CASE("mul of a node with itself accumulates both slots") {
    Rng rng(34);
    const Builder build = [](Tape& t, const std::vector<NodeId>& in) {
        return t.mean_all(t.mul(in[0], in[0]));
    };
    DenseMatrix a = random_matrix(rng, 2, 5);
    Tape tape;
    const NodeId id = tape.input(a, true);
    const NodeId out = build(tape, {id});
    tape.backward(out);
    const DenseMatrix& adj = tape.adjoint(id);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(adj.flat()[i] == doctest::Approx(2.0 * a.flat()[i] / a.size()).epsilon(1e-12));
    check_gradient(build, {a});
}

TEST_CASE("leaky_relu uses the slope on the negative side") {
    DenseMatrix x = DenseMatrix::from_rows(1, 4, {-2.0, -0.5, 0.5, 2.0});
    Tape t;
    const NodeId id = t.input(x, true);
    const NodeId out = t.mean_all(t.leaky_relu(id, 0.01));
    t.backward(out);
    const DenseMatrix& adj = t.adjoint(id);
    CHECK(adj(0, 0) == doctest::Approx(0.01 / 4.0));
    CHECK(adj(0, 1) == doctest::Approx(0.01 / 4.0));
    CHECK(adj(0, 2) == doctest::Approx(0.25));
    CHECK(adj(0, 3) == doctest::Approx(0.25));
    CHECK(t.value(out)(0, 0) ==
          doctest::Approx((-2.0 * 0.01 - 0.5 * 0.01 + 0.5 + 2.0) / 4.0));
}

TEST_CASE("clip clamps values, passes gradient inside, zeroes it outside") {
    DenseMatrix x = DenseMatrix::from_rows(1, 5, {-20.0, -15.0, 0.0, 5.0, 9.0});
    Tape t;
    const NodeId id = t.input(x, true);
    const NodeId clipped = t.clip_straight_through(id, -15.0, 5.0);
    const NodeId out = t.mean_all(clipped);
    t.backward(out);
    const DenseMatrix& v = t.value(clipped);
    CHECK(v(0, 0) == -15.0);
    CHECK(v(0, 1) == -15.0);
    CHECK(v(0, 2) == 0.0);
    CHECK(v(0, 3) == 5.0);
    CHECK(v(0, 4) == 5.0);
    const DenseMatrix& adj = t.adjoint(id);
    CHECK(adj(0, 0) == 0.0);      // below the range
    CHECK(adj(0, 1) == 0.2);      // on the edge counts as inside
    CHECK(adj(0, 2) == 0.2);
    CHECK(adj(0, 3) == 0.2);
    CHECK(adj(0, 4) == 0.0);      // above the range
}

TEST_CASE("gaussian likelihood composed from primitives matches analytic values") {
    // loss = mean over rows of  1/2 r^2 e^{-2s} + s + 1/2 ln 2pi
    const Builder build = [](Tape& t, const std::vector<NodeId>& in) {
        const NodeId r = t.sub(in[0], in[2]);
        const NodeId s = t.clip_straight_through(in[1], -15.0, 5.0);
        const NodeId quad = t.scale(t.mul(t.square(r), t.exp(t.scale(s, -2.0))), 0.5);
        const NodeId vec = t.shift(t.add(quad, s), 0.5 * std::log(2.0 * 3.14159265358979323846));
        return t.mean_all(vec);
    };

    SUBCASE("mu equals target with unit sigma gives half log 2pi") {
        const DenseMatrix mu = DenseMatrix::from_rows(2, 1, {1.5, -0.25});
        const DenseMatrix ls(2, 1, 0.0);
        const DenseMatrix target = mu;
        CHECK(eval_scalar(build, {mu, ls, target}) ==
              doctest::Approx(0.5 * std::log(2.0 * 3.14159265358979323846)).epsilon(1e-12));
    }

    SUBCASE("residual equal to sigma adds one half") {
        const double s = 0.7;
        const DenseMatrix mu(1, 1, std::exp(s));
        const DenseMatrix ls(1, 1, s);
        const DenseMatrix target(1, 1, 0.0);
        const double expect = 0.5 + s + 0.5 * std::log(2.0 * 3.14159265358979323846);
        CHECK(eval_scalar(build, {mu, ls, target}) == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("gradients match both finite differences and the closed form") {
        Rng rng(35);
        DenseMatrix mu = random_matrix(rng, 4, 1);
        DenseMatrix ls = random_matrix(rng, 4, 1, 0.4);
        DenseMatrix target = random_matrix(rng, 4, 1);
        check_gradient(build, {mu, ls, target});

        Tape t;
        const NodeId mu_id = t.input(mu, true);
        const NodeId ls_id = t.input(ls, true);
        const NodeId tg_id = t.input(target, false);
        const NodeId out = build(t, {mu_id, ls_id, tg_id});
        t.backward(out);
        for (std::size_t i = 0; i < 4; ++i) {
            const double r = mu(i, 0) - target(i, 0);
            const double sig2 = std::exp(2.0 * ls(i, 0));
            CHECK(t.adjoint(mu_id)(i, 0) == doctest::Approx(r / sig2 / 4.0).epsilon(1e-10));
            CHECK(t.adjoint(ls_id)(i, 0) ==
                  doctest::Approx((1.0 - r * r / sig2) / 4.0).epsilon(1e-10));
        }
    }

    SUBCASE("loss is minimized over log sigma at sigma^2 = r^2") {
        const double r = 1.7;
        const DenseMatrix mu(1, 1, r);
        const DenseMatrix target(1, 1, 0.0);
        const double s_star = std::log(r);  // log sigma with sigma = |r|
        double best = 1e300;
        double best_s = 0.0;
        for (double s = -3.0; s <= 3.0; s += 1e-3) {
            const double v = eval_scalar(build, {mu, DenseMatrix(1, 1, s), target});
            if (v < best) {
                best = v;
                best_s = s;
            }
        }
        CHECK(best_s == doctest::Approx(s_star).epsilon(1e-2));
    }
}

TEST_CASE("tape error paths") {
    Tape t;
    CHECK_THROWS_AS(t.backward(0), std::logic_error);
    const NodeId a = t.input(DenseMatrix(2, 2, 1.0), true);
    CHECK_THROWS_AS(t.adjoint(a), std::logic_error);
    CHECK_THROWS_AS(t.backward(a), std::invalid_argument);  // non-scalar seed
    const NodeId w = t.input(DenseMatrix(3, 5), true);
    CHECK_THROWS_AS(t.affine(a, w, t.input(DenseMatrix(1, 3))), std::invalid_argument);
}

TEST_CASE("inputs that do not need gradients stay untouched by backward") {
    Tape t;
    const NodeId a = t.input(DenseMatrix(2, 2, 1.0), true);
    const NodeId b = t.input(DenseMatrix(2, 2, 2.0), false);
    const NodeId out = t.mean_all(t.mul(a, b));
    t.backward(out);
    CHECK(t.adjoint_set(a));
    CHECK_FALSE(t.adjoint_set(b));
}

TEST_CASE("reset keeps buffers but clears the graph") {
    Rng rng(36);
    const DenseMatrix x = random_matrix(rng, 3, 3);
    Tape t;
    NodeId id = t.input(x, true);
    NodeId out = t.mean_all(t.square(id));
    const double first = t.value(out)(0, 0);
    t.backward(out);
    const double g00 = t.adjoint(id)(0, 0);

    t.reset();
    CHECK(t.node_count() == 0);
    id = t.input(x, true);
    out = t.mean_all(t.square(id));
    CHECK(t.value(out)(0, 0) == first);
    t.backward(out);
    CHECK(t.adjoint(id)(0, 0) == g00);
}

}  // TEST_SUITE
