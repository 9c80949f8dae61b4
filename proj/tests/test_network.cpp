#include "tiam/errors.hpp"
#include "tiam/network.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace tiam;
using doctest::Approx;

namespace {

const Activation kAll[] = {Activation::relu(), Activation::leaky_relu(0.01), Activation::elu(0.1),
                           Activation::celu(0.1)};

}  // namespace

TEST_CASE("activation examples") {
    CHECK(Activation::relu().apply(-1.0) == 0.0);
    CHECK(Activation::leaky_relu(0.01).apply(-1.0) == Approx(-0.01));
    CHECK(Activation::elu(0.1).apply(-1.0) == Approx(0.1 * (std::exp(-1.0) - 1.0)));
    CHECK(Activation::elu(0.1).apply(-1.0) == Approx(-0.06321).epsilon(1e-4));
    CHECK(Activation::celu(0.1).apply(-0.1) == Approx(0.1 * (std::exp(-1.0) - 1.0)));
    for (const auto& act : kAll) CHECK(act.apply(2.5) == 2.5);

    const auto z = DenseMatrix::from_rows({{-1, 0, 3}});
    CHECK(activation_apply(Activation::relu(), z) == DenseMatrix::from_rows({{0, 0, 3}}));
}

TEST_CASE("activation validation and names") {
    CHECK_THROWS_AS(Activation::leaky_relu(0.0).validate(), ConfigError);
    CHECK_THROWS_AS(Activation::elu(-1.0).validate(), ConfigError);
    CHECK_NOTHROW(Activation::relu().validate());
    for (const auto& act : kAll) CHECK(parse_activation_kind(to_string(act.kind)) == act.kind);
    CHECK_THROWS_AS(parse_activation_kind("sigmoid"), ConfigError);
    NetworkSpec spec{{3, 2}, Activation::relu()};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.layer_dims = {3, 0, 2};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("property: activations are monotone and continuous") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-5, 5);
    for (const auto& act : kAll) {
        for (int i = 0; i < 1000; ++i) {
            const double x = u(rng), y = u(rng);
            const double lo = std::min(x, y), hi = std::max(x, y);
            CHECK(act.apply(lo) <= act.apply(hi));
            CHECK(std::abs(act.apply(x + 1e-9) - act.apply(x)) <= 2e-9);
        }
        CHECK(std::abs(act.apply(1e-12) - act.apply(-1e-12)) < 1e-11);
    }
}

TEST_CASE("inverse bounds examples") {
    const auto relu = activation_inverse_bounds(Activation::relu(), DenseMatrix(1, 1, 0.5), 0.1);
    REQUIRE(relu.lower.has(0));
    CHECK(relu.lower.value(0) == Approx(0.4));
    CHECK(relu.upper.value(0) == Approx(0.6));

    const auto open = activation_inverse_bounds(Activation::relu(), DenseMatrix(1, 1, 0.05), 0.1);
    CHECK_FALSE(open.lower.has(0));
    CHECK(open.upper.value(0) == Approx(0.15));

    const auto leaky =
        activation_inverse_bounds(Activation::leaky_relu(0.01), DenseMatrix(1, 1, -0.005), 0.005);
    CHECK(leaky.lower.value(0) == Approx(-1.0));
    CHECK(leaky.upper.value(0) == Approx(0.0));
}

TEST_CASE("inverse bounds reject empty intervals") {
    DenseMatrix a(1, 3, 0.2);
    a[2] = -1.0;
    try {
        (void)activation_inverse_bounds(Activation::relu(), a, 0.1);
        FAIL("expected FeasibilityError");
    } catch (const FeasibilityError& e) {
        CHECK(e.index() == 2);
    }
    CHECK_THROWS_AS((void)activation_inverse_bounds(Activation::elu(0.1), DenseMatrix(1, 1, -0.3), 0.1),
                    FeasibilityError);
    CHECK_THROWS_AS((void)activation_inverse_bounds(Activation::relu(), a, 0.0), InputError);
}

TEST_CASE("property: inverse bounds are exact") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> ua(-1.0, 3.0), ue(1e-3, 1.0), t(0.0, 1.0);
    for (const auto& act : kAll) {
        int tested = 0;
        for (int i = 0; i < 1000; ++i) {
            const double a = ua(rng), eps = ue(rng);
            InverseBounds ib;
            try {
                ib = activation_inverse_bounds(act, DenseMatrix(1, 1, a), eps);
            } catch (const FeasibilityError&) {
                const double inf = act.range_infimum();
                CHECK(a + eps <= inf);
                continue;
            }
            ++tested;
            const double hi = ib.upper.value(0);
            const double lo = ib.lower.has(0) ? ib.lower.value(0) : hi - 50.0;
            const double z = lo + t(rng) * (hi - lo);
            const double hz = act.apply(z);
            CHECK(hz >= a - eps - 1e-12);
            CHECK(hz <= a + eps + 1e-12);

            // Just outside a finite bound the constraint must fail, wherever h
            // changes by more than rounding over the offset.
            const double off_hi = 1e-6 * (1.0 + std::abs(hi));
            if (act.derivative(hi) * off_hi > 1e-12 * (1.0 + std::abs(a)))
                CHECK(act.apply(hi + off_hi) > a + eps);
            if (ib.lower.has(0)) {
                const double off_lo = 1e-6 * (1.0 + std::abs(lo));
                if (act.derivative(lo - off_lo) * off_lo > 1e-12 * (1.0 + std::abs(a)))
                    CHECK(act.apply(lo - off_lo) < a - eps);
            }
        }
        CHECK(tested > 500);
    }
}

TEST_CASE("penalty examples") {
    std::mt19937_64 rng(33);
    const auto a = testutil::random_matrix(3, 5, rng);
    const auto W = testutil::random_matrix(2, 3, rng);
    const auto b = testutil::random_matrix(2, 1, rng);
    const auto z = add_column(matmul(W, a), b);
    CHECK(penalty_phi(a, W, z, b, 3.0) == Approx(0.0).epsilon(1e-20));
    const auto g = penalty_grads(a, W, z, b, 3.0);
    CHECK(max_abs(g.gW) < 1e-14);
    CHECK(max_abs(g.gb) < 1e-14);
    CHECK(max_abs(g.gz) < 1e-14);
    CHECK(max_abs(g.ga_prev) < 1e-14);

    const DenseMatrix one(1, 1, 1.0), zero(1, 1, 0.0), three(1, 1, 3.0);
    CHECK(penalty_phi(one, one, three, zero, 2.0) == 4.0);
    CHECK(penalty_grads(one, one, three, zero, 2.0).gz[0] == 4.0);

    const auto z2 = testutil::random_matrix(2, 5, rng);
    CHECK(penalty_phi(a, W, z2, b, 2.6) == Approx(2.0 * penalty_phi(a, W, z2, b, 1.3)));
    CHECK_THROWS_AS((void)penalty_phi(a, W, DenseMatrix(3, 5), b, 1.0), ShapeError);
}

TEST_CASE("property: penalty gradients match finite differences") {
    std::mt19937_64 rng(34);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 8, N = 1 + rng() % 16;
        const double rho = 0.1 + (rng() % 100) / 10.0;
        const auto a = testutil::random_matrix(m, N, rng);
        const auto W = testutil::random_matrix(n, m, rng);
        const auto z = testutil::random_matrix(n, N, rng);
        const auto b = testutil::random_matrix(n, 1, rng);
        const auto g = penalty_grads(a, W, z, b, rho);

        CHECK(testutil::rel_error(g.gW, testutil::numeric_grad(
                                            [&](const DenseMatrix& v) { return penalty_phi(a, v, z, b, rho); }, W)) <
              1e-5);
        CHECK(testutil::rel_error(g.gb, testutil::numeric_grad(
                                            [&](const DenseMatrix& v) { return penalty_phi(a, W, z, v, rho); }, b)) <
              1e-5);
        CHECK(testutil::rel_error(g.gz, testutil::numeric_grad(
                                            [&](const DenseMatrix& v) { return penalty_phi(a, W, v, b, rho); }, z)) <
              1e-5);
        CHECK(testutil::rel_error(g.ga_prev, testutil::numeric_grad(
                                                 [&](const DenseMatrix& v) { return penalty_phi(v, W, z, b, rho); }, a)) <
              1e-5);

        CHECK(penalty_grad_W(a, W, z, b, rho) == g.gW);
        CHECK(penalty_grad_b(a, W, z, b, rho) == g.gb);
        CHECK(penalty_grad_z(a, W, z, b, rho) == g.gz);
        CHECK(penalty_grad_a(a, W, z, b, rho) == g.ga_prev);
    }
}

TEST_CASE("loss examples") {
    const DenseMatrix y0 = DenseMatrix::from_rows({{1}, {0}});
    CHECK(loss_R(DenseMatrix(2, 1), y0) == Approx(std::log(2.0)));
    CHECK(loss_R(DenseMatrix::from_rows({{30}, {0}}), y0) == Approx(0.0).epsilon(1e-12));
    CHECK(loss_R(DenseMatrix::from_rows({{0, 40}, {0, 0}}), DenseMatrix::from_rows({{1, 1}, {0, 0}})) ==
          Approx(0.5 * std::log(2.0)));
    // Large logits stay finite.
    CHECK(loss_R(DenseMatrix::from_rows({{-1000}, {1000}}), y0) == Approx(2000.0));

    const auto g = loss_R_grad(DenseMatrix(2, 1), y0);
    CHECK(g[0] == Approx(-0.5));
    CHECK(g[1] == Approx(0.5));

    // Targets must be one-hot, so the fixed point is approached by a confident column.
    CHECK(max_abs(loss_R_grad(DenseMatrix::from_rows({{40}, {0}}), y0)) < 1e-15);
    CHECK(max_abs(loss_R_grad(DenseMatrix::from_rows({{0}, {0}}), y0)) == 0.5);

    CHECK_THROWS_AS((void)loss_R(DenseMatrix(2, 1), DenseMatrix::from_rows({{1}, {1}})), InputError);
    CHECK_THROWS_AS((void)loss_R(DenseMatrix(2, 1), DenseMatrix::from_rows({{0.5}, {0.5}})), InputError);
    CHECK_THROWS_AS((void)loss_R(DenseMatrix(2, 2), y0), ShapeError);
}

TEST_CASE("property: loss gradient matches finite differences") {
    std::mt19937_64 rng(35);
    for (int t = 0; t < 100; ++t) {
        const std::size_t C = 2 + rng() % 7, N = 1 + rng() % 16;
        const auto z = testutil::random_matrix(C, N, rng, -3, 3);
        const auto y = testutil::one_hot_random(C, N, rng);
        const auto num = testutil::numeric_grad([&](const DenseMatrix& v) { return loss_R(v, y); }, z);
        CHECK(testutil::rel_error(loss_R_grad(z, y), num) < 1e-5);
    }
}

TEST_CASE("regularizer examples") {
    std::mt19937_64 rng(36);
    CHECK(regularizer_value({RegularizerKind::None, 5.0}, testutil::random_matrix(3, 3, rng)) == 0.0);
    CHECK(regularizer_value({RegularizerKind::L2, 2.0}, DenseMatrix::from_rows({{3, 4}})) == 25.0);
    CHECK(regularizer_value({RegularizerKind::L1, 1.0}, DenseMatrix::from_rows({{-2, 0.5}})) == 2.5);
}

namespace {

NetworkState random_state(const std::vector<std::size_t>& dims, std::size_t N, std::mt19937_64& rng,
                          const DenseMatrix& x, bool consistent, const Activation& act) {
    NetworkState s;
    DenseMatrix in = x;
    const std::size_t L = dims.size() - 1;
    for (std::size_t l = 0; l < L; ++l) {
        s.W.push_back(testutil::random_matrix(dims[l + 1], dims[l], rng));
        s.b.push_back(testutil::random_matrix(dims[l + 1], 1, rng));
        DenseMatrix z = consistent ? add_column(matmul(s.W[l], in), s.b[l])
                                   : testutil::random_matrix(dims[l + 1], N, rng);
        s.z.push_back(z);
        if (l + 1 < L) {
            s.a.push_back(consistent ? activation_apply(act, z)
                                     : testutil::random_matrix(dims[l + 1], N, rng));
            in = s.a.back();
        }
    }
    return s;
}

}  // namespace

TEST_CASE("objective examples") {
    std::mt19937_64 rng(37);
    const auto x = testutil::random_matrix(3, 6, rng);
    const auto y = testutil::one_hot_random(2, 6, rng);
    const RegularizerSpec none{};

    const auto exact = random_state({3, 4, 4, 2}, 6, rng, x, true, Activation::relu());
    CHECK(objective_F(exact, x, y, 7.0, none) == Approx(loss_R(exact.z.back(), y)).epsilon(1e-13));

    const RegularizerSpec l2{RegularizerKind::L2, 0.3};
    const auto s = random_state({3, 4, 4, 2}, 6, rng, x, false, Activation::relu());
    double base = loss_R(s.z.back(), y);
    for (const auto& W : s.W) base += regularizer_value(l2, W);
    const double pen1 = objective_F(s, x, y, 0.5, l2) - base;
    const double pen2 = objective_F(s, x, y, 1.0, l2) - base;
    CHECK(pen2 == Approx(2.0 * pen1).epsilon(1e-12));
    CHECK(objective_F(s, x, y, 0.5, l2) >= 0.0);

    // One layer, one sample: x=1, W=[1;1], b=0, z=[0;0], class 0, rho=1.
    NetworkState toy;
    toy.W = {DenseMatrix::from_rows({{1}, {1}})};
    toy.b = {DenseMatrix(2, 1)};
    toy.z = {DenseMatrix(2, 1)};
    const double scalar_oracle = std::log(std::exp(0.0) + std::exp(0.0)) - 0.0 + 0.5 * (1.0 + 1.0);
    CHECK(std::abs(objective_F(toy, DenseMatrix(1, 1, 1.0), DenseMatrix::from_rows({{1}, {0}}), 1.0,
                               none) -
                   scalar_oracle) < 1e-12);
}

TEST_CASE("feasibility_violation measures the box excess") {
    NetworkState s;
    s.W = {DenseMatrix(2, 1), DenseMatrix(2, 2)};
    s.b = {DenseMatrix(2, 1), DenseMatrix(2, 1)};
    s.z = {DenseMatrix::from_rows({{1.0}, {-1.0}}), DenseMatrix(2, 1)};
    s.a = {DenseMatrix::from_rows({{1.05}, {0.3}})};
    CHECK(feasibility_violation(s, Activation::relu(), 0.1) == Approx(0.2));
    s.a[0][1] = 0.0;
    CHECK(feasibility_violation(s, Activation::relu(), 0.1) == 0.0);
}

TEST_CASE("forward_inference examples") {
    const NetworkSpec spec{{2, 2, 2}, Activation::relu()};
    std::mt19937_64 rng(38);
    const auto x = testutil::random_matrix(2, 5, rng);

    const std::vector<DenseMatrix> W0{DenseMatrix(2, 2), DenseMatrix(2, 2)};
    const std::vector<DenseMatrix> b0{DenseMatrix(2, 1), DenseMatrix(2, 1)};
    const auto zero = forward_inference(spec, W0, b0, x);
    CHECK(max_abs(zero.logits) == 0.0);
    for (auto p : zero.predictions) CHECK(p == 0);

    const std::vector<DenseMatrix> W{DenseMatrix::identity(2), DenseMatrix::from_rows({{2, 0}, {0, 3}})};
    const std::vector<DenseMatrix> b{DenseMatrix::from_rows({{0}, {-1}}),
                                     DenseMatrix::from_rows({{0.5}, {0}})};
    const auto xs = DenseMatrix::from_rows({{1, 0}, {0.5, 2}});
    const auto r = forward_inference(spec, W, b, xs);
    CHECK(r.logits == DenseMatrix::from_rows({{2.5, 0.5}, {0, 3}}));
    CHECK(r.predictions == std::vector<std::size_t>{0, 1});

    auto shifted = b;
    shifted[1] = add(b[1], DenseMatrix(2, 1, 4.0));
    CHECK(forward_inference(spec, W, shifted, xs).predictions == r.predictions);

    CHECK(argmax_columns(DenseMatrix::from_rows({{1, 2}, {1, 2}, {0, 5}})) ==
          std::vector<std::size_t>{0, 2});
}
