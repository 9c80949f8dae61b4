#include "tiam/data_io.hpp"
#include "tiam/errors.hpp"
#include "tiam/trainer.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace tiam;

namespace {

TrainConfig toy_config(std::vector<std::size_t> dims, int epochs) {
    TrainConfig cfg;
    cfg.spec = {std::move(dims), Activation::relu()};
    cfg.epochs = epochs;
    cfg.hyper.rho0 = 1e-3;
    return cfg;
}

Dataset four_sample_toy() {
    Dataset ds;
    ds.x = DenseMatrix::from_rows({{0.0, 1.0, 0.0, 1.0}, {0.0, 0.0, 1.0, 1.0}});
    ds.labels = {0, 1, 1, 0};
    ds.classes = 2;
    ds.name = "xor";
    return ds;
}

}  // namespace

TEST_CASE("initial state has zero penalty and exact activations") {
    std::mt19937_64 rng(61);
    const auto x = testutil::random_matrix(3, 7, rng);
    const auto y = testutil::one_hot_random(2, 7, rng);
    for (std::uint64_t seed : {0u, 1u, 7u}) {
        TrainConfig cfg = toy_config({3, 5, 4, 2}, 1);
        cfg.seed = seed;
        const NetworkState s = initialize_state(cfg, x, y);
        REQUIRE(s.num_layers() == 3);
        REQUIRE(s.a.size() == 2);
        DenseMatrix in = x;
        for (std::size_t l = 0; l < 3; ++l) {
            CHECK(penalty_phi(in, s.W[l], s.z[l], s.b[l], 1.0) == 0.0);
            CHECK(max_abs(s.b[l]) == 0.0);
            CHECK(s.prev_W[l] == s.W[l]);
            CHECK(s.bar_z[l] == s.z[l]);
            if (l < 2) {
                CHECK(s.a[l] == activation_apply(cfg.spec.activation, s.z[l]));
                in = s.a[l];
            }
        }
        CHECK(feasibility_violation(s, cfg.spec.activation, 1e-4) == 0.0);
        CHECK(initialize_state(cfg, x, y).W == s.W);
    }
}

TEST_CASE("He initialization scale") {
    const NetworkSpec spec{{200, 300, 2}, Activation::relu()};
    std::vector<DenseMatrix> W, b;
    initialize_weights(spec, {}, 3, W, b);
    const double var = frobenius_norm_sq(W[0]) / static_cast<double>(W[0].size());
    CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.05));
    std::vector<DenseMatrix> W2, b2;
    initialize_weights(spec, {2.0}, 3, W2, b2);
    CHECK(max_abs(sub(W2[0], scale(W[0], 2.0))) < 1e-15);
}

TEST_CASE("evaluate_accuracy examples") {
    const NetworkSpec spec{{2, 2, 2}, Activation::relu()};
    const std::vector<DenseMatrix> W0{DenseMatrix(2, 2), DenseMatrix(2, 2)};
    const std::vector<DenseMatrix> b0{DenseMatrix(2, 1), DenseMatrix(2, 1)};
    const auto x = DenseMatrix::from_rows({{1, 0, 3, 4}, {0.5, 2, 1, 1}});
    CHECK(evaluate_accuracy(spec, W0, b0, x, {0, 1, 0, 1}) == 0.5);

    const std::vector<DenseMatrix> W{DenseMatrix::identity(2), DenseMatrix::from_rows({{2, 0}, {0, 3}})};
    const std::vector<DenseMatrix> b{DenseMatrix::from_rows({{0}, {-1}}), DenseMatrix::from_rows({{0.5}, {0}})};
    // logits: col0 [2.5,0], col1 [0.5,3], col2 [6.5,0], col3 [8.5,0]
    CHECK(evaluate_accuracy(spec, W, b, x, {0, 1, 0, 0}) == 1.0);
    CHECK(evaluate_accuracy(spec, W, b, x, {0, 1, 1, 1}) == 0.5);
}

TEST_CASE("one epoch without acceleration does not increase F") {
    TrainConfig cfg = toy_config({2, 3, 2}, 1);
    cfg.ablation = Ablation::Baseline;
    const Dataset ds = four_sample_toy();
    const RunHistory h = train(cfg, ds, ds);
    REQUIRE(h.epochs.size() == 1);
    CHECK(h.epochs[0].F <= h.initial_F + 1e-12);
    CHECK(h.epochs[0].reverts == 0);
}

TEST_CASE("ablation baseline equals full with zero bases") {
    const Dataset ds = synth_blobs(3, 3, 10, 2.0, 4);
    TrainConfig a = toy_config({3, 6, 3}, 15);
    a.ablation = Ablation::Baseline;
    a.audit = true;
    TrainConfig b = a;
    b.ablation = Ablation::Full;
    b.hyper.p1_base = b.hyper.p2_base = b.hyper.p3_base = 0.0;
    const RunHistory ha = train(a, ds, ds);
    const RunHistory hb = train(b, ds, ds);
    CHECK(ha.same_values(hb));
    for (const auto& m : ha.epochs) CHECK(m.reverts == 0);
}

TEST_CASE("ablation names and forced bases") {
    for (Ablation a : {Ablation::Baseline, Ablation::T12, Ablation::T3, Ablation::Full})
        CHECK(parse_ablation(to_string(a)) == a);
    CHECK_THROWS_AS(parse_ablation("t1"), ConfigError);
    TrainConfig cfg = toy_config({2, 2, 2}, 10);
    cfg.ablation = Ablation::T12;
    CHECK(cfg.effective_schedule().p3_base == 0.0);
    CHECK(cfg.effective_schedule().p1_base == 1.0);
    cfg.ablation = Ablation::T3;
    CHECK(cfg.effective_schedule().p1_base == 0.0);
    CHECK(cfg.effective_schedule().p3_base == 0.55);
    CHECK(cfg.effective_schedule().epochs == 10);
}

TEST_CASE("training is deterministic") {
    const Dataset ds = synth_blobs(4, 3, 8, 2.0, 5);
    TrainConfig cfg = toy_config({4, 5, 5, 3}, 12);
    cfg.seed = 9;
    const RunHistory h1 = train(cfg, ds, ds);
    const RunHistory h2 = train(cfg, ds, ds);
    CHECK(h1.same_values(h2));
    cfg.seed = 10;
    CHECK_FALSE(train(cfg, ds, ds).same_values(h1));
}

TEST_CASE("full method separates a two-class toy") {
    const Dataset ds = synth_blobs(2, 2, 20, 10.0, 0);
    REQUIRE(ds.num_samples() == 40);
    TrainConfig cfg = toy_config({2, 8, 2}, 50);
    const RunHistory h = train(cfg, ds, ds);
    CHECK(h.epochs.back().train_accuracy == 1.0);
}

TEST_CASE("epoch metrics are well formed") {
    const Dataset ds = synth_blobs(3, 3, 10, 2.0, 6);
    TrainConfig cfg = toy_config({3, 6, 6, 3}, 25);
    int observed = 0;
    const RunHistory h = train(cfg, ds, ds, [&](const EpochMetrics&, const NetworkState&) { ++observed; });
    CHECK(observed == 25);
    REQUIRE(h.epochs.size() == 25);
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
        const EpochMetrics& m = h.epochs[i];
        CHECK(m.epoch == static_cast<int>(i) + 1);
        CHECK(m.train_accuracy >= 0.0);
        CHECK(m.train_accuracy <= 1.0);
        CHECK(m.reverts >= 0);
        CHECK(m.reverts <= 4 * 3);
        CHECK(m.eps == schedule_eps(m.epoch - 1, cfg.hyper));
        CHECK(m.feasibility_violation <= 1e-8);
        CHECK(std::isfinite(m.F));
    }
    CHECK(h.epochs.front().p1 == 0.0);
    CHECK(h.epochs.back().p3 == 0.0);
}

TEST_CASE("per-epoch safeguard mode runs and stays feasible") {
    const Dataset ds = synth_blobs(3, 3, 10, 2.0, 7);
    TrainConfig cfg = toy_config({3, 6, 3}, 20);
    cfg.safeguard = SafeguardMode::PerEpoch;
    const RunHistory h = train(cfg, ds, ds);
    REQUIRE(h.epochs.size() == 20);
    for (const auto& m : h.epochs) {
        CHECK(m.feasibility_violation <= 1e-8);
        CHECK(m.reverts >= 0);
        CHECK(m.reverts <= 4 * 2 - 1);
    }
}

TEST_CASE("invalid configurations are rejected") {
    const Dataset ds = four_sample_toy();
    TrainConfig cfg = toy_config({2, 3, 2}, 0);
    CHECK_THROWS_AS(train(cfg, ds, ds), ConfigError);
    cfg = toy_config({2, 3, 3}, 2);
    Dataset bad = ds;
    bad.labels[0] = 5;
    CHECK_THROWS_AS(train(cfg, bad, ds), InputError);
}
