#include "tiam/data_io.hpp"
#include "tiam/diagnostics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace tiam;
using doctest::Approx;

namespace {

NetworkState snapshot(double w, double b, double z, double a) {
    NetworkState s;
    s.W = {DenseMatrix(1, 2, w)};
    s.b = {DenseMatrix(1, 1, b)};
    s.z = {DenseMatrix(1, 3, z)};
    s.a = {DenseMatrix(2, 3, a)};
    return s;
}

}  // namespace

TEST_CASE("check_monotonicity examples") {
    const std::vector<double> down{5, 4, 3, 2};
    CHECK(check_monotonicity(down, 0.0).empty());

    const std::vector<double> bump{3, 2, 2.5};
    const auto v = check_monotonicity(bump, 0.0);
    REQUIRE(v.size() == 1);
    CHECK(v[0].index == 2);
    CHECK(v[0].delta == 0.5);

    const std::vector<double> flat{1, 1, 1, 1};
    CHECK(check_monotonicity(flat, 0.0).empty());

    // Slack scales with 1 + |F|.
    const std::vector<double> tiny{100, 100 + 1e-7};
    CHECK(check_monotonicity(tiny, 1e-8).empty());
    CHECK(check_monotonicity(tiny, 1e-10).size() == 1);
}

TEST_CASE("check_monotonicity on a history labels the initial value 0") {
    RunHistory h;
    h.initial_F = 1.0;
    h.epochs.resize(2);
    h.epochs[0].F = 2.0;
    h.epochs[1].F = 1.5;
    const auto v = check_monotonicity(h, 0.0);
    REQUIRE(v.size() == 1);
    CHECK(v[0].index == 0);
}

TEST_CASE("increment norm examples") {
    const std::vector<NetworkState> frozen(5, snapshot(1, 2, 3, 4));
    const auto f = increment_norms(frozen);
    REQUIRE(f.norms.size() == 4);
    for (const auto& n : f.norms) CHECK(n.sum() == 0.0);
    CHECK_FALSE(f.ratio.W.has_value());

    const std::vector<NetworkState> pair{snapshot(0, 0, 0, 0), snapshot(1, 0, 0, 0)};
    const auto p = increment_norms(pair);
    REQUIRE(p.norms.size() == 1);
    CHECK(p.norms[0].W == Approx(std::sqrt(2.0)));
    CHECK_FALSE(p.ratio.W.has_value());

    // ||dX_k|| = 2^-k for k = 1..40: both deciles hold 4 terms and the
    // geometric sums give a ratio of 2^-(40-4).
    std::vector<BlockNorms> geo;
    for (int k = 1; k <= 40; ++k) {
        const double v = std::ldexp(1.0, -k);
        geo.push_back({v, v, v, v});
    }
    const auto g = increment_series(geo);
    const double oracle = std::ldexp(1.0, -36);
    CHECK(*g.ratio.W == Approx(oracle).epsilon(1e-14));
    CHECK(*g.ratio.a == Approx(oracle).epsilon(1e-14));
}

TEST_CASE("estimate_rate examples") {
    std::vector<double> F;
    for (int k = 0; k < 20; ++k) F.push_back(1.0 + std::ldexp(1.0, -k));
    const auto r = estimate_rate(F, 1.0);
    REQUIRE_FALSE(r.ratios.empty());
    for (double v : r.ratios) CHECK(v == Approx(0.25).epsilon(1e-12));
    CHECK(*r.max_last_quartile == Approx(0.25));

    // F^{k+1} - F* = 0.5 (F^{k-1} - F*) on both interleaved subsequences.
    std::vector<double> G{3.0, 5.0};
    for (int k = 2; k < 16; ++k) G.push_back(0.5 * G[k - 2]);
    const auto s = estimate_rate(G, 0.0);
    for (double v : s.ratios) CHECK(v == Approx(0.5));

    const std::vector<double> flat{2, 2, 2};
    CHECK_FALSE(estimate_rate(flat, 2.0).max_last_quartile.has_value());
}

TEST_CASE("verify_majorization examples") {
    const auto empty = verify_majorization({});
    CHECK(empty.empty);
    CHECK(empty.failures == 0);

    const Dataset ds = synth_blobs(3, 3, 10, 2.0, 2);
    TrainConfig cfg;
    cfg.spec = {{3, 6, 3}, Activation::relu()};
    cfg.epochs = 10;
    cfg.audit = true;
    const RunHistory h = train(cfg, ds, ds);
    REQUIRE_FALSE(h.audit.empty());
    const auto clean = verify_majorization(h.audit);
    CHECK(clean.failures == 0);
    CHECK(clean.checked == h.audit.size());

    // Halving a constant breaks its inequality whenever the step moved.
    auto corrupted = h.audit;
    bool done = false;
    for (auto& rec : corrupted)
        if (!done && rec.dist_sq > 0.0 && rec.majorant() - rec.target < 0.25 * rec.constant * rec.dist_sq) {
            rec.constant *= 0.5;
            done = true;
        }
    REQUIRE(done);
    CHECK(verify_majorization(corrupted).failures >= 1);
}

TEST_CASE("stationarity_residual examples") {
    const NetworkState s = snapshot(1, 2, 3, 4);
    CHECK(stationarity_residual(s, s) == 0.0);

    NetworkState t = s;
    t.b[0][0] += 1.0;
    CHECK(stationarity_residual(t, s) == 1.0);

    std::mt19937_64 rng(81);
    NetworkState u = s;
    const double delta = 0.01;
    double oracle = 0.0;
    for (auto* block : {&u.W, &u.b, &u.z, &u.a}) {
        const auto d = testutil::random_matrix((*block)[0].rows(), (*block)[0].cols(), rng);
        const auto step = scale(d, delta / frobenius_norm(d));
        (*block)[0] = add((*block)[0], step);
        oracle += frobenius_norm(step);
    }
    CHECK(stationarity_residual(u, s) == Approx(4.0 * delta).epsilon(1e-12));
    CHECK(stationarity_residual(u, s) == Approx(oracle).epsilon(1e-12));
}

TEST_CASE("report on a short run") {
    const Dataset ds = synth_blobs(3, 3, 10, 2.0, 3);
    TrainConfig cfg;
    cfg.spec = {{3, 6, 3}, Activation::relu()};
    cfg.epochs = 20;
    cfg.audit = true;
    const RunHistory h = train(cfg, ds, ds);
    const DiagnosticsReport r = build_report(h);
    CHECK(r.stationarity.size() == 20);
    CHECK(r.majorization.failures == 0);
    CHECK(r.max_feasibility_violation <= 1e-8);
    CHECK(r.stationarity_residual == r.stationarity.back());

    std::ostringstream text, kv;
    write_report_text(text, r);
    write_report_kv(kv, r);
    CHECK(text.str().find("stationarity") != std::string::npos);
    CHECK(kv.str().find("majorization_failures=0\n") != std::string::npos);
    CHECK(kv.str().find("monotonicity_violations=") != std::string::npos);
}
