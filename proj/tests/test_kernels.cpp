#include "tiam/kernels.hpp"
#include "tiam/matrix.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace tiam;
namespace k = tiam::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 1e-300;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(a[i]));
    }
    return num / den;
}

}  // namespace

TEST_CASE("isa names parse") {
    CHECK(k::parse_isa("scalar") == k::Isa::Scalar);
    CHECK(k::parse_isa("avx2") == k::Isa::Avx2);
    CHECK_FALSE(k::parse_isa("neon").has_value());
    CHECK(k::scalar_table().isa == k::Isa::Scalar);
}

TEST_CASE("set_isa switches the active table") {
    const k::Isa before = k::active().isa;
    REQUIRE(k::set_isa(k::Isa::Scalar));
    CHECK(k::active().isa == k::Isa::Scalar);
    if (k::avx2_table()) {
        REQUIRE(k::set_isa(k::Isa::Avx2));
        CHECK(k::active().isa == k::Isa::Avx2);
    } else {
        CHECK_FALSE(k::set_isa(k::Isa::Avx2));
        CHECK(k::active().isa == k::Isa::Scalar);
    }
    k::set_isa(before);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
    const k::KernelTable* v = k::avx2_table();
    if (!v) {
        MESSAGE("AVX2 unavailable on this build or CPU; equivalence not exercised");
        return;
    }
    const k::KernelTable& s = k::scalar_table();
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 1 + rng() % 19, n = 1 + rng() % 19, kk = 1 + rng() % 37;
        const auto a = random_vec(m * kk, rng), b = random_vec(kk * n, rng);
        const auto at = random_vec(kk * m, rng), bt = random_vec(n * kk, rng);
        std::vector<double> c1(m * n), c2(m * n);

        s.gemm_nn(m, n, kk, a.data(), b.data(), c1.data());
        v->gemm_nn(m, n, kk, a.data(), b.data(), c2.data());
        CHECK(max_rel(c1, c2) < 1e-13);
        s.gemm_tn(m, n, kk, at.data(), b.data(), c1.data());
        v->gemm_tn(m, n, kk, at.data(), b.data(), c2.data());
        CHECK(max_rel(c1, c2) < 1e-13);
        s.gemm_nt(m, n, kk, a.data(), bt.data(), c1.data());
        v->gemm_nt(m, n, kk, a.data(), bt.data(), c2.data());
        CHECK(max_rel(c1, c2) < 1e-13);

        const std::size_t len = 1 + rng() % 101;
        const auto x = random_vec(len, rng), y = random_vec(len, rng);
        CHECK(std::abs(s.dot(x.data(), y.data(), len) - v->dot(x.data(), y.data(), len)) <
              1e-12 * (1.0 + len));
        CHECK(std::abs(s.sum_sq(x.data(), len) - v->sum_sq(x.data(), len)) < 1e-12 * (1.0 + len));

        std::vector<double> o1(len), o2(len);
        s.axpby(len, 0.7, x.data(), -1.3, y.data(), o1.data());
        v->axpby(len, 0.7, x.data(), -1.3, y.data(), o2.data());
        CHECK(max_rel(o1, o2) < 1e-15);

        std::vector<double> lo(len), hi(len);
        const double inf = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < len; ++i) {
            lo[i] = (i % 3 == 0) ? -inf : -0.5;
            hi[i] = (i % 4 == 0) ? inf : 0.5;
        }
        s.clip(len, x.data(), lo.data(), hi.data(), o1.data());
        v->clip(len, x.data(), lo.data(), hi.data(), o2.data());
        CHECK(o1 == o2);
    }
}

TEST_CASE("axpby output may alias an input") {
    for (const k::KernelTable* t : {&k::scalar_table(), k::avx2_table()}) {
        if (!t) continue;
        std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, y{1, 1, 1, 1, 1, 1, 1};
        t->axpby(x.size(), 2.0, x.data(), 1.0, y.data(), x.data());
        CHECK(x == std::vector<double>{3, 5, 7, 9, 11, 13, 15});
    }
}

TEST_CASE("matrix operations give the same answer under either ISA") {
    if (!k::avx2_table()) return;
    const k::Isa before = k::active().isa;
    std::mt19937_64 rng(22);
    const auto a = testutil::random_matrix(13, 17, rng);
    const auto b = testutil::random_matrix(17, 9, rng);
    k::set_isa(k::Isa::Scalar);
    const auto p1 = matmul(a, b);
    const double n1 = frobenius_norm_sq(a);
    k::set_isa(k::Isa::Avx2);
    const auto p2 = matmul(a, b);
    const double n2 = frobenius_norm_sq(a);
    k::set_isa(before);
    CHECK(testutil::rel_error(p1, p2) < 1e-13);
    CHECK(std::abs(n1 - n2) < 1e-12 * n1);
}
