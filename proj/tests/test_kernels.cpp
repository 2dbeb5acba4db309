#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "scs/kernels.hpp"

using namespace scs;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = z(eng);
    return v;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels match plain loops") {
    const auto& k = kernels::scalar();
    const auto x = noise(103, 1), e = noise(103, 2);
    double s = 0, ssd = 0;
    for (double v : x) s += v;
    for (double v : x) ssd += (0.5 * v - 0.1) * (0.5 * v - 0.1);
    CHECK(k.sum(x.data(), x.size()) == doctest::Approx(s).epsilon(1e-14));
    CHECK(k.sum_sq_dev(x.data(), 0.5, 0.1, x.size()) == doctest::Approx(ssd).epsilon(1e-14));
    const auto p = k.pair_sums(x.data(), 0.5, 0.1, e.data(), x.size());
    double dd = 0, ddd = 0, dddd = 0, de = 0, dee = 0, dde = 0, ddee = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = 0.5 * x[t] - 0.1;
        dd += d * d, ddd += d * d * d, dddd += d * d * d * d;
        de += d * e[t], dee += d * e[t] * e[t], dde += d * d * e[t], ddee += d * d * e[t] * e[t];
    }
    CHECK(p.dd == doctest::Approx(dd).epsilon(1e-14));
    CHECK(p.ddd == doctest::Approx(ddd).epsilon(1e-13));
    CHECK(p.dddd == doctest::Approx(dddd).epsilon(1e-14));
    CHECK(p.de == doctest::Approx(de).epsilon(1e-13));
    CHECK(p.dee == doctest::Approx(dee).epsilon(1e-13));
    CHECK(p.dde == doctest::Approx(dde).epsilon(1e-13));
    CHECK(p.ddee == doctest::Approx(ddee).epsilon(1e-14));

    std::vector<double> acc(x.size(), 1.0);
    k.accumulate(acc.data(), x.data(), -1.0, x.size());
    for (std::size_t t = 0; t < x.size(); ++t) CHECK(acc[t] == 1.0 - x[t]);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
    const auto* simd = kernels::avx2();
    if (!simd) {
        MESSAGE("AVX2 kernels unavailable on this host; equivalence not exercised");
        return;
    }
    const auto& ref = kernels::scalar();
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 100u, 1001u, 4099u}) {
        const auto x = noise(n, n, 0.03), e = noise(n, n + 7, 0.02);
        CHECK(close(simd->sum(x.data(), n), ref.sum(x.data(), n), 1e-12));
        CHECK(close(simd->sum_sq_dev(x.data(), 0.25, 0.001, n), ref.sum_sq_dev(x.data(), 0.25, 0.001, n), 1e-12));
        const auto a = simd->pair_sums(x.data(), 0.25, 0.001, e.data(), n);
        const auto b = ref.pair_sums(x.data(), 0.25, 0.001, e.data(), n);
        CHECK(close(a.dd, b.dd, 1e-12));
        CHECK(close(a.ddd, b.ddd, 1e-12));
        CHECK(close(a.dddd, b.dddd, 1e-12));
        CHECK(close(a.de, b.de, 1e-12));
        CHECK(close(a.dee, b.dee, 1e-12));
        CHECK(close(a.dde, b.dde, 1e-12));
        CHECK(close(a.ddee, b.ddee, 1e-12));
        std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
        simd->accumulate(acc1.data(), x.data(), -1.0, n);
        ref.accumulate(acc2.data(), x.data(), -1.0, n);
        CHECK(acc1 == acc2);  // element-wise ops are exact in both variants
    }
}

TEST_CASE("active table honours the scalar override") {
    CHECK(kernels::active().name != nullptr);
    CHECK(std::string(kernels::scalar().name) == "scalar");
}

}
