#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracle.hpp"
#include "scs/normal.hpp"

using namespace scs;

TEST_SUITE("normal") {

TEST_CASE("quantile matches an independent implementation") {
    for (double p = 1e-8; p < 1.0; p = p < 0.5 ? p * 1.7 : 1.0 - (1.0 - p) / 1.7) {
        if (p > 1.0 - 1e-8) break;
        const double expected = oracle::quantile(p);
        CHECK(std::abs(normal_quantile(p) - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
    }
    for (int i = 1; i < 1000; ++i) {
        const double p = i / 1000.0;
        CHECK(std::abs(normal_quantile(p) - oracle::quantile(p)) <= 1e-9);
    }
}

TEST_CASE("reference values") {
    CHECK(std::abs(normal_quantile(0.95) - 1.6448536269514722) < 1e-12);
    CHECK(std::abs(normal_quantile(0.99) - 2.3263478740408408) < 1e-12);
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
}

TEST_CASE("cdf inverts the quantile") {
    for (int i = 1; i < 200; ++i) {
        const double p = i / 200.0;
        CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-8);
    }
    for (double x = -8; x <= 8; x += 0.25) CHECK(normal_cdf(-x) == doctest::Approx(1.0 - normal_cdf(x)).epsilon(1e-12));
}

TEST_CASE("quantile domain") {
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(-0.1), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(std::nan("")), std::domain_error);
}

}
