#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "helpers.hpp"
#include "scs/metrics.hpp"

using namespace scs;

namespace {

// Left-to-right asset notation: "110" holds assets 0 and 1.
SelectionMask m3(const char* s) {
    std::uint64_t bits = 0;
    for (int j = 0; s[j]; ++j)
        if (s[j] == '1') bits |= std::uint64_t{1} << j;
    return {bits, 3};
}

std::vector<SelectionMask> set_of(std::initializer_list<const char*> s) {
    std::vector<SelectionMask> out;
    for (const char* m : s) out.push_back(m3(m));
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("relative multiplicity index") {
    CHECK(rmi(1, 7) == 1.0);
    CHECK(rmi(7, 7) == 0.0);
    CHECK(std::round(1e4 * rmi(122, 65535)) == 5668);
    CHECK(std::round(1e4 * rmi(408, 131071)) == 4899);
    CHECK(std::round(1e4 * rmi(20, 65535)) == 7299);
    for (std::uint64_t k = 1; k < 1023; ++k) CHECK(rmi(k + 1, 1023) < rmi(k, 1023));
    CHECK_THROWS_AS(rmi(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(rmi(0, 7), std::invalid_argument);
    CHECK_THROWS_AS(rmi(8, 7), std::invalid_argument);
}

TEST_CASE("lower boundary examples") {
    const auto lb = lower_boundary(set_of({"100", "110", "011"}));
    CHECK(lb == set_of({"100", "011"}));
    const auto singles = set_of({"100", "010", "001"});
    CHECK(lower_boundary(singles) == singles);
    CHECK(lower_boundary(std::vector<SelectionMask>{}).empty());
}

TEST_CASE("lower boundary matches the pairwise definition") {
    std::mt19937_64 eng(6);
    for (int rep = 0; rep < 20; ++rep) {
        std::set<std::uint64_t> picked;
        while (picked.size() < 200) picked.insert(1 + eng() % 4095);
        std::vector<SelectionMask> inc;
        for (auto b : picked) inc.emplace_back(b, 12);
        std::vector<SelectionMask> expected;
        for (const auto& a : inc) {
            bool minimal = true;
            for (const auto& b : inc)
                if (is_strict_subset(b, a)) minimal = false;
            if (minimal) expected.push_back(a);
        }
        const auto lb = lower_boundary(inc);
        CHECK(lb == expected);
        for (const auto& a : lb)
            for (const auto& b : lb) CHECK_FALSE(is_strict_subset(a, b));
    }
}

TEST_CASE("inclusion importance examples") {
    const auto ii = inclusion_importance(set_of({"100", "110"}), 3);
    CHECK(ii == std::vector<double>{1.0, 0.5, 0.0});
    CHECK_THROWS(inclusion_importance(std::vector<SelectionMask>{}, 3));
}

TEST_CASE("co-inclusion examples") {
    const auto c = co_inclusion(set_of({"110", "011"}), 3);
    CHECK(c[0][1] == 0.5);
    CHECK(c[1][2] == 0.5);
    CHECK(c[0][2] == 0.0);
    CHECK(c[0][0] == 1.0);
    const auto absent = co_inclusion(set_of({"100"}), 3);
    CHECK(absent[1][2] == 1.0);
    CHECK(absent[0][1] == 0.0);

    const auto edges = cii_graph_export(c, 0.01);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].i == 0);
    CHECK(edges[0].j == 1);
    CHECK(edges[0].weight == 0.5);
    CHECK(edges[1].i == 1);
    CHECK(edges[1].j == 2);
    CHECK(cii_graph_export(c, 1 - 1e-9).empty());
    CHECK_THROWS_AS(cii_graph_export(c, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(cii_graph_export(c, -0.1), std::invalid_argument);

    std::ostringstream dot;
    write_cii_dot(edges, {"a", "b", "c"}, 0.01, dot);
    CHECK(dot.str().find("penwidth=5.5") != std::string::npos);
    CHECK(dot.str().find("\"a\" -- \"b\"") != std::string::npos);
}

TEST_CASE("metrics of a screened panel match the oracle") {
    std::mt19937_64 eng(13);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 3 + rep % 3;
        const auto x = oracle::random_columns(n, 40, eng());
        const auto panel = testing::to_panel(x);
        ScreenConfig cfg;
        cfg.alpha = 0.2;
        const auto r = build_scs(panel, ExpectedShortfall{}, cfg);
        oracle::Loss l{oracle::Kind::ES, 0.5, 1.0, 0.1};
        const auto o = oracle::metrics(oracle::scs(x, l, 0.2, true), n);
        const auto m = compute_metrics(r);
        CHECK(m.scs_size == o.size);
        CHECK(m.rmi == doctest::Approx(o.rmi).epsilon(1e-12));
        CHECK(m.loss_max == doctest::Approx(o.loss_max).epsilon(1e-12));
        CHECK(m.spread == doctest::Approx(o.loss_max - r.reference_loss).epsilon(1e-12));
        REQUIRE(m.lower_boundary.size() == o.lower.size());
        for (std::size_t i = 0; i < o.lower.size(); ++i) CHECK(m.lower_boundary[i].bits() == o.lower[i]);
        for (int i = 0; i < n; ++i) {
            CHECK(m.inclusion[i] == doctest::Approx(o.ii[i]));
            for (int j = 0; j < n; ++j) {
                CHECK(m.co_inclusion[i][j] == doctest::Approx(o.cii[i][j]));
                CHECK(m.co_inclusion[i][j] == m.co_inclusion[j][i]);
            }
        }
    }
}

TEST_CASE("singleton confidence set") {
    ScsResult r;
    r.reference = SelectionMask(2, 2);
    r.reference_loss = -1.0;
    r.universe_size = 3;
    r.records = {{SelectionMask(1, 2), 0.0, 9.0, false, false, RecordStatus::Ok},
                 {SelectionMask(2, 2), -1.0, 0.0, true, false, RecordStatus::Ok},
                 {SelectionMask(3, 2), 0.5, 9.0, false, false, RecordStatus::Ok}};
    r.included_count = 1;
    const auto m = compute_metrics(r);
    CHECK(m.rmi == 1.0);
    CHECK(m.spread == 0.0);
    CHECK(m.inclusion == std::vector<double>{0.0, 1.0});
}

TEST_CASE("inclusion profile reuses one pass") {
    const auto panel = testing::random_panel(7, 60, 101);
    ScreenConfig cfg;
    const std::vector<double> grid{0.05, 0.01, 0.02, 0.04, 0.03, 0.5};
    const auto prof = ii_profile(panel, Sharpe{}, cfg, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        cfg.alpha = grid[g];
        const auto r = build_scs(panel, Sharpe{}, cfg);
        CHECK(prof.sizes[g] == r.included_count);
        const auto ii = inclusion_importance(r);
        for (std::size_t j = 0; j < ii.size(); ++j) CHECK(prof.inclusion[g][j] == doctest::Approx(ii[j]).epsilon(1e-14));
    }
    CHECK_THROWS(ii_profile(panel, Sharpe{}, cfg, {}));
    CHECK_THROWS(ii_profile(panel, Sharpe{}, cfg, {1.0}));
}

TEST_CASE("csv writers") {
    const auto panel = testing::random_panel(3, 30, 7);
    const auto r = build_scs(panel, MeanVariance{}, {});
    const auto m = compute_metrics(r);
    std::ostringstream out;
    write_metrics_csv({m}, out);
    const auto text = out.str();
    CHECK(text.rfind("alpha,confidence_pct,scs_size,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    std::ostringstream mat;
    write_matrix_csv(m.co_inclusion, r.asset_labels, mat);
    const auto rows = mat.str();
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 4);
}

}
