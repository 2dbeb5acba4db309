#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "scs/screening.hpp"

using namespace scs;

namespace {

oracle::Loss to_oracle(const LossSpec& spec) {
    oracle::Loss l;
    if (const auto* m = std::get_if<MeanVariance>(&spec.variant())) l = {oracle::Kind::MV, m->gamma, m->scale, 0.1};
    else if (std::holds_alternative<Sharpe>(spec.variant())) l.kind = oracle::Kind::Sharpe;
    else l = {oracle::Kind::ES, 0.5, 1.0, std::get<ExpectedShortfall>(spec.variant()).level};
    return l;
}

void compare(const ScsResult& r, const oracle::Result& o) {
    REQUIRE(r.records.size() == o.rows.size());
    CHECK(r.reference.bits() == o.reference);
    CHECK(r.reference_loss == doctest::Approx(o.reference_loss).epsilon(1e-12));
    for (std::size_t i = 0; i < o.rows.size(); ++i) {
        const auto& a = r.records[i];
        const auto& b = o.rows[i];
        REQUIRE(a.mask.bits() == b.mask);
        if (std::isnan(b.loss)) {
            CHECK(std::isnan(a.loss));
            CHECK(a.status == RecordStatus::LossUndefined);
            CHECK_FALSE(a.included);
            continue;
        }
        CHECK(std::abs(a.loss - b.loss) <= 1e-12 * std::max(1.0, std::abs(b.loss)));
        if (std::isinf(b.z)) CHECK(std::isinf(a.z));
        else CHECK(std::abs(a.z - b.z) <= 1e-9 * std::max(1.0, std::abs(b.z)));
        // Membership may only differ when z sits on the threshold.
        if (std::abs(b.z - r.quantile) > 1e-8) CHECK(a.included == b.included);
    }
}

}  // namespace

TEST_SUITE("screening") {

TEST_CASE("single asset") {
    const auto panel = testing::random_panel(1, 30, 2);
    const auto r = build_scs(panel, Sharpe{}, {});
    REQUIRE(r.records.size() == 1);
    CHECK(r.reference.bits() == 1);
    CHECK(r.included_count == 1);
    CHECK(r.records[0].z == 0.0);
}

TEST_CASE("brute force agreement") {
    std::mt19937_64 eng(77);
    const std::vector<LossSpec> specs{MeanVariance{0.5, 1.0}, MeanVariance{2.0, 0.5}, Sharpe{}, ExpectedShortfall{0.1}};
    for (int rep = 0; rep < 24; ++rep) {
        const int n = 2 + rep % 4;
        const auto x = oracle::random_columns(n, 25 + static_cast<int>(eng() % 150), eng());
        const auto panel = testing::to_panel(x);
        for (const auto& spec : specs)
            for (auto mode : {CovMode::Gaussian, CovMode::Iid}) {
                ScreenConfig cfg;
                cfg.alpha = 0.1;
                cfg.cov_mode = mode;
                compare(build_scs(panel, spec, cfg), oracle::scs(x, to_oracle(spec), 0.1, mode == CovMode::Gaussian));
            }
    }
}

TEST_CASE("ties resolve to the smaller mask") {
    auto x = oracle::random_columns(3, 60, 5);
    x[2] = x[0];
    const auto panel = testing::to_panel(x);
    for (const LossSpec spec : {LossSpec(Sharpe{}), LossSpec(MeanVariance{}), LossSpec(ExpectedShortfall{})}) {
        const auto opt = empirical_optimum(panel, spec);
        // Masks 1, 4 and 5 share one series.
        CHECK(opt.mask.bits() != 4);
        CHECK(opt.mask.bits() != 5);
    }
    auto y = oracle::random_columns(2, 60, 6);
    y[1] = y[0];
    const auto dup = testing::to_panel(y);
    const auto opt = empirical_optimum(dup, Sharpe{});
    CHECK(opt.mask.bits() == 1);
}

TEST_CASE("structural invariants") {
    std::mt19937_64 eng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 3 + rep % 6;
        const auto panel = testing::random_panel(n, 80, eng());
        for (const LossSpec spec : {LossSpec(Sharpe{}), LossSpec(MeanVariance{1.0, 1.0})}) {
            ScreenConfig cfg;
            const auto r = build_scs(panel, spec, cfg);
            CHECK(r.records.size() == GrayEnumerator::total(n));
            CHECK(r.universe_size == GrayEnumerator::total(n));
            std::uint64_t inc = 0;
            for (const auto& rec : r.records) {
                if (rec.mask == r.reference) {
                    CHECK(rec.included);
                    CHECK(rec.z == 0.0);
                    CHECK(rec.loss == r.reference_loss);
                }
                CHECK(rec.loss >= r.reference_loss);
                CHECK(rec.z >= 0.0);
                CHECK(rec.included == (rec.z <= r.quantile));
                inc += rec.included;
            }
            CHECK(inc == r.included_count);
            cfg.alpha = 0.01;
            const auto wide = build_scs(panel, spec, cfg);
            for (std::size_t i = 0; i < r.records.size(); ++i)
                if (r.records[i].included) CHECK(wide.records[i].included);
            cfg.alpha = 1e-9;
            const auto all = build_scs(panel, spec, cfg);
            for (const auto& rec : all.records) CHECK(rec.included == !std::isinf(rec.z));
        }
    }
}

TEST_CASE("deterministic across worker counts") {
    for (int n : {6, 14}) {
        const auto panel = testing::random_panel(n, 60, 31 + n);
        ScreenConfig cfg;
        cfg.worker_count = 1;
        const auto base = build_scs(panel, ExpectedShortfall{}, cfg);
        for (int w : {2, 3, 0}) {
            cfg.worker_count = w;
            const auto r = build_scs(panel, ExpectedShortfall{}, cfg);
            CHECK(r.reference == base.reference);
            CHECK(r.reference_loss == base.reference_loss);
            REQUIRE(r.records.size() == base.records.size());
            bool same = true;
            for (std::size_t i = 0; i < r.records.size(); ++i)
                same = same && r.records[i].mask == base.records[i].mask && r.records[i].z == base.records[i].z &&
                       r.records[i].loss == base.records[i].loss && r.records[i].included == base.records[i].included;
            CHECK(same);
        }
    }
}

TEST_CASE("record cap keeps only the included masks") {
    const auto panel = testing::random_panel(8, 50, 4);
    ScreenConfig cfg;
    cfg.record_cap = 100;
    const auto capped = build_scs(panel, Sharpe{}, cfg);
    cfg.record_cap = 1 << 20;
    const auto full = build_scs(panel, Sharpe{}, cfg);
    CHECK_FALSE(capped.records_complete);
    CHECK(full.records_complete);
    CHECK(capped.included_count == full.included_count);
    CHECK(capped.records.size() == capped.included_count);
    CHECK(capped.included() == full.included());
    CHECK(capped.universe_size == full.universe_size);
    CHECK_THROWS_AS(capped.at_alpha(0.01), std::invalid_argument);
    CHECK(capped.at_alpha(0.2).included_count == full.at_alpha(0.2).included_count);
    CHECK(full.at_alpha(0.01).included() == [&] {
        cfg.alpha = 0.01;
        return build_scs(panel, Sharpe{}, cfg).included();
    }());
    REQUIRE(capped.z_quantiles.size() == full.z_quantiles.size());
    CHECK_THROWS_AS(full.at_alpha(1.0), std::invalid_argument);
}

TEST_CASE("mask filter restricts the universe") {
    const auto x = oracle::random_columns(6, 70, 12);
    const auto panel = testing::to_panel(x);
    ScreenConfig cfg;
    cfg.mask_filter = max_assets_filter(2);
    const auto r = build_scs(panel, MeanVariance{}, cfg);
    CHECK(r.universe_size == 6 + 15);
    CHECK(r.records.size() == 21);
    for (const auto& rec : r.records) CHECK(weight(rec.mask) <= 2);
    CHECK(weight(r.reference) <= 2);
    oracle::Loss l;
    double best = INFINITY;
    for (std::uint64_t m = 1; m < 64; ++m) {
        if (std::popcount(m) > 2) continue;
        const auto y = oracle::series(x, m);
        best = std::min(best, l.value(oracle::mean(y), oracle::var(y)));
    }
    CHECK(r.reference_loss == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("plausibility check matches the full build") {
    const auto panel = testing::random_panel(7, 90, 41);
    ScreenConfig cfg;
    const Screener screener(panel, ExpectedShortfall{}, cfg);
    const auto r = screener.build();
    for (const auto& rec : r.records) {
        const auto v = screener.check(rec.mask);
        CHECK(v.included == rec.included);
        CHECK(v.z == doctest::Approx(rec.z).epsilon(1e-12));
        CHECK(v.reference == r.reference);
    }
    CHECK_THROWS(screener.check(SelectionMask(1, 5)));
}

TEST_CASE("a clearly dominated candidate is excluded") {
    auto x = oracle::random_columns(3, 400, 19);
    for (auto& v : x[2]) v -= 1.0;
    const auto panel = testing::to_panel(x);
    const auto v = plausibility_check(panel, MeanVariance{}, {}, SelectionMask(4, 3));
    CHECK_FALSE(v.included);
    CHECK(v.z > v.quantile);
}

TEST_CASE("undefined losses are recorded") {
    auto x = oracle::random_columns(3, 50, 23);
    for (auto& v : x[1]) v = 0.01;
    const auto panel = testing::to_panel(x);
    const auto r = build_scs(panel, Sharpe{}, {});
    CHECK(r.undefined_count == 1);
    const auto& rec = r.records[1];
    CHECK(rec.mask.bits() == 2);
    CHECK(rec.status == RecordStatus::LossUndefined);
    CHECK_FALSE(rec.included);
    CHECK(std::isnan(rec.loss));
    CHECK(r.reference.bits() != 2);
}

TEST_CASE("configuration errors") {
    const auto panel = testing::random_panel(3, 20, 1);
    ScreenConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(build_scs(panel, Sharpe{}, cfg), std::invalid_argument);
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(build_scs(panel, Sharpe{}, cfg), std::invalid_argument);
    CHECK(std::string(to_string(RecordStatus::LossUndefined)) == "loss_undefined");
    CHECK(record_status_from_string("degenerate") == RecordStatus::Degenerate);
}

}
