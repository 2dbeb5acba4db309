#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "oracle.hpp"
#include "scs/rng.hpp"
#include "scs/simulate.hpp"

using namespace scs;

namespace {

PopulationModel diag_model(Eigen::VectorXd mean, Eigen::VectorXd var) {
    return PopulationModel(std::move(mean), var.asDiagonal().toDenseMatrix());
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("exchangeable correlation") {
    CHECK(gen_model2(4, 0.0).isIdentity());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gen_model2(10, 0.25));
    const auto ev = es.eigenvalues();
    CHECK(ev(9) == doctest::Approx(1 + 9 * 0.25));
    for (int i = 0; i < 9; ++i) CHECK(ev(i) == doctest::Approx(0.75));
    CHECK(gen_model2(10, 0.75).llt().info() == Eigen::Success);
    CHECK_THROWS_AS(gen_model2(10, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(gen_model2(10, 1.0), std::invalid_argument);
}

TEST_CASE("graph correlation") {
    for (double v : {0.3, 1.0, 4.0}) {
        const auto r = gen_model1(2, v, 1);
        CHECK(r(0, 1) == doctest::Approx(-v / (v + 0.2)).epsilon(1e-12));
        CHECK(r(0, 0) == doctest::Approx(1.0));
    }
    for (int n : {3, 10, 25})
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto r = gen_model1(n, 1.0, seed);
            CHECK((r - r.transpose()).norm() == 0.0);
            for (int i = 0; i < n; ++i) CHECK(r(i, i) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(r.llt().info() == Eigen::Success);
        }
}

TEST_CASE("preferential attachment grows hubs") {
    auto max_degree = [](int n) {
        double total = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            auto eng = rng::engine(seed, 0, rng::Purpose::User);
            const auto a = scale_free_tree(n, eng);
            CHECK(a.sum() == 2.0 * (n - 1));
            total += a.rowwise().sum().maxCoeff();
        }
        return total / 200;
    };
    const double small = max_degree(10), large = max_degree(200);
    CHECK(large > 2.5 * small);
    // A uniform random recursive tree has max degree near log2(n); attachment by degree exceeds it.
    CHECK(large > 2 * std::log2(200.0));
}

TEST_CASE("mean vector") {
    MeanRule silent;
    silent.noise_param = 0.0;
    Eigen::VectorXd d(2);
    d << 0.02, 0.03;
    const auto eta = gen_mean_vector(d, silent, 5);
    CHECK(std::abs(eta(0)) < 1e-18);
    CHECK(eta(1) == doctest::Approx(0.001).epsilon(1e-12));
    MeanRule noisy;
    CHECK(gen_mean_vector(d, noisy, 5) == gen_mean_vector(d, noisy, 5));
    CHECK(gen_mean_vector(d, noisy, 5) != gen_mean_vector(d, noisy, 6));
}

TEST_CASE("populations and panels are reproducible") {
    GeneratorSpec g;
    const auto a = draw_population(g, 3), b = draw_population(g, 3), c = draw_population(g, 4);
    CHECK(a.mean() == b.mean());
    CHECK(a.covariance() == b.covariance());
    CHECK(a.mean() != c.mean());
    for (int j = 0; j < 10; ++j) CHECK((a.covariance()(j, j) >= 0.01 && a.covariance()(j, j) <= 0.03));
    g.redraw_per_run = false;
    CHECK(draw_population(g, 3).mean() == draw_population(g, 0).mean());
    const auto p1 = sample_panel(a, 50, 9, 2), p2 = sample_panel(a, 50, 9, 2), p3 = sample_panel(a, 50, 9, 3);
    CHECK(to_csv(p1) == to_csv(p2));
    CHECK(to_csv(p1) != to_csv(p3));
    CHECK(p1.periods() == 50);
    CHECK(p1.assets() == 10);
}

TEST_CASE("sample panels obey the law of large numbers") {
    const PopulationModel id(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    const auto p = sample_panel(id, 100000, 1);
    for (int i = 0; i < 3; ++i) {
        const auto ci = p.column(i);
        double m = 0;
        for (double v : ci) m += v;
        CHECK(std::abs(m / 1e5) < 0.02);
        for (int j = 0; j < 3; ++j) {
            const auto cj = p.column(j);
            double s = 0;
            for (std::size_t t = 0; t < ci.size(); ++t) s += ci[t] * cj[t];
            CHECK(std::abs(s / 1e5 - (i == j ? 1.0 : 0.0)) < 0.02);
        }
    }
    GeneratorSpec g;
    const auto model = draw_population(g, 0);
    const auto q = sample_panel(model, 100000, 2);
    for (int j = 0; j < 10; ++j) {
        const std::vector<double> col(q.column(j).begin(), q.column(j).end());
        CHECK(std::abs(oracle::var(col) / model.covariance()(j, j) - 1) < 0.03);
    }
}

TEST_CASE("population moments") {
    Eigen::VectorXd mu(4);
    mu << 0.1, 0.2, 0.3, 0.4;
    const PopulationModel m(mu, gen_model2(4, 0.5));
    const auto single = population_moments(m, SelectionMask(4, 4));
    CHECK(single.mean == doctest::Approx(0.3));
    CHECK(single.variance == doctest::Approx(1.0));
    const auto full = population_moments(m, SelectionMask::full(4));
    CHECK(full.mean == doctest::Approx(0.25));
    CHECK(full.variance == doctest::Approx((1 + 3 * 0.5) / 4));

    const auto model = draw_population(GeneratorSpec{}, 1);
    const auto panel = sample_panel(model, 1000000, 3);
    const SelectionMask s(0b1011001101, 10);
    const auto pop = population_moments(model, s);
    const auto y = portfolio_series(panel, s);
    CHECK(std::abs(oracle::var(y) / pop.variance - 1) < 0.01);
    CHECK(std::abs(oracle::mean(y) - pop.mean) < 0.01 * std::sqrt(pop.variance));
}

TEST_CASE("true optimum") {
    const auto one = true_optimum(PopulationModel(Eigen::VectorXd::Constant(1, 0.1), Eigen::MatrixXd::Identity(1, 1)),
                                  Sharpe{});
    REQUIRE(one.masks.size() == 1);
    CHECK(one.masks[0].bits() == 1);

    Eigen::VectorXd mu(3), var(3);
    mu << 0.0, 0.0, 1.0;
    var << 0.01, 0.01, 1.0;
    const auto tie = true_optimum(diag_model(mu, var), MeanVariance{1.0, 1.0});
    REQUIRE(tie.masks.size() == 2);
    CHECK(tie.masks[0].bits() == 0b101);
    CHECK(tie.masks[1].bits() == 0b110);

    GeneratorSpec g;
    g.n_assets = 6;
    g.model = Model1{};
    const auto model = draw_population(g, 2);
    for (const LossSpec spec : {LossSpec(Sharpe{}), LossSpec(ExpectedShortfall{}), LossSpec(MeanVariance{})}) {
        const auto opt = true_optimum(model, spec);
        oracle::Loss l;
        if (std::holds_alternative<Sharpe>(spec.variant())) l.kind = oracle::Kind::Sharpe;
        if (std::holds_alternative<ExpectedShortfall>(spec.variant())) l.kind = oracle::Kind::ES;
        double best = INFINITY;
        std::uint64_t arg = 0;
        for (std::uint64_t b = 1; b < 64; ++b) {
            double mean = 0, v = 0;
            for (int i = 0; i < 6; ++i)
                if ((b >> i) & 1) {
                    mean += model.mean()(i);
                    for (int j = 0; j < 6; ++j)
                        if ((b >> j) & 1) v += model.covariance()(i, j);
                }
            const double k = std::popcount(b);
            const double loss = l.value(mean / k, v / (k * k));
            if (loss < best) best = loss, arg = b;
        }
        CHECK(opt.masks.front().bits() == arg);
        CHECK(opt.loss == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("standardized differentials") {
    Eigen::VectorXd mu(3), var(3);
    mu << 0.05, 0.04, 0.05 - 10 * std::sqrt(0.02);
    var << 0.02, 0.02, 0.02;
    const auto m = diag_model(mu, var);
    const auto opt = true_optimum(m, Sharpe{});
    CHECK(population_gamma(m, Sharpe{}, opt.masks.front(), opt.masks.front()) == 0.0);
    CHECK(population_gamma(m, Sharpe{}, SelectionMask(4, 3), opt.masks.front()) > 1.0);
    for (std::uint64_t b = 1; b < 8; ++b) {
        const SelectionMask s(b, 3);
        CHECK(population_gamma(m, Sharpe{}, s, opt.masks.front()) >= 0.0);
        const double g1 = population_gamma(m, MeanVariance{0.5, 1.0}, s, SelectionMask(1, 3));
        const double g2 = population_gamma(m, MeanVariance{1.5, 3.0}, s, SelectionMask(1, 3));
        CHECK(g1 == doctest::Approx(g2).epsilon(1e-12));
    }
}

TEST_CASE("theoretical expected size") {
    GeneratorSpec g;
    g.n_assets = 6;
    const auto model = draw_population(g, 0);
    double previous = INFINITY;
    for (int t : {0, 10, 100, 1000, 100000}) {
        const auto th = theoretical_expected_size(model, Sharpe{}, 0.05, t);
        CHECK(th.lower_bound <= th.expected + 1e-12);
        CHECK(th.expected <= th.upper_bound + 1e-12);
        CHECK(th.expected <= previous + 1e-12);
        CHECK(th.gamma_min > 0.0);
        previous = th.expected;
        if (t == 0) {
            CHECK(th.expected == doctest::Approx(63 * 0.95));
            CHECK(th.upper_bound == doctest::Approx(63 * 0.95));
        }
        if (t == 100000) CHECK(th.expected == doctest::Approx(th.lower_bound).epsilon(1e-6));
    }
    CHECK_THROWS(theoretical_expected_size(model, Sharpe{}, 0.0, 10));
}

TEST_CASE("monte carlo estimates") {
    McConfig cfg;
    cfg.generator.n_assets = 5;
    cfg.losses = {Sharpe{}, MeanVariance{}};
    cfg.alphas = {0.01, 0.05, 0.2};
    cfg.periods = {50, 2000};
    cfg.runs = 30;
    const auto est = run_mc(cfg);
    CHECK(est.cells.size() == 2 * 2 * 3);
    CHECK(est.records.size() == 2 * 2 * 3 * 30);
    for (const auto& c : est.cells) {
        CHECK(c.runs_used + c.runs_excluded == 30);
        CHECK((c.coverage >= 0 && c.coverage <= 1));
        CHECK(c.kappa >= 1.0);
        CHECK(c.kappa_lower >= 1.0);
        CHECK(c.kappa_lower <= c.kappa);
        CHECK(c.kappa_se >= 0.0);
    }
    for (const auto& loss : {std::string("sharpe"), LossSpec(MeanVariance{}).to_string()})
        for (int t : cfg.periods) {
            CHECK(est.cell(loss, t, 0.01).kappa >= est.cell(loss, t, 0.05).kappa);
            CHECK(est.cell(loss, t, 0.05).kappa >= est.cell(loss, t, 0.2).kappa);
        }
    CHECK(est.cell("sharpe", 50, 0.05).kappa > est.cell("sharpe", 2000, 0.05).kappa);
    CHECK_THROWS_AS(est.cell("sharpe", 51, 0.05), std::out_of_range);

    const auto again = run_mc(cfg);
    CHECK(again.cells.front().kappa == est.cells.front().kappa);
    std::ostringstream table;
    write_mc_table_csv(est, cfg, table);
    CHECK(table.str().rfind("loss,T,runs,excluded,kappa_99", 0) == 0);

    cfg.runs = 1;
    CHECK_THROWS(run_mc(cfg));
}

}
