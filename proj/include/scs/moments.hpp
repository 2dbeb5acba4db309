#pragma once

#include <array>
#include <span>
#include <vector>

#include "scs/kernels.hpp"
#include "scs/panel.hpp"
#include "scs/selection.hpp"

namespace scs {

/// Sample mean and variance of a portfolio series. The variance uses the T-1 divisor.
struct PortfolioMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Moments of a portfolio pair (s, s'), s' usually being the reference.
///
/// Divisors: `cov` uses T-1 like the variances; every third and fourth order
/// central moment is a plug-in average with divisor T. Each series is centered
/// at its own sample mean.
struct PairMoments {
    PortfolioMoments s;
    PortfolioMoments s2;
    double cov = 0.0;
    double skew_s = 0.0;       // E[(Y_s - mu_s)^3]
    double skew_s2 = 0.0;      // E[(Y_s' - mu_s')^3]
    double coskew_s_s2 = 0.0;  // E[(Y_s - mu_s)(Y_s' - mu_s')^2]
    double coskew_s2_s = 0.0;  // E[(Y_s' - mu_s')(Y_s - mu_s)^2]
    double kurt_s = 0.0;       // E[(Y_s - mu_s)^4]
    double kurt_s2 = 0.0;      // E[(Y_s' - mu_s')^4]
    double cokurt = 0.0;       // E[(Y_s - mu_s)^2 (Y_s' - mu_s')^2]
    std::size_t periods = 0;
};

/// Asymptotic covariance of (mu_s, var_s, mu_s', var_s') scaled by T.
struct CovMatrix4 {
    std::array<std::array<double, 4>, 4> entries{};

    double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    double& operator()(int i, int j) { return entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    double quadratic_form(const std::array<double, 4>& g) const;
};

enum class CovMode { Iid, Gaussian };

std::vector<double> portfolio_series(const ReturnPanel& panel, const SelectionMask& mask);

/// Unnormalized sum of the mask's columns, accumulated in ascending asset order.
std::vector<double> selection_sum(const ReturnPanel& panel, const SelectionMask& mask,
                                  const kernels::KernelTable& k = kernels::active());

/// Adds or removes one asset column from an unnormalized running sum. The caller
/// divides by the new weight to obtain the portfolio series.
void running_series_update(std::span<double> running_sum, const ReturnPanel& panel, int flipped_asset,
                           bool added, int old_weight, const kernels::KernelTable& k = kernels::active());

PortfolioMoments sample_moments(std::span<const double> series);

/// Moments of the series scale * running_sum without materializing it.
PortfolioMoments scaled_moments(std::span<const double> running_sum, double scale,
                                const kernels::KernelTable& k = kernels::active());

/// Cached reference side of a pair computation.
class ReferenceSeries {
public:
    ReferenceSeries(std::span<const double> running_sum, double scale,
                    const kernels::KernelTable& k = kernels::active());
    explicit ReferenceSeries(std::span<const double> series) : ReferenceSeries(series, 1.0) {}

    const PortfolioMoments& moments() const noexcept { return moments_; }
    std::span<const double> deviations() const noexcept { return deviations_; }
    double sum_e3() const noexcept { return sum_e3_; }
    double sum_e4() const noexcept { return sum_e4_; }

private:
    PortfolioMoments moments_;
    std::vector<double> deviations_;
    double sum_e3_ = 0.0;
    double sum_e4_ = 0.0;
};

PairMoments pair_moments(std::span<const double> series_s, std::span<const double> series_s2);

/// Pair moments of the candidate scale * running_sum against a cached reference.
/// `candidate` must be the result of scaled_moments on the same inputs.
PairMoments pair_moments(std::span<const double> running_sum, double scale, const PortfolioMoments& candidate,
                         const ReferenceSeries& reference, const kernels::KernelTable& k = kernels::active());

CovMatrix4 vhat_iid(const PairMoments& pm);
CovMatrix4 vhat_gaussian(const PairMoments& pm);
CovMatrix4 vhat(const PairMoments& pm, CovMode mode);

}  // namespace scs
