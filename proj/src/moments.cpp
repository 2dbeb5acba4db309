#include "scs/moments.hpp"

#include <stdexcept>

namespace scs {

double CovMatrix4::quadratic_form(const std::array<double, 4>& g) const {
    double q = 0.0;
    for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) row += (*this)(i, j) * g[static_cast<std::size_t>(j)];
        q += g[static_cast<std::size_t>(i)] * row;
    }
    return q;
}

std::vector<double> selection_sum(const ReturnPanel& panel, const SelectionMask& mask, const kernels::KernelTable& k) {
    if (mask.universe() != panel.assets()) throw std::invalid_argument("mask universe does not match panel");
    std::vector<double> sum(panel.periods(), 0.0);
    for (int j : assets_of(mask)) k.accumulate(sum.data(), panel.column(j).data(), 1.0, sum.size());
    return sum;
}

std::vector<double> portfolio_series(const ReturnPanel& panel, const SelectionMask& mask) {
    auto series = selection_sum(panel, mask);
    const auto w = static_cast<double>(weight(mask));
    for (double& y : series) y /= w;
    return series;
}

void running_series_update(std::span<double> running_sum, const ReturnPanel& panel, int flipped_asset, bool added,
                           int old_weight, const kernels::KernelTable& k) {
    if (!added && old_weight <= 1) throw std::logic_error("running sum update would remove the last asset");
    if (running_sum.size() != panel.periods()) throw std::invalid_argument("running sum length mismatch");
    k.accumulate(running_sum.data(), panel.column(flipped_asset).data(), added ? 1.0 : -1.0, running_sum.size());
}

PortfolioMoments scaled_moments(std::span<const double> running_sum, double scale, const kernels::KernelTable& k) {
    const std::size_t n = running_sum.size();
    if (n < 2) throw std::invalid_argument("moments need at least 2 observations");
    const double mean = k.sum(running_sum.data(), n) * scale / static_cast<double>(n);
    const double ss = k.sum_sq_dev(running_sum.data(), scale, mean, n);
    return {mean, ss / static_cast<double>(n - 1)};
}

PortfolioMoments sample_moments(std::span<const double> series) { return scaled_moments(series, 1.0); }

ReferenceSeries::ReferenceSeries(std::span<const double> running_sum, double scale, const kernels::KernelTable& k)
    : moments_(scaled_moments(running_sum, scale, k)), deviations_(running_sum.size()) {
    for (std::size_t t = 0; t < running_sum.size(); ++t) deviations_[t] = scale * running_sum[t] - moments_.mean;
    const auto self = k.pair_sums(running_sum.data(), scale, moments_.mean, deviations_.data(), running_sum.size());
    sum_e3_ = self.ddd;
    sum_e4_ = self.dddd;
}

PairMoments pair_moments(std::span<const double> running_sum, double scale, const PortfolioMoments& candidate,
                         const ReferenceSeries& reference, const kernels::KernelTable& k) {
    const std::size_t n = running_sum.size();
    if (n != reference.deviations().size()) throw std::invalid_argument("pair series length mismatch");
    const auto ps = k.pair_sums(running_sum.data(), scale, candidate.mean, reference.deviations().data(), n);
    const auto t = static_cast<double>(n);
    PairMoments pm;
    pm.s = candidate;
    pm.s2 = reference.moments();
    pm.cov = ps.de / (t - 1.0);
    pm.skew_s = ps.ddd / t;
    pm.skew_s2 = reference.sum_e3() / t;
    pm.coskew_s_s2 = ps.dee / t;
    pm.coskew_s2_s = ps.dde / t;
    pm.kurt_s = ps.dddd / t;
    pm.kurt_s2 = reference.sum_e4() / t;
    pm.cokurt = ps.ddee / t;
    pm.periods = n;
    return pm;
}

PairMoments pair_moments(std::span<const double> series_s, std::span<const double> series_s2) {
    if (series_s.size() != series_s2.size()) throw std::invalid_argument("pair series length mismatch");
    const ReferenceSeries reference(series_s2);
    const auto candidate = sample_moments(series_s);
    return pair_moments(series_s, 1.0, candidate, reference);
}

CovMatrix4 vhat_iid(const PairMoments& pm) {
    CovMatrix4 v;
    const double vs = pm.s.variance;
    const double vr = pm.s2.variance;
    v(0, 0) = vs;
    v(0, 1) = v(1, 0) = pm.skew_s;
    v(1, 1) = pm.kurt_s - vs * vs;
    v(2, 2) = vr;
    v(2, 3) = v(3, 2) = pm.skew_s2;
    v(3, 3) = pm.kurt_s2 - vr * vr;
    v(0, 2) = v(2, 0) = pm.cov;
    v(0, 3) = v(3, 0) = pm.coskew_s_s2;
    v(1, 2) = v(2, 1) = pm.coskew_s2_s;
    // Cov(d^2, e^2) = E[d^2 e^2] - E[d^2] E[e^2]
    v(1, 3) = v(3, 1) = pm.cokurt - vs * vr;
    return v;
}

CovMatrix4 vhat_gaussian(const PairMoments& pm) {
    CovMatrix4 v;
    const double vs = pm.s.variance;
    const double vr = pm.s2.variance;
    v(0, 0) = vs;
    v(1, 1) = 2.0 * vs * vs;
    v(2, 2) = vr;
    v(3, 3) = 2.0 * vr * vr;
    v(0, 2) = v(2, 0) = pm.cov;
    v(1, 3) = v(3, 1) = 2.0 * pm.cov * pm.cov;
    return v;
}

CovMatrix4 vhat(const PairMoments& pm, CovMode mode) {
    return mode == CovMode::Iid ? vhat_iid(pm) : vhat_gaussian(pm);
}

}  // namespace scs
