#pragma once

#include <array>
#include <string>
#include <variant>

#include "scs/moments.hpp"

namespace scs {

/// scale * var - gamma * mu
struct MeanVariance {
    double gamma = 0.5;
    double scale = 1.0;
};

/// -mu / sigma
struct Sharpe {};

/// Gaussian expected shortfall at `level`: -mu + sigma * phi(z_level) / level
struct ExpectedShortfall {
    double level = 0.1;
};

class LossSpec {
public:
    using Variant = std::variant<MeanVariance, Sharpe, ExpectedShortfall>;

    LossSpec(Variant v);  // NOLINT(google-explicit-constructor)
    LossSpec(MeanVariance m) : LossSpec(Variant(m)) {}       // NOLINT(google-explicit-constructor)
    LossSpec(Sharpe s) : LossSpec(Variant(s)) {}             // NOLINT(google-explicit-constructor)
    LossSpec(ExpectedShortfall e) : LossSpec(Variant(e)) {}  // NOLINT(google-explicit-constructor)

    /// Accepts "mv:gamma=0.5", "mv:gamma=1,scale=0.5", "sharpe", "es:level=0.1".
    static LossSpec parse(const std::string& text);
    std::string to_string() const;

    const Variant& variant() const noexcept { return v_; }
    /// Whether the loss needs var > 0 (it takes a square root).
    bool needs_positive_variance() const noexcept { return !std::holds_alternative<MeanVariance>(v_); }
    /// phi(z_level) / level for ExpectedShortfall, 0 otherwise.
    double es_multiplier() const noexcept { return es_multiplier_; }

private:
    Variant v_;
    double es_multiplier_ = 0.0;
};

struct LossGradient {
    double d_mu;
    double d_var;
};

/// Throws std::domain_error when var <= 0 for Sharpe or ExpectedShortfall.
double loss_value(const LossSpec& spec, double mu, double var);
LossGradient loss_gradient(const LossSpec& spec, double mu, double var);

/// Whether (mu, var) lies in the loss's domain.
bool loss_defined(const LossSpec& spec, double var) noexcept;

struct ScreenThresholds {
    double tau2_floor = 1e-12;
    double delta_floor = 1e-12;
};

struct ScreenStatistic {
    double delta_hat = 0.0;
    double tau2_hat = 0.0;
    double z = 0.0;
    bool degenerate = false;
};

/// Gradient of delta(s; s') with respect to (mu_s, var_s, mu_s', var_s').
std::array<double, 4> differential_gradient(const LossSpec& spec, const PairMoments& pm);

/// Studentized loss differential of s against s' (pm.s against pm.s2). Positive z
/// means s is worse than s'. When tau2 falls below the floor the statistic is
/// degenerate: z = +inf if delta exceeds delta_floor, else 0.
ScreenStatistic screen_statistic(const LossSpec& spec, const PairMoments& pm, CovMode mode,
                                 const ScreenThresholds& thresholds = {});

/// Closed-form Gaussian mean-variance statistic (scale 1) with pm.s2 as reference.
ScreenStatistic z_closed_mv(double gamma, const PairMoments& pm, const ScreenThresholds& thresholds = {});

/// Closed-form Gaussian Sharpe statistic with pm.s2 as reference, oriented like
/// screen_statistic (the classical form has the opposite sign).
ScreenStatistic z_closed_sharpe(const PairMoments& pm, const ScreenThresholds& thresholds = {});

}  // namespace scs
