#include "scs/loss.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "scs/normal.hpp"

namespace scs {

namespace {

std::map<std::string, double> parse_params(const std::string& text) {
    std::map<std::string, double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("loss parameter '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size())
            throw std::invalid_argument("loss parameter '" + key + "' has non-numeric value '" + value + "'");
        out[key] = v;
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer the shortest spelling that still round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        char tmp[64];
        std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
        if (std::strtod(tmp, nullptr) == v) return tmp;
    }
    return buf;
}

double sigma_of(double var) { return std::sqrt(var); }

}  // namespace

LossSpec::LossSpec(Variant v) : v_(v) {
    if (const auto* mv = std::get_if<MeanVariance>(&v_)) {
        if (!(mv->gamma > 0.0) || !(mv->scale > 0.0))
            throw std::invalid_argument("mean-variance loss needs gamma > 0 and scale > 0");
    } else if (const auto* es = std::get_if<ExpectedShortfall>(&v_)) {
        if (!(es->level > 0.0 && es->level < 1.0))
            throw std::invalid_argument("expected shortfall level must lie in (0, 1)");
        es_multiplier_ = normal_pdf(normal_quantile(es->level)) / es->level;
    }
}

LossSpec LossSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const auto params = colon == std::string::npos ? std::map<std::string, double>{} : parse_params(text.substr(colon + 1));
    auto take = [&](const std::string& key, double fallback, std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : params) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) throw std::invalid_argument("unknown parameter '" + k + "' for loss '" + kind + "'");
        }
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (kind == "mv") {
        return LossSpec(MeanVariance{take("gamma", 0.5, {"gamma", "scale"}), take("scale", 1.0, {"gamma", "scale"})});
    }
    if (kind == "sharpe") {
        if (!params.empty()) throw std::invalid_argument("sharpe loss takes no parameters");
        return LossSpec(Sharpe{});
    }
    if (kind == "es") return LossSpec(ExpectedShortfall{take("level", 0.1, {"level"})});
    throw std::invalid_argument("unknown loss '" + text + "' (expected mv, sharpe or es)");
}

std::string LossSpec::to_string() const {
    return std::visit(
        [](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MeanVariance>) {
                std::string s = "mv:gamma=" + format_number(l.gamma);
                if (l.scale != 1.0) s += ",scale=" + format_number(l.scale);
                return s;
            } else if constexpr (std::is_same_v<T, Sharpe>) {
                return "sharpe";
            } else {
                return "es:level=" + format_number(l.level);
            }
        },
        v_);
}

bool loss_defined(const LossSpec& spec, double var) noexcept {
    return spec.needs_positive_variance() ? var > 0.0 : var >= 0.0;
}

double loss_value(const LossSpec& spec, double mu, double var) {
    if (!loss_defined(spec, var)) throw std::domain_error("loss undefined for variance " + std::to_string(var));
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MeanVariance>) {
                return l.scale * var - l.gamma * mu;
            } else if constexpr (std::is_same_v<T, Sharpe>) {
                return -mu / sigma_of(var);
            } else {
                return -mu + sigma_of(var) * spec.es_multiplier();
            }
        },
        spec.variant());
}

LossGradient loss_gradient(const LossSpec& spec, double mu, double var) {
    if (!loss_defined(spec, var)) throw std::domain_error("loss undefined for variance " + std::to_string(var));
    return std::visit(
        [&](const auto& l) -> LossGradient {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MeanVariance>) {
                return {-l.gamma, l.scale};
            } else if constexpr (std::is_same_v<T, Sharpe>) {
                const double sd = sigma_of(var);
                return {-1.0 / sd, mu / (2.0 * sd * var)};
            } else {
                return {-1.0, spec.es_multiplier() / (2.0 * sigma_of(var))};
            }
        },
        spec.variant());
}

std::array<double, 4> differential_gradient(const LossSpec& spec, const PairMoments& pm) {
    const auto gs = loss_gradient(spec, pm.s.mean, pm.s.variance);
    const auto gr = loss_gradient(spec, pm.s2.mean, pm.s2.variance);
    return {gs.d_mu, gs.d_var, -gr.d_mu, -gr.d_var};
}

namespace {

ScreenStatistic finish(double delta, double tau2, std::size_t periods, const ScreenThresholds& th) {
    ScreenStatistic st;
    st.delta_hat = delta;
    st.tau2_hat = tau2;
    if (!(tau2 >= th.tau2_floor)) {
        st.degenerate = true;
        st.z = delta > th.delta_floor ? std::numeric_limits<double>::infinity() : 0.0;
        return st;
    }
    st.z = delta / std::sqrt(tau2 / static_cast<double>(periods));
    return st;
}

}  // namespace

ScreenStatistic screen_statistic(const LossSpec& spec, const PairMoments& pm, CovMode mode,
                                 const ScreenThresholds& thresholds) {
    const double delta = loss_value(spec, pm.s.mean, pm.s.variance) - loss_value(spec, pm.s2.mean, pm.s2.variance);
    const double tau2 = vhat(pm, mode).quadratic_form(differential_gradient(spec, pm));
    return finish(delta, tau2, pm.periods, thresholds);
}

ScreenStatistic z_closed_mv(double gamma, const PairMoments& pm, const ScreenThresholds& thresholds) {
    const double vs = pm.s.variance;
    const double vr = pm.s2.variance;
    const double delta = gamma * (pm.s2.mean - pm.s.mean) + vs - vr;
    const double tau2 = gamma * gamma * (vs - 2.0 * pm.cov + vr) + 2.0 * (vs * vs - 2.0 * pm.cov * pm.cov + vr * vr);
    return finish(delta, tau2, pm.periods, thresholds);
}

ScreenStatistic z_closed_sharpe(const PairMoments& pm, const ScreenThresholds& thresholds) {
    if (!(pm.s.variance > 0.0) || !(pm.s2.variance > 0.0))
        throw std::domain_error("Sharpe statistic needs positive variances");
    const double sd_s = std::sqrt(pm.s.variance);
    const double sd_r = std::sqrt(pm.s2.variance);
    const double r_s = pm.s.mean / sd_s;
    const double r_r = pm.s2.mean / sd_r;
    const double rho = pm.cov / (sd_s * sd_r);
    const double tau2 = 2.0 * (1.0 - rho) + 0.5 * (r_s * r_s + r_r * r_r) - rho * rho * r_s * r_r;
    // Classical numerator is r_s - r_ref; the loss -mu/sigma flips its sign.
    return finish(r_r - r_s, tau2, pm.periods, thresholds);
}

}  // namespace scs
