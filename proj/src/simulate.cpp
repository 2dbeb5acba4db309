#include "scs/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "scs/metrics.hpp"
#include "scs/normal.hpp"
#include "scs/rng.hpp"
#include "scs/scs_io.hpp"
#include "scs/screening.hpp"

namespace scs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> default_labels(int n) {
    std::vector<std::string> out;
    for (int j = 0; j < n; ++j) out.push_back("A" + std::to_string(j + 1));
    return out;
}

Eigen::VectorXd equal_weights(const SelectionMask& mask) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(mask.universe());
    const double share = 1.0 / static_cast<double>(weight(mask));
    for (int j = 0; j < mask.universe(); ++j)
        if (mask.contains(j)) w(j) = share;
    return w;
}

Eigen::VectorXd mean_vector(const Eigen::VectorXd& sigma_diag, const MeanRule& rule, std::mt19937_64& eng) {
    const double sd = rule.noise_is_variance ? std::sqrt(rule.noise_param) : rule.noise_param;
    Eigen::VectorXd eta(sigma_diag.size());
    std::normal_distribution<double> noise(0.0, sd > 0.0 ? sd : 1.0);
    for (Eigen::Index j = 0; j < sigma_diag.size(); ++j) {
        const double eps = sd > 0.0 ? noise(eng) : 0.0;
        eta(j) = rule.base + rule.var_coef * sigma_diag(j) + eps;
    }
    return eta;
}

PairMoments population_pair(const PopulationModel& model, const SelectionMask& s, const SelectionMask& ref) {
    const Eigen::VectorXd ws = equal_weights(s);
    const Eigen::VectorXd wr = equal_weights(ref);
    PairMoments pm;
    pm.s = {ws.dot(model.mean()), ws.dot(model.covariance() * ws)};
    pm.s2 = {wr.dot(model.mean()), wr.dot(model.covariance() * wr)};
    pm.cov = ws.dot(model.covariance() * wr);
    pm.periods = 1;
    return pm;
}

template <class Fn>
void parallel_for(std::uint64_t count, int workers, Fn&& fn) {
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), count));
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::uint64_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

PopulationModel::PopulationModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
    const auto n = mean_.size();
    if (n < 1) throw std::invalid_argument("population model needs at least one asset");
    if (cov_.rows() != n || cov_.cols() != n) throw std::invalid_argument("covariance shape does not match the mean");
    if (!mean_.allFinite() || !cov_.allFinite()) throw std::invalid_argument("population model has non-finite entries");
    const double mag = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * mag)
        throw std::invalid_argument("covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success) throw std::domain_error("covariance is not positive definite");
    factor_ = llt.matrixL();
    if ((factor_ * factor_.transpose() - cov_).cwiseAbs().maxCoeff() > 1e-10 * mag)
        throw std::domain_error("Cholesky factor does not reproduce the covariance");
}

void GeneratorSpec::validate() const {
    if (n_assets < 1 || n_assets > kMaskBitLimit) throw std::invalid_argument("n_assets out of range");
    if (!(var_low > 0.0 && var_low <= var_high)) throw std::invalid_argument("variance range must satisfy 0 < low <= high");
    if (!(mean_rule.noise_param >= 0.0)) throw std::invalid_argument("mean noise parameter must be nonnegative");
    if (const auto* m1 = std::get_if<Model1>(&model)) {
        if (!(m1->v > 0.0)) throw std::invalid_argument("Model 1 needs v > 0");
    } else {
        gen_model2(n_assets, std::get<Model2>(model).rho);
    }
}

Eigen::MatrixXd gen_model2(int n, double rho) {
    if (n < 1) throw std::invalid_argument("gen_model2 needs n >= 1");
    const double lo = n > 1 ? -1.0 / static_cast<double>(n - 1) : -1.0;
    if (!(rho > lo && rho < 1.0))
        throw std::invalid_argument("rho = " + format_real(rho) + " does not give a positive definite exchangeable matrix");
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, n, rho);
    r.diagonal().setOnes();
    return r;
}

Eigen::MatrixXd scale_free_tree(int n, std::mt19937_64& eng) {
    if (n < 1) throw std::invalid_argument("scale_free_tree needs n >= 1");
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    if (n == 1) return adj;
    std::vector<std::uint64_t> degree(static_cast<std::size_t>(n), 0);
    adj(0, 1) = adj(1, 0) = 1.0;
    degree[0] = degree[1] = 1;
    std::uint64_t total = 2;
    for (int node = 2; node < n; ++node) {
        std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
        std::uint64_t ticket = pick(eng);
        int target = 0;
        while (ticket >= degree[static_cast<std::size_t>(target)]) ticket -= degree[static_cast<std::size_t>(target++)];
        adj(node, target) = adj(target, node) = 1.0;
        ++degree[static_cast<std::size_t>(target)];
        degree[static_cast<std::size_t>(node)] = 1;
        total += 2;
    }
    return adj;
}

Eigen::MatrixXd correlation_from_graph(const Eigen::MatrixXd& adjacency, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("graph strength v must be positive");
    const auto n = adjacency.rows();
    Eigen::MatrixXd omega = v * adjacency;
    omega.diagonal().setZero();
    const double e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(omega, Eigen::EigenvaluesOnly).eigenvalues()(0);
    omega.diagonal().setConstant(std::abs(e) + 0.2);
    Eigen::MatrixXd sigma = omega.llt().solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
    r = (0.5 * (r + r.transpose())).eval();
    r.diagonal().setOnes();
    return r;
}

Eigen::MatrixXd gen_model1(int n, double v, std::uint64_t seed) {
    auto eng = rng::engine(seed, 0, rng::Purpose::Graph);
    return correlation_from_graph(scale_free_tree(n, eng), v);
}

Eigen::VectorXd gen_mean_vector(const Eigen::VectorXd& sigma_diag, const MeanRule& rule, std::uint64_t seed) {
    auto eng = rng::engine(seed, 0, rng::Purpose::MeanNoise);
    return mean_vector(sigma_diag, rule, eng);
}

PopulationModel draw_population(const GeneratorSpec& spec, std::uint64_t run) {
    spec.validate();
    const std::uint64_t key_run = spec.redraw_per_run ? run : 0;
    const int n = spec.n_assets;

    auto var_eng = rng::engine(spec.seed, key_run, rng::Purpose::Variances);
    std::uniform_real_distribution<double> var_dist(spec.var_low, spec.var_high);
    Eigen::VectorXd diag(n);
    for (int j = 0; j < n; ++j) diag(j) = spec.var_low == spec.var_high ? spec.var_low : var_dist(var_eng);

    Eigen::MatrixXd r;
    if (const auto* m1 = std::get_if<Model1>(&spec.model)) {
        auto graph_eng = rng::engine(spec.seed, key_run, rng::Purpose::Graph);
        r = correlation_from_graph(scale_free_tree(n, graph_eng), m1->v);
    } else {
        r = gen_model2(n, std::get<Model2>(spec.model).rho);
    }
    const Eigen::VectorXd sd = diag.cwiseSqrt();
    Eigen::MatrixXd sigma = sd.asDiagonal() * r * sd.asDiagonal();
    sigma = 0.5 * (sigma + sigma.transpose());

    auto mean_eng = rng::engine(spec.seed, key_run, rng::Purpose::MeanNoise);
    return PopulationModel(mean_vector(diag, spec.mean_rule, mean_eng), std::move(sigma));
}

ReturnPanel sample_panel(const PopulationModel& model, int periods, std::uint64_t seed, std::uint64_t run) {
    if (periods < 2) throw std::invalid_argument("sample_panel needs at least 2 periods");
    const int n = model.assets();
    const auto t_count = static_cast<std::size_t>(periods);
    auto eng = rng::engine(seed, run, rng::Purpose::Panel, static_cast<std::uint64_t>(periods));
    std::normal_distribution<double> std_normal;
    std::vector<double> data(t_count * static_cast<std::size_t>(n));
    Eigen::VectorXd z(n);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (int j = 0; j < n; ++j) z(j) = std_normal(eng);
        const Eigen::VectorXd x = model.mean() + model.factor().triangularView<Eigen::Lower>() * z;
        for (int j = 0; j < n; ++j) data[static_cast<std::size_t>(j) * t_count + t] = x(j);
    }
    return ReturnPanel(std::move(data), t_count, default_labels(n), std::max(n, kDefaultMaxAssets));
}

PortfolioMoments population_moments(const PopulationModel& model, const SelectionMask& mask) {
    if (mask.universe() != model.assets()) throw std::invalid_argument("mask universe does not match the model");
    const Eigen::VectorXd w = equal_weights(mask);
    return {w.dot(model.mean()), w.dot(model.covariance() * w)};
}

TrueOptimum true_optimum(const PopulationModel& model, const LossSpec& spec, double tie_tolerance) {
    const int n = model.assets();
    if (n > kDefaultMaxAssets) throw std::invalid_argument("true_optimum: universe too large for exhaustive search");
    const std::uint64_t total = GrayEnumerator::total(n);
    std::vector<double> losses(total + 1, kInf);
    double best = kInf;
    for (std::uint64_t bits = 1; bits <= total; ++bits) {
        const auto m = population_moments(model, SelectionMask(bits, n));
        if (!loss_defined(spec, m.variance)) continue;
        losses[bits] = loss_value(spec, m.mean, m.variance);
        best = std::min(best, losses[bits]);
    }
    if (!std::isfinite(best)) throw std::domain_error("population loss is undefined for every selection");
    TrueOptimum out{{}, best};
    const double slack = tie_tolerance * std::max(1.0, std::abs(best));
    for (std::uint64_t bits = 1; bits <= total; ++bits)
        if (losses[bits] <= best + slack) out.masks.emplace_back(bits, n);
    return out;
}

double population_gamma(const PopulationModel& model, const LossSpec& spec, const SelectionMask& mask,
                        const SelectionMask& reference) {
    if (mask == reference) return 0.0;
    const auto pm = population_pair(model, mask, reference);
    const double delta = loss_value(spec, pm.s.mean, pm.s.variance) - loss_value(spec, pm.s2.mean, pm.s2.variance);
    const double tau2 = vhat_gaussian(pm).quadratic_form(differential_gradient(spec, pm));
    if (!(tau2 > 0.0)) return delta > 0.0 ? kInf : 0.0;
    return delta / std::sqrt(tau2);
}

TheoreticalSize theoretical_expected_size(const PopulationModel& model, const LossSpec& spec, double alpha,
                                          int periods) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (periods < 0) throw std::invalid_argument("periods must be nonnegative");
    const int n = model.assets();
    const auto opt = true_optimum(model, spec);
    const double q = normal_quantile(1.0 - alpha);
    const double root_t = std::sqrt(static_cast<double>(periods));
    const auto s0 = static_cast<double>(opt.masks.size());

    double sum = 0.0;
    double gamma_min = kInf;
    std::size_t next_opt = 0;
    for (std::uint64_t bits = 1; bits <= GrayEnumerator::total(n); ++bits) {
        if (next_opt < opt.masks.size() && opt.masks[next_opt].bits() == bits) {
            ++next_opt;
            continue;
        }
        const double g = population_gamma(model, spec, SelectionMask(bits, n), opt.masks.front());
        gamma_min = std::min(gamma_min, g);
        sum += normal_cdf(q - root_t * g);
    }
    TheoreticalSize out;
    out.optimal_count = opt.masks.size();
    out.gamma_min = gamma_min;
    out.lower_bound = s0 * (1.0 - alpha);
    out.expected = out.lower_bound + sum;
    const double others = std::ldexp(1.0, n) - s0 - 1.0;
    out.upper_bound = out.lower_bound + (others > 0.0 ? others * normal_cdf(q - root_t * gamma_min) : 0.0);
    return out;
}

void McConfig::validate() const {
    if (!fixed_model) generator.validate();
    if (losses.empty() || alphas.empty() || periods.empty()) throw std::invalid_argument("run_mc needs losses, alphas and T values");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha values must lie in (0, 1)");
    for (int t : periods)
        if (t < 2) throw std::invalid_argument("T values must be at least 2");
    if (runs < 2) throw std::invalid_argument("run_mc needs at least 2 runs");
}

const McCell& McEstimates::cell(const std::string& loss, int periods, double alpha) const {
    for (const auto& c : cells)
        if (c.loss == loss && c.periods == periods && c.alpha == alpha) return c;
    throw std::out_of_range("no Monte Carlo cell for " + loss + ", T=" + std::to_string(periods));
}

McEstimates run_mc(const McConfig& config) {
    config.validate();
    const std::size_t n_loss = config.losses.size();
    const std::size_t n_t = config.periods.size();
    const std::size_t n_alpha = config.alphas.size();
    const std::size_t per_run = n_loss * n_t * n_alpha;
    const auto runs = static_cast<std::uint64_t>(config.runs);
    const double widest = *std::min_element(config.alphas.begin(), config.alphas.end());

    std::vector<McRunRecord> records(runs * per_run);
    parallel_for(runs, config.worker_count, [&](std::uint64_t run) {
        const PopulationModel model = config.fixed_model ? *config.fixed_model : draw_population(config.generator, run);
        std::vector<TrueOptimum> optima;
        for (const auto& spec : config.losses) optima.push_back(true_optimum(model, spec));
        for (std::size_t ti = 0; ti < n_t; ++ti) {
            const int t = config.periods[ti];
            const ReturnPanel panel = sample_panel(model, t, config.generator.seed, run);
            for (std::size_t li = 0; li < n_loss; ++li) {
                const auto& spec = config.losses[li];
                const auto& opt = optima[li];
                auto* out = &records[run * per_run + (li * n_t + ti) * n_alpha];
                for (std::size_t ai = 0; ai < n_alpha; ++ai)
                    out[ai] = {run, t, spec.to_string(), config.alphas[ai], 0, 0, false, opt.masks.size(), false, ""};
                try {
                    ScreenConfig sc;
                    sc.alpha = widest;
                    sc.cov_mode = config.cov_mode;
                    sc.record_cap = std::numeric_limits<std::uint64_t>::max();
                    const ScsResult base = build_scs(panel, spec, sc);
                    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
                        const ScsResult r = base.at_alpha(config.alphas[ai]);
                        const auto included = r.included();
                        bool covered = true;
                        for (const auto& m : opt.masks)
                            covered = covered && std::binary_search(included.begin(), included.end(), m);
                        out[ai].scs_size = included.size();
                        out[ai].lower_size = lower_boundary(included).size();
                        out[ai].covered = covered;
                    }
                } catch (const std::domain_error& e) {
                    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
                        out[ai].excluded = true;
                        out[ai].note = e.what();
                    }
                }
            }
        }
    });

    McEstimates est;
    for (std::size_t li = 0; li < n_loss; ++li)
        for (std::size_t ti = 0; ti < n_t; ++ti)
            for (std::size_t ai = 0; ai < n_alpha; ++ai) {
                McCell c{config.losses[li].to_string(), config.periods[ti], config.alphas[ai], 0, 0, 0, 0, 0, 0, 0, 0};
                double sk = 0, skk = 0, sl = 0, sll = 0, sc = 0;
                for (std::uint64_t run = 0; run < runs; ++run) {
                    const auto& r = records[run * per_run + (li * n_t + ti) * n_alpha + ai];
                    if (r.excluded) {
                        ++c.runs_excluded;
                        continue;
                    }
                    ++c.runs_used;
                    const auto k = static_cast<double>(r.scs_size);
                    const auto l = static_cast<double>(r.lower_size);
                    sk += k;
                    skk += k * k;
                    sl += l;
                    sll += l * l;
                    sc += r.covered ? 1.0 : 0.0;
                }
                const double m = c.runs_used;
                if (m > 0) {
                    c.kappa = sk / m;
                    c.kappa_lower = sl / m;
                    c.coverage = sc / m;
                    c.coverage_se = std::sqrt(c.coverage * (1.0 - c.coverage) / m);
                }
                if (m > 1) {
                    c.kappa_se = std::sqrt(std::max(0.0, (skk - m * c.kappa * c.kappa) / (m - 1)) / m);
                    c.kappa_lower_se = std::sqrt(std::max(0.0, (sll - m * c.kappa_lower * c.kappa_lower) / (m - 1)) / m);
                }
                est.cells.push_back(c);
            }
    est.records = std::move(records);
    return est;
}

std::string model_name(const ModelKind& model) {
    if (const auto* m1 = std::get_if<Model1>(&model)) return "model1:v=" + format_real(m1->v);
    return "model2:rho=" + format_real(std::get<Model2>(model).rho);
}

void write_mc_table_csv(const McEstimates& est, const McConfig& config, std::ostream& out) {
    out << "loss,T,runs,excluded";
    for (double a : config.alphas) {
        const std::string conf = format_real(100.0 * (1.0 - a));
        for (const char* col : {"kappa", "kappa_se", "p_pct", "p_se_pct", "kappa_lower", "kappa_lower_se"})
            out << ',' << col << '_' << conf;
    }
    out << "\r\n";
    for (const auto& spec : config.losses)
        for (int t : config.periods) {
            const std::string loss = spec.to_string();
            const auto& first = est.cell(loss, t, config.alphas.front());
            out << csv_field(loss) << ',' << t << ',' << first.runs_used << ',' << first.runs_excluded;
            for (double a : config.alphas) {
                const auto& c = est.cell(loss, t, a);
                out << ',' << format_real(c.kappa) << ',' << format_real(c.kappa_se) << ','
                    << format_real(100.0 * c.coverage) << ',' << format_real(100.0 * c.coverage_se) << ','
                    << format_real(c.kappa_lower) << ',' << format_real(c.kappa_lower_se);
            }
            out << "\r\n";
        }
}

std::string mc_runs_json(const McEstimates& est, const McConfig& config) {
    using nlohmann::json;
    json j;
    j["format"] = "scs-mc-runs";
    j["version"] = 1;
    j["model"] = config.fixed_model ? std::string("fixed") : model_name(config.generator.model);
    j["n_assets"] = config.fixed_model ? config.fixed_model->assets() : config.generator.n_assets;
    j["seed"] = config.generator.seed;
    j["runs"] = config.runs;
    json recs = json::array();
    for (const auto& r : est.records) {
        json e = {{"run", r.run},         {"T", r.periods},         {"loss", r.loss},
                  {"alpha", r.alpha},     {"scs_size", r.scs_size}, {"lower_size", r.lower_size},
                  {"covered", r.covered}, {"optimal_count", r.optimal_count}, {"excluded", r.excluded}};
        if (!r.note.empty()) e["note"] = r.note;
        recs.push_back(std::move(e));
    }
    j["records"] = std::move(recs);
    return j.dump(1);
}

}  // namespace scs
