#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scs/loss.hpp"
#include "scs/moments.hpp"
#include "scs/panel.hpp"
#include "scs/selection.hpp"

namespace scs {

/// Multivariate normal return model with a cached Cholesky factor.
class PopulationModel {
public:
    PopulationModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

    int assets() const noexcept { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }  // lower triangular

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd factor_;
};

/// Scale-free precision graph with partial-correlation strength v.
struct Model1 {
    double v = 1.0;
};

/// Exchangeable correlation rho.
struct Model2 {
    double rho = 0.75;
};

using ModelKind = std::variant<Model1, Model2>;

/// eta_j = base + var_coef * Sigma_jj + eps_j, eps_j ~ N(0, noise_param) read as a
/// variance or, with noise_is_variance = false, as a standard deviation.
struct MeanRule {
    double base = -0.002;
    double var_coef = 0.1;
    double noise_param = 0.02;
    bool noise_is_variance = true;
};

struct GeneratorSpec {
    ModelKind model = Model2{};
    int n_assets = 10;
    MeanRule mean_rule;
    std::uint64_t seed = 42;
    double var_low = 0.01;
    double var_high = 0.03;
    /// Redraw variances, mean noise and (Model 1) the graph for every run.
    /// When false every run shares the run-0 population.
    bool redraw_per_run = true;

    void validate() const;
};

Eigen::MatrixXd gen_model2(int n_assets, double rho);

/// Preferential-attachment tree: starts from the edge (0, 1) and attaches each
/// new node to one existing node with probability proportional to its degree.
Eigen::MatrixXd scale_free_tree(int n_assets, std::mt19937_64& engine);

/// Correlation matrix from an adjacency matrix: Omega = v * Theta + (|e| + 0.2) I
/// with e the smallest eigenvalue of v * Theta, inverted and rescaled to unit diagonal.
Eigen::MatrixXd correlation_from_graph(const Eigen::MatrixXd& adjacency, double v);

Eigen::MatrixXd gen_model1(int n_assets, double v, std::uint64_t seed);

Eigen::VectorXd gen_mean_vector(const Eigen::VectorXd& sigma_diag, const MeanRule& rule, std::uint64_t seed);

/// Population model of one Monte Carlo run.
PopulationModel draw_population(const GeneratorSpec& spec, std::uint64_t run);

/// T i.i.d. draws mean + L z; the substream is keyed by (seed, run, T).
ReturnPanel sample_panel(const PopulationModel& model, int periods, std::uint64_t seed, std::uint64_t run = 0);

PortfolioMoments population_moments(const PopulationModel& model, const SelectionMask& mask);

struct TrueOptimum {
    std::vector<SelectionMask> masks;  // every minimizer within the tie tolerance, ascending
    double loss;
};

TrueOptimum true_optimum(const PopulationModel& model, const LossSpec& spec, double tie_tolerance = 1e-12);

/// Standardized population differential delta(s) / tau(s) against `reference`
/// using exact Gaussian moments. Zero when both delta and tau vanish.
double population_gamma(const PopulationModel& model, const LossSpec& spec, const SelectionMask& mask,
                        const SelectionMask& reference);

struct TheoreticalSize {
    double expected;
    double lower_bound;
    double upper_bound;
    double gamma_min;  // +inf when every selection is optimal
    std::uint64_t optimal_count;
};

TheoreticalSize theoretical_expected_size(const PopulationModel& model, const LossSpec& spec, double alpha,
                                          int periods);

struct McConfig {
    GeneratorSpec generator;
    std::vector<LossSpec> losses;
    std::vector<double> alphas;
    std::vector<int> periods;
    int runs = 300;
    CovMode cov_mode = CovMode::Gaussian;
    int worker_count = 1;  // 0 selects the hardware concurrency
    /// Replaces the generator's population for every run.
    std::optional<PopulationModel> fixed_model;

    void validate() const;
};

struct McRunRecord {
    std::uint64_t run;
    int periods;
    std::string loss;
    double alpha;
    std::uint64_t scs_size;
    std::uint64_t lower_size;
    bool covered;
    std::uint64_t optimal_count;
    bool excluded;  // the run failed numerically and is left out of the averages
    std::string note;
};

struct McCell {
    std::string loss;
    int periods;
    double alpha;
    int runs_used;
    int runs_excluded;
    double kappa;
    double kappa_se;
    double coverage;
    double coverage_se;
    double kappa_lower;
    double kappa_lower_se;
};

struct McEstimates {
    std::vector<McCell> cells;        // loss-major, then periods, then alpha in the given orders
    std::vector<McRunRecord> records;  // per run and cell
    const McCell& cell(const std::string& loss, int periods, double alpha) const;
};

McEstimates run_mc(const McConfig& config);

/// Rows loss x T; per alpha: kappa, its SE, coverage in percent, its SE, lower-boundary size, its SE.
void write_mc_table_csv(const McEstimates& estimates, const McConfig& config, std::ostream& out);
std::string mc_runs_json(const McEstimates& estimates, const McConfig& config);

std::string model_name(const ModelKind& model);

}  // namespace scs
