#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scs/screening.hpp"

namespace scs {

using Matrix = std::vector<std::vector<double>>;

struct LossSpread {
    double loss_min;
    double loss_max;
    double spread;
};

struct ScsMetrics {
    double alpha = 0.0;
    std::uint64_t scs_size = 0;
    std::uint64_t universe_size = 0;
    double relative_size = 0.0;
    double rmi = 0.0;  // NaN when the universe has a single mask
    double loss_min = 0.0;
    double loss_max = 0.0;
    double spread = 0.0;
    std::vector<SelectionMask> lower_boundary;
    std::vector<double> inclusion;
    Matrix co_inclusion;
};

/// 1 - ln(scs_size) / ln(universe_size).
double rmi(std::uint64_t scs_size, std::uint64_t universe_size);

LossSpread loss_spread(const ScsResult& scs);

/// Included masks with no strictly smaller included mask, ascending by mask integer.
std::vector<SelectionMask> lower_boundary(const std::vector<SelectionMask>& included);
std::vector<SelectionMask> lower_boundary(const ScsResult& scs);

std::vector<double> inclusion_importance(const std::vector<SelectionMask>& included, int n_assets);
std::vector<double> inclusion_importance(const ScsResult& scs);

/// Jaccard co-occurrence c_ij / (c_i + c_j - c_ij); 1 when the denominator is 0.
Matrix co_inclusion(const std::vector<SelectionMask>& included, int n_assets);
Matrix co_inclusion(const ScsResult& scs);

struct CiiEdge {
    int i;
    int j;
    double weight;
};

/// Edges i < j whose co-inclusion exceeds `threshold`.
std::vector<CiiEdge> cii_graph_export(const Matrix& cii, double threshold);
std::vector<CiiEdge> cii_graph_export(const ScsResult& scs, double threshold);

void write_cii_dot(const std::vector<CiiEdge>& edges, const std::vector<std::string>& labels, double threshold,
                   std::ostream& out);
void write_cii_edges_csv(const std::vector<CiiEdge>& edges, const std::vector<std::string>& labels, std::ostream& out);

ScsMetrics compute_metrics(const ScsResult& scs);

/// Inclusion importance over a grid of alpha values.
struct IiProfile {
    std::vector<double> alphas;               // as given
    std::vector<std::uint64_t> sizes;         // |S_alpha| per grid point
    Matrix inclusion;                         // [grid point][asset]
    std::vector<std::string> labels;
};

/// From stored records: a mask enters at every alpha whose quantile reaches its z.
/// Grid points below scs.alpha need complete records.
IiProfile ii_profile(const ScsResult& scs, const std::vector<double>& alpha_grid);
IiProfile ii_profile(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config,
                     const std::vector<double>& alpha_grid);

/// One row per metrics entry; losses are reported in percent.
void write_metrics_csv(const std::vector<ScsMetrics>& rows, std::ostream& out);
/// Long format: alpha,asset,label,ii.
void write_inclusion_csv(const std::vector<ScsMetrics>& rows, const std::vector<std::string>& labels, std::ostream& out);
/// Square matrix with a label header row and a label first column.
void write_matrix_csv(const Matrix& m, const std::vector<std::string>& labels, std::ostream& out);
void write_ii_profile_csv(const IiProfile& profile, std::ostream& out);

}  // namespace scs
