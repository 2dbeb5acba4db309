#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scs/loss.hpp"
#include "scs/moments.hpp"
#include "scs/panel.hpp"
#include "scs/selection.hpp"

namespace scs {

using MaskFilter = std::function<bool(const SelectionMask&)>;

struct ScreenConfig {
    double alpha = 0.05;
    CovMode cov_mode = CovMode::Gaussian;
    MaskFilter mask_filter;  // empty: every nonzero mask is admissible
    ScreenThresholds thresholds;
    int worker_count = 1;  // 0 selects the hardware concurrency
    /// Every record is stored when the screened universe has at most this many
    /// masks; above it only included records are kept, plus z quantiles.
    std::uint64_t record_cap = std::uint64_t{1} << 20;

    void validate() const;
};

enum class RecordStatus { Ok, Degenerate, LossUndefined };

const char* to_string(RecordStatus status);
RecordStatus record_status_from_string(const std::string& text);

struct ScsRecord {
    SelectionMask mask;
    double loss;  // NaN when the loss is undefined for this mask
    double z;
    bool included;
    bool degenerate;
    RecordStatus status;
};

struct ScsResult {
    SelectionMask reference{1, 1};
    double reference_loss = 0.0;
    double alpha = 0.05;
    double quantile = 0.0;  // q_{1-alpha}
    std::vector<ScsRecord> records;  // ascending mask integer
    std::uint64_t included_count = 0;
    std::uint64_t universe_size = 0;
    std::uint64_t degenerate_count = 0;
    std::uint64_t undefined_count = 0;
    bool records_complete = true;
    std::vector<std::pair<double, double>> z_quantiles;  // (probability, z)

    std::vector<std::string> asset_labels;
    std::string loss;
    CovMode cov_mode = CovMode::Gaussian;

    int n_assets() const noexcept { return reference.universe(); }
    std::vector<SelectionMask> included() const;

    /// Re-thresholds the stored z values at another level. A smaller alpha
    /// (a larger set) needs complete records.
    ScsResult at_alpha(double alpha) const;
};

struct EmpiricalOptimum {
    SelectionMask mask;
    double loss;
    std::uint64_t universe_size;
    std::uint64_t skipped;  // admissible masks whose loss is undefined
};

struct PlausibilityVerdict {
    double z;
    double quantile;
    bool included;
    double loss;
    double reference_loss;
    SelectionMask reference;
};

/// Screens a panel against its empirical optimum. Construction runs the first
/// pass (argmin over the admissible masks) and caches the reference series.
class Screener {
public:
    Screener(const ReturnPanel& panel, LossSpec spec, ScreenConfig config);

    const EmpiricalOptimum& optimum() const noexcept { return optimum_; }
    ScsResult build() const;
    PlausibilityVerdict check(const SelectionMask& candidate) const;

private:
    const ReturnPanel& panel_;
    LossSpec spec_;
    ScreenConfig config_;
    EmpiricalOptimum optimum_;
    // Near-tied masks from the first pass, re-evaluated from scratch.
    std::unordered_map<std::uint64_t, double> recomputed_;
    std::vector<double> reference_sum_;
    ReferenceSeries reference_;
};

EmpiricalOptimum empirical_optimum(const ReturnPanel& panel, const LossSpec& spec, const MaskFilter& filter = {},
                                   int worker_count = 1);

ScsResult build_scs(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config);

PlausibilityVerdict plausibility_check(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config,
                                       const SelectionMask& candidate);

/// Masks with at most `k` assets.
MaskFilter max_assets_filter(int k);

}  // namespace scs
