#include "scs/screening.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "scs/normal.hpp"

namespace scs {

namespace {

// Fixed block length in Gray positions. It does not depend on the worker
// count, so every mask is reached along the same path for any thread setup.
constexpr std::uint64_t kBlockPositions = 4096;

constexpr double kInf = std::numeric_limits<double>::infinity();

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint64_t block_count(int n_assets) {
    const std::uint64_t positions = std::uint64_t{1} << n_assets;  // includes position 0
    return (positions + kBlockPositions - 1) / kBlockPositions;
}

std::pair<std::uint64_t, std::uint64_t> block_range(int n_assets, std::uint64_t block) {
    const std::uint64_t end = std::uint64_t{1} << n_assets;
    const std::uint64_t first = std::max<std::uint64_t>(1, block * kBlockPositions);
    const std::uint64_t last = std::min(end, (block + 1) * kBlockPositions);
    return {first, last};
}

/// Calls fn(block, worker) for every block, spreading blocks over workers.
template <class Fn>
void run_blocks(std::uint64_t n_blocks, int workers, Fn&& fn) {
    workers = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(resolve_workers(workers)), n_blocks));
    if (workers <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) fn(b, 0);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::uint64_t b = next++; b < n_blocks; b = next++) fn(b, w);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n_blocks;
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Walks one block of Gray positions, maintaining the unnormalized running sum.
/// The first mask of the block is summed from scratch.
template <class Visit>
void walk_block(const ReturnPanel& panel, const kernels::KernelTable& k, std::uint64_t first, std::uint64_t last,
                std::vector<double>& sum, Visit&& visit) {
    GrayEnumerator gen(panel.assets(), first, last, panel.max_assets());
    bool started = false;
    int w = 0;
    while (auto step = gen.next()) {
        if (!started) {
            sum = selection_sum(panel, step->mask, k);
            w = weight(step->mask);
            started = true;
        } else {
            running_series_update(sum, panel, step->flipped_asset, step->added, w, k);
            w += step->added ? 1 : -1;
        }
        visit(step->mask, std::span<const double>(sum), w);
    }
}

/// Absolute slack for treating two streamed losses as tied. Portfolio moments
/// are bounded by the single-asset ones, so this bounds the loss magnitude.
double tie_tolerance(const ReturnPanel& panel, const LossSpec& spec) {
    double max_var = 0.0;
    double max_level = 0.0;
    for (int j = 0; j < panel.assets(); ++j) {
        const auto m = sample_moments(panel.column(j));
        max_var = std::max(max_var, m.variance);
        max_level = std::max(max_level, std::abs(m.mean) + std::sqrt(m.variance));
    }
    constexpr double rel = 1e-9;
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MeanVariance>) {
                return rel * (l.scale * max_var + l.gamma * max_level) + 1e-300;
            } else if constexpr (std::is_same_v<T, Sharpe>) {
                return rel;
            } else {
                return rel * max_level * (1.0 + spec.es_multiplier()) + 1e-300;
            }
        },
        spec.variant());
}

struct Pass1Block {
    double best = kInf;
    std::vector<std::pair<std::uint64_t, double>> candidates;
    std::uint64_t universe = 0;
    std::uint64_t skipped = 0;
};

/// Variances below this are rounding noise: a constant column picks up noise
/// from its neighbours in the running sums and from its own mean. Streamed
/// values under the floor are recomputed and direct ones are read as zero.
double variance_floor(const ReturnPanel& panel) {
    double max_sq = 0.0;
    for (int j = 0; j < panel.assets(); ++j) {
        double sq = 0.0;
        for (double v : panel.column(j)) sq += v * v;
        max_sq = std::max(max_sq, sq / static_cast<double>(panel.periods()));
    }
    return 1e-24 * max_sq;
}

struct DirectEvaluation {
    std::vector<double> sum;
    double scale;
    PortfolioMoments moments;
};

DirectEvaluation evaluate_direct(const ReturnPanel& panel, const SelectionMask& mask, const kernels::KernelTable& k,
                                 double var_floor) {
    DirectEvaluation ev;
    ev.sum = selection_sum(panel, mask, k);
    ev.scale = 1.0 / static_cast<double>(weight(mask));
    ev.moments = scaled_moments(ev.sum, ev.scale, k);
    if (ev.moments.variance < var_floor) ev.moments.variance = 0.0;
    return ev;
}

struct Pass1Outcome {
    EmpiricalOptimum optimum;
    std::unordered_map<std::uint64_t, double> recomputed;
};

Pass1Outcome find_optimum(const ReturnPanel& panel, const LossSpec& spec, const MaskFilter& filter, int workers) {
    const int n = panel.assets();
    const auto& k = kernels::active();
    const double tol = tie_tolerance(panel, spec);
    const double var_floor = variance_floor(panel);
    const std::uint64_t n_blocks = block_count(n);
    std::vector<Pass1Block> blocks(n_blocks);
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(resolve_workers(workers)));

    run_blocks(n_blocks, workers, [&](std::uint64_t b, int w) {
        auto [first, last] = block_range(n, b);
        Pass1Block& out = blocks[b];
        walk_block(panel, k, first, last, scratch[static_cast<std::size_t>(w)],
                   [&](const SelectionMask& mask, std::span<const double> sum, int weight_now) {
                       if (filter && !filter(mask)) return;
                       ++out.universe;
                       auto m = scaled_moments(sum, 1.0 / static_cast<double>(weight_now), k);
                       if (m.variance < var_floor) m = evaluate_direct(panel, mask, k, var_floor).moments;
                       if (!loss_defined(spec, m.variance)) {
                           ++out.skipped;
                           return;
                       }
                       const double loss = loss_value(spec, m.mean, m.variance);
                       if (loss > out.best + tol) return;
                       if (loss < out.best) {
                           out.best = loss;
                           std::erase_if(out.candidates, [&](const auto& c) { return c.second > out.best + tol; });
                       }
                       out.candidates.emplace_back(mask.bits(), loss);
                   });
    });

    std::uint64_t universe = 0;
    std::uint64_t skipped = 0;
    double best = kInf;
    for (const auto& blk : blocks) {
        universe += blk.universe;
        skipped += blk.skipped;
        best = std::min(best, blk.best);
    }
    if (universe == 0) throw std::invalid_argument("no admissible selection passes the mask filter");
    if (!std::isfinite(best)) throw std::domain_error("loss is undefined for every admissible selection");

    Pass1Outcome outcome{EmpiricalOptimum{SelectionMask(1, n), kInf, universe, skipped}, {}};
    std::uint64_t best_bits = 0;
    double best_direct = kInf;
    for (const auto& blk : blocks) {
        for (const auto& [bits, streamed] : blk.candidates) {
            if (streamed > best + tol) continue;
            const SelectionMask mask(bits, n);
            const auto ev = evaluate_direct(panel, mask, k, var_floor);
            if (!loss_defined(spec, ev.moments.variance)) continue;
            const double loss = loss_value(spec, ev.moments.mean, ev.moments.variance);
            outcome.recomputed.emplace(bits, loss);
            if (loss < best_direct || (loss == best_direct && bits < best_bits)) {
                best_direct = loss;
                best_bits = bits;
            }
        }
    }
    if (best_bits == 0) throw std::domain_error("loss is undefined for every near-optimal selection");
    outcome.optimum.mask = SelectionMask(best_bits, n);
    outcome.optimum.loss = best_direct;
    return outcome;
}

constexpr double kQuantileProbs[] = {0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99};
constexpr double kHistMax = 64.0;
constexpr std::size_t kHistBins = 65536;

std::size_t hist_bin(double z) {
    if (!(z < kHistMax)) return kHistBins;  // overflow, including +inf
    if (z <= 0.0) return 0;
    return std::min(kHistBins - 1, static_cast<std::size_t>(z / kHistMax * static_cast<double>(kHistBins)));
}

double quantile_of_sorted(const std::vector<double>& zs, double p) {
    if (zs.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(zs.size())));
    return zs[std::min(zs.size() - 1, rank == 0 ? 0 : rank - 1)];
}

}  // namespace

void ScreenConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(thresholds.tau2_floor >= 0.0) || !(thresholds.delta_floor >= 0.0))
        throw std::invalid_argument("screening floors must be nonnegative");
}

const char* to_string(RecordStatus status) {
    switch (status) {
        case RecordStatus::Ok: return "ok";
        case RecordStatus::Degenerate: return "degenerate";
        case RecordStatus::LossUndefined: return "loss_undefined";
    }
    return "ok";
}

RecordStatus record_status_from_string(const std::string& text) {
    if (text == "ok") return RecordStatus::Ok;
    if (text == "degenerate") return RecordStatus::Degenerate;
    if (text == "loss_undefined") return RecordStatus::LossUndefined;
    throw std::invalid_argument("unknown record status '" + text + "'");
}

std::vector<SelectionMask> ScsResult::included() const {
    std::vector<SelectionMask> out;
    out.reserve(included_count);
    for (const auto& r : records)
        if (r.included) out.push_back(r.mask);
    return out;
}

ScsResult ScsResult::at_alpha(double new_alpha) const {
    if (!(new_alpha > 0.0 && new_alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!records_complete && new_alpha < alpha)
        throw std::invalid_argument("records were capped at alpha " + std::to_string(alpha) +
                                    "; cannot widen the set to alpha " + std::to_string(new_alpha));
    ScsResult out = *this;
    out.alpha = new_alpha;
    out.quantile = normal_quantile(1.0 - new_alpha);
    out.included_count = 0;
    for (auto& r : out.records) {
        r.included = r.status != RecordStatus::LossUndefined && r.z <= out.quantile;
        out.included_count += r.included ? 1 : 0;
    }
    return out;
}

Screener::Screener(const ReturnPanel& panel, LossSpec spec, ScreenConfig config)
    : panel_(panel), spec_(std::move(spec)), config_(std::move(config)), optimum_{SelectionMask(1, 1), 0.0, 0, 0},
      reference_(std::span<const double>(std::vector<double>{0.0, 0.0})) {
    config_.validate();
    auto outcome = find_optimum(panel_, spec_, config_.mask_filter, config_.worker_count);
    optimum_ = outcome.optimum;
    recomputed_ = std::move(outcome.recomputed);
    const auto& k = kernels::active();
    reference_sum_ = selection_sum(panel_, optimum_.mask, k);
    reference_ = ReferenceSeries(reference_sum_, 1.0 / static_cast<double>(weight(optimum_.mask)), k);
}

ScsResult Screener::build() const {
    const int n = panel_.assets();
    const auto& k = kernels::active();
    const double q = normal_quantile(1.0 - config_.alpha);
    const bool keep_all = optimum_.universe_size <= config_.record_cap;
    const double var_floor = variance_floor(panel_);
    const std::uint64_t n_blocks = block_count(n);
    const int workers = resolve_workers(config_.worker_count);

    struct Pass2Block {
        std::vector<ScsRecord> records;
        std::uint64_t included = 0;
        std::uint64_t degenerate = 0;
        std::uint64_t undefined = 0;
    };
    std::vector<Pass2Block> blocks(n_blocks);
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(workers));
    std::vector<std::vector<std::uint64_t>> hist(keep_all ? 0 : static_cast<std::size_t>(workers),
                                                 std::vector<std::uint64_t>(kHistBins + 1, 0));

    run_blocks(n_blocks, workers, [&](std::uint64_t b, int w) {
        auto [first, last] = block_range(n, b);
        Pass2Block& out = blocks[b];
        walk_block(panel_, k, first, last, scratch[static_cast<std::size_t>(w)],
                   [&](const SelectionMask& mask, std::span<const double> sum, int weight_now) {
                       if (config_.mask_filter && !config_.mask_filter(mask)) return;
                       ScsRecord rec{mask, 0.0, 0.0, false, false, RecordStatus::Ok};
                       if (mask == optimum_.mask) {
                           // Self-comparison: zero differential by construction.
                           rec.loss = optimum_.loss;
                           rec.included = true;
                       } else {
                           const double scale = 1.0 / static_cast<double>(weight_now);
                           PairMoments pm;
                           const auto direct = [&] {
                               const auto ev = evaluate_direct(panel_, mask, k, var_floor);
                               if (loss_defined(spec_, ev.moments.variance))
                                   pm = pair_moments(ev.sum, ev.scale, ev.moments, reference_, k);
                               else pm.s = ev.moments;
                           };
                           if (recomputed_.count(mask.bits())) {
                               direct();
                           } else {
                               const auto m = scaled_moments(sum, scale, k);
                               if (m.variance < var_floor) direct();
                               else if (loss_defined(spec_, m.variance)) pm = pair_moments(sum, scale, m, reference_, k);
                               else pm.s = m;
                           }
                           if (!loss_defined(spec_, pm.s.variance)) {
                               rec.loss = std::numeric_limits<double>::quiet_NaN();
                               rec.z = kInf;
                               rec.degenerate = true;
                               rec.status = RecordStatus::LossUndefined;
                               ++out.undefined;
                           } else {
                               const auto st = screen_statistic(spec_, pm, config_.cov_mode, config_.thresholds);
                               rec.loss = loss_value(spec_, pm.s.mean, pm.s.variance);
                               rec.z = st.z;
                               rec.degenerate = st.degenerate;
                               rec.status = st.degenerate ? RecordStatus::Degenerate : RecordStatus::Ok;
                               rec.included = st.z <= q;
                               if (st.degenerate) ++out.degenerate;
                           }
                       }
                       if (rec.included) ++out.included;
                       if (!keep_all) {
                           if (rec.status != RecordStatus::LossUndefined) ++hist[static_cast<std::size_t>(w)][hist_bin(rec.z)];
                           if (!rec.included) return;
                       }
                       out.records.push_back(rec);
                   });
    });

    ScsResult res;
    res.reference = optimum_.mask;
    res.reference_loss = optimum_.loss;
    res.alpha = config_.alpha;
    res.quantile = q;
    res.universe_size = optimum_.universe_size;
    res.records_complete = keep_all;
    res.asset_labels = panel_.labels();
    res.loss = spec_.to_string();
    res.cov_mode = config_.cov_mode;
    std::size_t total = 0;
    for (const auto& blk : blocks) total += blk.records.size();
    res.records.reserve(total);
    for (auto& blk : blocks) {
        res.included_count += blk.included;
        res.degenerate_count += blk.degenerate;
        res.undefined_count += blk.undefined;
        res.records.insert(res.records.end(), blk.records.begin(), blk.records.end());
    }
    std::sort(res.records.begin(), res.records.end(),
              [](const ScsRecord& a, const ScsRecord& b) { return a.mask.bits() < b.mask.bits(); });

    if (keep_all) {
        std::vector<double> zs;
        zs.reserve(res.records.size());
        for (const auto& r : res.records)
            if (r.status != RecordStatus::LossUndefined) zs.push_back(r.z);
        std::sort(zs.begin(), zs.end());
        for (double p : kQuantileProbs) res.z_quantiles.emplace_back(p, quantile_of_sorted(zs, p));
    } else {
        std::vector<std::uint64_t> merged(kHistBins + 1, 0);
        std::uint64_t count = 0;
        for (const auto& h : hist)
            for (std::size_t i = 0; i <= kHistBins; ++i) merged[i] += h[i];
        for (auto c : merged) count += c;
        for (double p : kQuantileProbs) {
            const auto target = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(count)));
            std::uint64_t acc = 0;
            double value = kInf;
            for (std::size_t i = 0; i <= kHistBins; ++i) {
                acc += merged[i];
                if (acc >= std::max<std::uint64_t>(target, 1)) {
                    value = i == kHistBins ? kInf : kHistMax * static_cast<double>(i + 1) / static_cast<double>(kHistBins);
                    break;
                }
            }
            res.z_quantiles.emplace_back(p, value);
        }
    }
    return res;
}

PlausibilityVerdict Screener::check(const SelectionMask& candidate) const {
    if (candidate.universe() != panel_.assets()) throw std::invalid_argument("candidate universe does not match panel");
    if (config_.mask_filter && !config_.mask_filter(candidate))
        throw std::invalid_argument("candidate " + candidate.to_string() + " is outside the screened universe");
    const double q = normal_quantile(1.0 - config_.alpha);
    PlausibilityVerdict v{0.0, q, true, optimum_.loss, optimum_.loss, optimum_.mask};
    if (candidate == optimum_.mask) return v;
    const auto& k = kernels::active();
    const auto ev = evaluate_direct(panel_, candidate, k, variance_floor(panel_));
    if (!loss_defined(spec_, ev.moments.variance)) {
        v.z = kInf;
        v.included = false;
        v.loss = std::numeric_limits<double>::quiet_NaN();
        return v;
    }
    const auto pm = pair_moments(ev.sum, ev.scale, ev.moments, reference_, k);
    const auto st = screen_statistic(spec_, pm, config_.cov_mode, config_.thresholds);
    v.z = st.z;
    v.included = st.z <= q;
    v.loss = loss_value(spec_, ev.moments.mean, ev.moments.variance);
    return v;
}

EmpiricalOptimum empirical_optimum(const ReturnPanel& panel, const LossSpec& spec, const MaskFilter& filter,
                                   int worker_count) {
    return find_optimum(panel, spec, filter, worker_count).optimum;
}

ScsResult build_scs(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config) {
    return Screener(panel, spec, config).build();
}

PlausibilityVerdict plausibility_check(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config,
                                       const SelectionMask& candidate) {
    return Screener(panel, spec, config).check(candidate);
}

MaskFilter max_assets_filter(int k) {
    return [k](const SelectionMask& m) { return weight(m) <= k; };
}

}  // namespace scs
