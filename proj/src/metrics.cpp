#include "scs/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "scs/normal.hpp"
#include "scs/scs_io.hpp"

namespace scs {

double rmi(std::uint64_t scs_size, std::uint64_t universe_size) {
    if (universe_size < 2) throw std::invalid_argument("rmi needs a universe of at least 2 selections");
    if (scs_size < 1 || scs_size > universe_size) throw std::invalid_argument("rmi: scs_size outside [1, universe_size]");
    return 1.0 - std::log(static_cast<double>(scs_size)) / std::log(static_cast<double>(universe_size));
}

LossSpread loss_spread(const ScsResult& scs) {
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& r : scs.records) {
        if (!r.included) continue;
        hi = std::max(hi, r.loss);
        any = true;
    }
    if (!any) throw std::invalid_argument("loss_spread: the confidence set is empty");
    return {scs.reference_loss, hi, hi - scs.reference_loss};
}

std::vector<SelectionMask> lower_boundary(const std::vector<SelectionMask>& included) {
    if (included.empty()) return {};
    const int n = included.front().universe();
    std::vector<std::vector<std::uint64_t>> buckets(static_cast<std::size_t>(n) + 1);
    for (const auto& m : included) {
        if (m.universe() != n) throw std::invalid_argument("lower_boundary: mixed universes");
        buckets[static_cast<std::size_t>(weight(m))].push_back(m.bits());
    }
    std::vector<SelectionMask> out;
    for (std::size_t k = 1; k < buckets.size(); ++k) {
        for (std::uint64_t m : buckets[k]) {
            bool minimal = true;
            for (std::size_t smaller = 1; smaller < k && minimal; ++smaller)
                for (std::uint64_t a : buckets[smaller])
                    if ((a & m) == a) {
                        minimal = false;
                        break;
                    }
            if (minimal) out.emplace_back(m, n);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<SelectionMask> lower_boundary(const ScsResult& scs) { return lower_boundary(scs.included()); }

std::vector<double> inclusion_importance(const std::vector<SelectionMask>& included, int n_assets) {
    if (included.empty()) throw std::invalid_argument("inclusion_importance: the confidence set is empty");
    std::vector<double> ii(static_cast<std::size_t>(n_assets), 0.0);
    for (const auto& m : included)
        for (int j = 0; j < n_assets; ++j) ii[static_cast<std::size_t>(j)] += m.contains(j) ? 1.0 : 0.0;
    for (auto& v : ii) v /= static_cast<double>(included.size());
    return ii;
}

std::vector<double> inclusion_importance(const ScsResult& scs) {
    return inclusion_importance(scs.included(), scs.n_assets());
}

Matrix co_inclusion(const std::vector<SelectionMask>& included, int n_assets) {
    const auto n = static_cast<std::size_t>(n_assets);
    std::vector<std::vector<std::uint64_t>> c(n, std::vector<std::uint64_t>(n, 0));
    for (const auto& m : included)
        for (std::size_t i = 0; i < n; ++i) {
            if (!m.contains(static_cast<int>(i))) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (m.contains(static_cast<int>(j))) ++c[i][j];
        }
    Matrix cii(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::uint64_t denom = c[i][i] + c[j][j] - c[i][j];
            if (denom > 0) cii[i][j] = static_cast<double>(c[i][j]) / static_cast<double>(denom);
        }
    return cii;
}

Matrix co_inclusion(const ScsResult& scs) { return co_inclusion(scs.included(), scs.n_assets()); }

std::vector<CiiEdge> cii_graph_export(const Matrix& cii, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("CII threshold must lie in [0, 1)");
    std::vector<CiiEdge> edges;
    for (std::size_t i = 0; i < cii.size(); ++i)
        for (std::size_t j = i + 1; j < cii.size(); ++j)
            if (cii[i][j] > threshold) edges.push_back({static_cast<int>(i), static_cast<int>(j), cii[i][j]});
    return edges;
}

std::vector<CiiEdge> cii_graph_export(const ScsResult& scs, double threshold) {
    return cii_graph_export(co_inclusion(scs), threshold);
}

namespace {

std::string dot_id(const std::string& label) {
    std::string out = "\"";
    for (char c : label) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

}  // namespace

void write_cii_dot(const std::vector<CiiEdge>& edges, const std::vector<std::string>& labels, double threshold,
                   std::ostream& out) {
    out << "// Co-inclusion graph: edges with CII > " << format_real(threshold) << "\n";
    out << "// penwidth = 1 + 9 * CII\n";
    out << "graph cii {\n";
    for (const auto& l : labels) out << "  " << dot_id(l) << ";\n";
    for (const auto& e : edges) {
        out << "  " << dot_id(labels.at(static_cast<std::size_t>(e.i))) << " -- "
            << dot_id(labels.at(static_cast<std::size_t>(e.j))) << " [weight=" << format_real(e.weight)
            << ", penwidth=" << format_real(1.0 + 9.0 * e.weight) << "];\n";
    }
    out << "}\n";
}

void write_cii_edges_csv(const std::vector<CiiEdge>& edges, const std::vector<std::string>& labels, std::ostream& out) {
    out << "i,j,label_i,label_j,cii\r\n";
    for (const auto& e : edges)
        out << e.i << ',' << e.j << ',' << csv_field(labels.at(static_cast<std::size_t>(e.i))) << ','
            << csv_field(labels.at(static_cast<std::size_t>(e.j))) << ',' << format_real(e.weight) << "\r\n";
}

ScsMetrics compute_metrics(const ScsResult& scs) {
    ScsMetrics m;
    const auto included = scs.included();
    m.alpha = scs.alpha;
    m.scs_size = included.size();
    m.universe_size = scs.universe_size;
    m.relative_size = static_cast<double>(m.scs_size) / static_cast<double>(m.universe_size);
    m.rmi = m.universe_size >= 2 ? rmi(m.scs_size, m.universe_size) : std::numeric_limits<double>::quiet_NaN();
    const auto spread = loss_spread(scs);
    m.loss_min = spread.loss_min;
    m.loss_max = spread.loss_max;
    m.spread = spread.spread;
    m.lower_boundary = lower_boundary(included);
    m.inclusion = inclusion_importance(included, scs.n_assets());
    m.co_inclusion = co_inclusion(included, scs.n_assets());
    return m;
}

IiProfile ii_profile(const ScsResult& scs, const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty()) throw std::invalid_argument("ii_profile: empty alpha grid");
    for (double a : alpha_grid) {
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("ii_profile: alpha values must lie in (0, 1)");
        if (!scs.records_complete && a < scs.alpha)
            throw std::invalid_argument("ii_profile: records are capped and cannot serve alpha below the screening level");
    }
    const auto n = static_cast<std::size_t>(scs.n_assets());

    // Records sorted by z; grid points visited by increasing quantile.
    std::vector<std::size_t> by_z(scs.records.size());
    std::iota(by_z.begin(), by_z.end(), 0);
    std::stable_sort(by_z.begin(), by_z.end(),
                     [&](std::size_t a, std::size_t b) { return scs.records[a].z < scs.records[b].z; });
    std::vector<std::size_t> grid_order(alpha_grid.size());
    std::iota(grid_order.begin(), grid_order.end(), 0);
    std::vector<double> q(alpha_grid.size());
    for (std::size_t g = 0; g < alpha_grid.size(); ++g) q[g] = normal_quantile(1.0 - alpha_grid[g]);
    std::stable_sort(grid_order.begin(), grid_order.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });

    IiProfile prof;
    prof.alphas = alpha_grid;
    prof.labels = scs.asset_labels;
    prof.sizes.assign(alpha_grid.size(), 0);
    prof.inclusion.assign(alpha_grid.size(), std::vector<double>(n, 0.0));
    std::vector<std::uint64_t> counts(n, 0);
    std::uint64_t size = 0;
    std::size_t next = 0;
    for (std::size_t g : grid_order) {
        while (next < by_z.size() && scs.records[by_z[next]].z <= q[g]) {
            const auto& m = scs.records[by_z[next]].mask;
            for (std::size_t j = 0; j < n; ++j) counts[j] += m.contains(static_cast<int>(j)) ? 1 : 0;
            ++size;
            ++next;
        }
        prof.sizes[g] = size;
        for (std::size_t j = 0; j < n; ++j)
            prof.inclusion[g][j] = size == 0 ? 0.0 : static_cast<double>(counts[j]) / static_cast<double>(size);
    }
    return prof;
}

IiProfile ii_profile(const ReturnPanel& panel, const LossSpec& spec, const ScreenConfig& config,
                     const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty()) throw std::invalid_argument("ii_profile: empty alpha grid");
    ScreenConfig widest = config;
    widest.alpha = *std::min_element(alpha_grid.begin(), alpha_grid.end());
    return ii_profile(build_scs(panel, spec, widest), alpha_grid);
}

void write_metrics_csv(const std::vector<ScsMetrics>& rows, std::ostream& out) {
    out << "alpha,confidence_pct,scs_size,lower_boundary_size,universe_size,rmi_pct,loss_min_pct,loss_max_pct,"
           "spread_pct\r\n";
    for (const auto& m : rows) {
        out << format_real(m.alpha) << ',' << format_real(100.0 * (1.0 - m.alpha)) << ',' << m.scs_size << ','
            << m.lower_boundary.size() << ',' << m.universe_size << ',' << format_real(100.0 * m.rmi) << ','
            << format_real(100.0 * m.loss_min) << ',' << format_real(100.0 * m.loss_max) << ','
            << format_real(100.0 * m.spread) << "\r\n";
    }
}

void write_inclusion_csv(const std::vector<ScsMetrics>& rows, const std::vector<std::string>& labels, std::ostream& out) {
    out << "alpha,asset,label,ii\r\n";
    for (const auto& m : rows)
        for (std::size_t j = 0; j < m.inclusion.size(); ++j)
            out << format_real(m.alpha) << ',' << j << ',' << csv_field(labels.at(j)) << ','
                << format_real(m.inclusion[j]) << "\r\n";
}

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& labels, std::ostream& out) {
    out << "label";
    for (const auto& l : labels) out << ',' << csv_field(l);
    out << "\r\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << csv_field(labels.at(i));
        for (double v : m[i]) out << ',' << format_real(v);
        out << "\r\n";
    }
}

void write_ii_profile_csv(const IiProfile& p, std::ostream& out) {
    out << "alpha,scs_size";
    for (const auto& l : p.labels) out << ',' << csv_field(l);
    out << "\r\n";
    for (std::size_t g = 0; g < p.alphas.size(); ++g) {
        out << format_real(p.alphas[g]) << ',' << p.sizes[g];
        for (double v : p.inclusion[g]) out << ',' << format_real(v);
        out << "\r\n";
    }
}

}  // namespace scs
