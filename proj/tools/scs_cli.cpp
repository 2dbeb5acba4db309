// scs: selection confidence sets for equally weighted portfolios.
//
//   scs scs      --input panel.csv --loss mv:gamma=0.5 --alpha 0.05 --out dir/
//   scs metrics  --scs dir/scs.json --alphas 0.01,0.05,0.10 --out dir/
//   scs simulate --model model2 --rho 0.75 --n 10 --T 100,250,1000 --runs 300 --out dir/
//   scs theory   --model model2 --rho 0.75 --n 4 --loss mv:gamma=0.5 --T 250 --out dir/
//   scs check    --input panel.csv --loss sharpe --candidate A,C,F
//
// Exit codes: 0 success, 2 input error, 3 numerical degeneracy, 4 invariant violation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "scs/metrics.hpp"
#include "scs/panel.hpp"
#include "scs/scs_io.hpp"
#include "scs/screening.hpp"
#include "scs/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kInputError = 2, kDegenerate = 3, kInvariant = 4 };

struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char two[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(two, sizeof two, "%02x", md[i]);
        hex += two;
    }
    return hex;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_reals(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw std::invalid_argument(std::string("bad value '") + s + "' in " + what);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string("empty list for ") + what);
    return out;
}

/// "sharpe,mv:gamma=1,scale=0.5,es:level=0.1": a comma-separated item without
/// a ':' that looks like key=value continues the previous loss.
std::vector<scs::LossSpec> parse_losses(const std::string& text) {
    std::vector<std::string> specs;
    for (const auto& item : split(text, ',')) {
        const bool continuation = item.find(':') == std::string::npos && item.find('=') != std::string::npos;
        if (continuation && !specs.empty()) specs.back() += "," + item;
        else specs.push_back(item);
    }
    std::vector<scs::LossSpec> out;
    for (const auto& s : specs) out.push_back(scs::LossSpec::parse(s));
    if (out.empty()) throw std::invalid_argument("no loss given");
    return out;
}

int env_threads(int flag_value, bool flag_given) {
    if (flag_given) return flag_value;
    if (const char* env = std::getenv("SCS_THREADS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("SCS_THREADS is not an integer: '") + env + "'");
        }
    }
    return 0;
}

fs::path out_dir(const std::string& flag) {
    fs::path dir = flag;
    if (dir.empty()) {
        const char* env = std::getenv("SCS_OUT_DIR");
        dir = env && *env ? env : "scs_out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct Manifest {
    json doc;

    Manifest(const std::string& command, json parameters) {
        doc["command"] = command;
        doc["tool_version"] = kVersion;
        doc["parameters"] = std::move(parameters);
        doc["inputs"] = json::array();
        doc["outputs"] = json::array();
        doc["started_at"] = utc_now();
    }
    void input(const fs::path& p) { doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
    void output(const std::string& name) { doc["outputs"].push_back(name); }
    void write(const fs::path& dir) {
        doc["finished_at"] = utc_now();
        // A directory keeps one manifest; an earlier command's record is nested.
        const auto path = dir / "manifest.json";
        if (fs::exists(path)) {
            std::ifstream in(path, std::ios::binary);
            json previous = json::parse(in, nullptr, false);
            if (!previous.is_discarded() && previous.value("command", "") != doc["command"].get<std::string>())
                doc["upstream"] = std::move(previous);
        }
        write_text(path, doc.dump(2) + "\n");
    }
};

struct PanelFlags {
    std::string input;
    std::string scale = "fraction";
    std::string delimiter = ",";
    bool no_header = false;
    bool date_column = false;

    void add(CLI::App* app) {
        app->add_option("--input", input, "Returns CSV (rows = periods, columns = assets)")->required();
        app->add_option("--scale", scale, "Unit of the input values")->check(CLI::IsMember({"fraction", "percent"}));
        app->add_option("--delimiter", delimiter, "Field delimiter");
        app->add_flag("--no-header", no_header, "Input has no header row");
        app->add_flag("--date-column", date_column, "Skip a leading date column");
    }
    scs::ReturnPanel load() const {
        if (delimiter.size() != 1) throw std::invalid_argument("delimiter must be a single character");
        scs::CsvOptions opts;
        opts.delimiter = delimiter[0];
        opts.header = !no_header;
        opts.date_column = date_column;
        opts.scale = scale == "percent" ? 0.01 : 1.0;
        return scs::load_csv(input, opts);
    }
    json to_json() const {
        return {{"input", input}, {"scale", scale}, {"delimiter", delimiter}, {"header", !no_header},
                {"date_column", date_column}};
    }
};

struct ScreenFlags {
    std::string loss = "mv:gamma=0.5";
    double alpha = 0.05;
    std::string cov_mode = "gaussian";
    int max_assets = 0;
    int threads = 0;
    CLI::Option* threads_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--loss", loss, "Loss: mv:gamma=G[,scale=S] | sharpe | es:level=L");
        app->add_option("--alpha", alpha, "Significance level");
        app->add_option("--cov-mode", cov_mode, "Moment covariance estimator")->check(CLI::IsMember({"gaussian", "iid"}));
        app->add_option("--filter-max-assets", max_assets, "Screen only selections with at most k assets");
        threads_opt = app->add_option("--threads", threads, "Worker threads (0 = all cores; env SCS_THREADS)");
    }
    scs::ScreenConfig config() const {
        scs::ScreenConfig c;
        c.alpha = alpha;
        c.cov_mode = scs::parse_cov_mode(cov_mode);
        if (max_assets > 0) c.mask_filter = scs::max_assets_filter(max_assets);
        else if (max_assets < 0) throw std::invalid_argument("--filter-max-assets must be positive");
        c.worker_count = env_threads(threads, threads_opt->count() > 0);
        return c;
    }
    json to_json() const {
        return {{"loss", loss}, {"alpha", alpha}, {"cov_mode", cov_mode}, {"filter_max_assets", max_assets}};
    }
};

void check_invariants(const scs::ScsResult& r) {
    std::uint64_t included = 0;
    bool saw_reference = false;
    for (const auto& rec : r.records) {
        if (rec.included) ++included;
        if (rec.included && !(rec.z <= r.quantile)) throw InvariantError("included record with z above the quantile");
        if (rec.status != scs::RecordStatus::LossUndefined && rec.loss < r.reference_loss)
            throw InvariantError("record " + rec.mask.to_string() + " beats the reference loss");
        if (rec.mask == r.reference) {
            saw_reference = true;
            if (!rec.included || rec.z != 0.0) throw InvariantError("reference is not included with z = 0");
        }
    }
    if (!saw_reference) throw InvariantError("reference record missing");
    if (included != r.included_count) throw InvariantError("included_count does not match the records");
}

int cmd_scs(const PanelFlags& pf, const ScreenFlags& sf, const std::string& out_flag, std::uint64_t record_cap) {
    const auto panel = pf.load();
    const auto spec = scs::LossSpec::parse(sf.loss);
    auto config = sf.config();
    config.record_cap = record_cap;
    const auto dir = out_dir(out_flag);
    json params = pf.to_json();
    params.update(sf.to_json());
    params["record_cap"] = record_cap;
    Manifest manifest("scs", params);
    manifest.input(pf.input);

    const auto result = scs::build_scs(panel, spec, config);
    check_invariants(result);
    scs::write_scs_json(result, dir / "scs.json");
    scs::write_records_csv(result, dir / "records.csv");
    manifest.output("scs.json");
    manifest.output("records.csv");
    manifest.write(dir);
    std::cout << "reference " << result.reference.to_string() << " loss " << scs::format_real(result.reference_loss)
              << "\nincluded " << result.included_count << " of " << result.universe_size << " at alpha "
              << scs::format_real(result.alpha) << "\n";
    return kOk;
}

int cmd_metrics(const std::string& scs_path, const std::string& alphas_text, double cii_threshold,
                const std::string& out_flag) {
    const auto base = scs::read_scs_json(scs_path);
    const auto alphas = alphas_text.empty() ? std::vector<double>{base.alpha} : parse_reals(alphas_text, "--alphas");
    const auto dir = out_dir(out_flag);
    Manifest manifest("metrics", {{"scs", scs_path}, {"alphas", alphas}, {"cii_threshold", cii_threshold}});
    manifest.input(scs_path);

    std::vector<scs::ScsMetrics> rows;
    for (double a : alphas) rows.push_back(scs::compute_metrics(base.at_alpha(a)));
    const auto profile = scs::ii_profile(base, alphas);
    const auto& labels = base.asset_labels;

    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    scs::write_metrics_csv(rows, metrics);
    std::ofstream inclusion(dir / "inclusion.csv", std::ios::binary);
    scs::write_inclusion_csv(rows, labels, inclusion);
    // Co-inclusion and its graph are reported at the screening level of scs.json.
    const auto at_base = scs::compute_metrics(base);
    std::ofstream cii(dir / "cii.csv", std::ios::binary);
    scs::write_matrix_csv(at_base.co_inclusion, labels, cii);
    const auto edges = scs::cii_graph_export(at_base.co_inclusion, cii_threshold);
    std::ofstream dot(dir / "cii.dot", std::ios::binary);
    scs::write_cii_dot(edges, labels, cii_threshold, dot);
    std::ofstream edge_csv(dir / "cii_edges.csv", std::ios::binary);
    scs::write_cii_edges_csv(edges, labels, edge_csv);
    std::ofstream ii(dir / "ii_profile.csv", std::ios::binary);
    scs::write_ii_profile_csv(profile, ii);
    for (auto* s : {&metrics, &inclusion, &cii, &dot, &edge_csv, &ii})
        if (!*s) throw std::runtime_error("failed writing metrics outputs");
    for (const char* f : {"metrics.csv", "inclusion.csv", "cii.csv", "cii.dot", "cii_edges.csv", "ii_profile.csv"})
        manifest.output(f);
    manifest.write(dir);
    for (const auto& m : rows)
        std::cout << "alpha " << scs::format_real(m.alpha) << ": |S| " << m.scs_size << ", lower boundary "
                  << m.lower_boundary.size() << ", RMI " << scs::format_real(100.0 * m.rmi) << "%\n";
    return kOk;
}

struct GenFlags {
    std::string model = "model2";
    double rho = 0.75;
    double v = 1.0;
    int n = 10;
    std::uint64_t seed = 42;
    bool noise_sd = false;
    bool fixed_model = false;

    void add(CLI::App* app) {
        app->add_option("--model", model, "Generator")->check(CLI::IsMember({"model1", "model2"}));
        app->add_option("--rho", rho, "Model 2 exchangeable correlation");
        app->add_option("--v", v, "Model 1 partial-correlation strength");
        app->add_option("--n", n, "Number of assets");
        app->add_option("--seed", seed, "Master seed");
        app->add_flag("--noise-sd", noise_sd, "Read the mean noise parameter 0.02 as a standard deviation");
        app->add_flag("--fixed-model", fixed_model, "Share one population model across runs");
    }
    scs::GeneratorSpec spec() const {
        scs::GeneratorSpec g;
        if (model == "model1") g.model = scs::Model1{v};
        else g.model = scs::Model2{rho};
        g.n_assets = n;
        g.seed = seed;
        g.mean_rule.noise_is_variance = !noise_sd;
        g.redraw_per_run = !fixed_model;
        g.validate();
        return g;
    }
    json to_json() const {
        return {{"model", model}, {"rho", rho},         {"v", v},
                {"n", n},         {"seed", seed},       {"noise_is_variance", !noise_sd},
                {"fixed_model", fixed_model}};
    }
};

std::vector<int> parse_periods(const std::string& text) {
    std::vector<int> out;
    for (double t : parse_reals(text, "--T")) {
        if (t != std::floor(t) || t < 2 || t > 1e9) throw std::invalid_argument("T values must be integers >= 2");
        out.push_back(static_cast<int>(t));
    }
    return out;
}

int cmd_simulate(const GenFlags& gf, const std::string& periods, const std::string& losses, const std::string& alphas,
                 int runs, const std::string& cov_mode, int threads, bool threads_given, const std::string& out_flag) {
    scs::McConfig c;
    c.generator = gf.spec();
    c.periods = parse_periods(periods);
    c.losses = parse_losses(losses);
    c.alphas = parse_reals(alphas, "--alphas");
    c.runs = runs;
    c.cov_mode = scs::parse_cov_mode(cov_mode);
    c.worker_count = env_threads(threads, threads_given);
    c.validate();
    const auto dir = out_dir(out_flag);
    json params = gf.to_json();
    params.update({{"T", c.periods}, {"losses", losses}, {"alphas", c.alphas}, {"runs", runs}, {"cov_mode", cov_mode}});
    Manifest manifest("simulate", params);

    const auto est = scs::run_mc(c);
    std::ofstream table(dir / "table.csv", std::ios::binary);
    scs::write_mc_table_csv(est, c, table);
    if (!table) throw std::runtime_error("failed writing table.csv");
    write_text(dir / "runs.json", scs::mc_runs_json(est, c) + "\n");
    manifest.output("table.csv");
    manifest.output("runs.json");
    manifest.write(dir);
    for (const auto& cell : est.cells)
        std::cout << cell.loss << " T=" << cell.periods << " alpha=" << scs::format_real(cell.alpha)
                  << " kappa=" << scs::format_real(cell.kappa) << " p=" << scs::format_real(cell.coverage) << "\n";
    return kOk;
}

int cmd_theory(const GenFlags& gf, const std::string& losses, const std::string& alphas, const std::string& periods,
               std::uint64_t run, const std::string& out_flag) {
    const auto g = gf.spec();
    const auto specs = parse_losses(losses);
    const auto alpha_list = parse_reals(alphas, "--alpha");
    const auto t_list = parse_periods(periods);
    const auto dir = out_dir(out_flag);
    json params = gf.to_json();
    params.update({{"losses", losses}, {"alphas", alpha_list}, {"T", t_list}, {"run", run}});
    Manifest manifest("theory", params);

    const auto model = scs::draw_population(g, run);
    std::ostringstream csv;
    csv << "loss,alpha,T,optimal_count,expected,lower_bound,upper_bound,gamma_min\r\n";
    for (const auto& spec : specs)
        for (double a : alpha_list)
            for (int t : t_list) {
                const auto th = scs::theoretical_expected_size(model, spec, a, t);
                csv << scs::csv_field(spec.to_string()) << ',' << scs::format_real(a) << ',' << t << ','
                    << th.optimal_count << ',' << scs::format_real(th.expected) << ','
                    << scs::format_real(th.lower_bound) << ',' << scs::format_real(th.upper_bound) << ','
                    << scs::format_real(th.gamma_min) << "\r\n";
            }
    write_text(dir / "theory.csv", csv.str());
    manifest.output("theory.csv");
    manifest.write(dir);
    std::cout << csv.str();
    return kOk;
}

scs::SelectionMask parse_candidate(const std::string& text, const scs::ReturnPanel& panel) {
    const int n = panel.assets();
    if (text.rfind("0x", 0) == 0) {
        std::size_t used = 0;
        unsigned long long bits = 0;
        try {
            bits = std::stoull(text.substr(2), &used, 16);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used + 2 != text.size()) throw std::invalid_argument("cannot parse mask '" + text + "'");
        return scs::SelectionMask(bits, n);
    }
    std::uint64_t bits = 0;
    for (const auto& label : split(text, ',')) {
        const int j = panel.label_index(label);
        if (j < 0) throw std::invalid_argument("unknown asset label '" + label + "'");
        bits |= std::uint64_t{1} << j;
    }
    return scs::SelectionMask(bits, n);
}

int cmd_check(const PanelFlags& pf, const ScreenFlags& sf, const std::string& candidate_text) {
    const auto panel = pf.load();
    const auto spec = scs::LossSpec::parse(sf.loss);
    const auto candidate = parse_candidate(candidate_text, panel);
    const auto v = scs::plausibility_check(panel, spec, sf.config(), candidate);
    std::cout << "candidate " << candidate.to_string() << "\n"
              << "z " << scs::format_real(v.z) << "\n"
              << "q " << scs::format_real(v.quantile) << "\n"
              << "verdict " << (v.included ? "included" : "excluded") << "\n"
              << "loss " << scs::format_real(v.loss) << "\n"
              << "reference " << v.reference.to_string() << " loss " << scs::format_real(v.reference_loss) << "\n";
    return kOk;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selection confidence sets for equally weighted portfolios"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    PanelFlags scs_panel;
    ScreenFlags scs_screen;
    std::string scs_out;
    std::uint64_t record_cap = std::uint64_t{1} << 20;
    auto* scs_cmd = app.add_subcommand("scs", "Build the selection confidence set of a return panel");
    scs_panel.add(scs_cmd);
    scs_screen.add(scs_cmd);
    scs_cmd->add_option("--out", scs_out, "Output directory (env SCS_OUT_DIR)");
    scs_cmd->add_option("--record-cap", record_cap, "Keep every record when the universe has at most this many masks");

    std::string metrics_scs;
    std::string metrics_alphas;
    double cii_threshold = 0.01;
    std::string metrics_out;
    auto* metrics_cmd = app.add_subcommand("metrics", "Post-selection metrics from scs.json");
    metrics_cmd->add_option("--scs", metrics_scs, "scs.json written by the scs command")->required();
    metrics_cmd->add_option("--alphas", metrics_alphas, "Comma-separated significance levels");
    metrics_cmd->add_option("--cii-threshold", cii_threshold, "Minimum co-inclusion for graph edges");
    metrics_cmd->add_option("--out", metrics_out, "Output directory (env SCS_OUT_DIR)");

    GenFlags sim_gen;
    std::string sim_t = "100,250,1000";
    std::string sim_losses = "sharpe,mv:gamma=0.5,es:level=0.1";
    std::string sim_alphas = "0.10,0.05,0.01";
    int sim_runs = 300;
    std::string sim_cov = "gaussian";
    int sim_threads = 0;
    std::string sim_out;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimates of SCS size and coverage");
    sim_gen.add(sim_cmd);
    sim_cmd->add_option("--T", sim_t, "Comma-separated sample sizes");
    sim_cmd->add_option("--losses", sim_losses, "Comma-separated loss specs");
    sim_cmd->add_option("--alphas", sim_alphas, "Comma-separated significance levels");
    sim_cmd->add_option("--runs", sim_runs, "Monte Carlo runs");
    sim_cmd->add_option("--cov-mode", sim_cov, "Moment covariance estimator")->check(CLI::IsMember({"gaussian", "iid"}));
    auto* sim_threads_opt = sim_cmd->add_option("--threads", sim_threads, "Worker threads (0 = all cores; env SCS_THREADS)");
    sim_cmd->add_option("--out", sim_out, "Output directory (env SCS_OUT_DIR)");

    GenFlags th_gen;
    std::string th_losses = "mv:gamma=0.5";
    std::string th_alphas = "0.05";
    std::string th_t = "250";
    std::uint64_t th_run = 0;
    std::string th_out;
    auto* th_cmd = app.add_subcommand("theory", "Asymptotic expected SCS size and bounds for a population model");
    th_gen.add(th_cmd);
    th_cmd->add_option("--loss", th_losses, "Loss spec (comma-separated list allowed)");
    th_cmd->add_option("--alpha", th_alphas, "Significance level(s)");
    th_cmd->add_option("--T", th_t, "Sample size(s)");
    th_cmd->add_option("--run", th_run, "Which run's population draw to evaluate");
    th_cmd->add_option("--out", th_out, "Output directory (env SCS_OUT_DIR)");

    PanelFlags chk_panel;
    ScreenFlags chk_screen;
    std::string candidate;
    auto* chk_cmd = app.add_subcommand("check", "Test whether one selection is plausibly optimal");
    chk_panel.add(chk_cmd);
    chk_screen.add(chk_cmd);
    chk_cmd->add_option("--candidate", candidate, "Asset labels (A,C,F) or hex mask (0x2a)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputError;
    }

    try {
        if (*scs_cmd) return cmd_scs(scs_panel, scs_screen, scs_out, record_cap);
        if (*metrics_cmd) return cmd_metrics(metrics_scs, metrics_alphas, cii_threshold, metrics_out);
        if (*sim_cmd)
            return cmd_simulate(sim_gen, sim_t, sim_losses, sim_alphas, sim_runs, sim_cov, sim_threads,
                                sim_threads_opt->count() > 0, sim_out);
        if (*th_cmd) return cmd_theory(th_gen, th_losses, th_alphas, th_t, th_run, th_out);
        if (*chk_cmd) return cmd_check(chk_panel, chk_screen, candidate);
    } catch (const InvariantError& e) {
        return fail(kInvariant, "invariant", e.what());
    } catch (const std::domain_error& e) {
        return fail(kDegenerate, "degenerate", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kInputError, "input", e.what());
    } catch (const std::out_of_range& e) {
        return fail(kInputError, "input", e.what());
    } catch (const std::logic_error& e) {
        return fail(kInvariant, "internal", e.what());
    } catch (const std::exception& e) {
        return fail(kInputError, "input", e.what());
    }
    return kInputError;
}
