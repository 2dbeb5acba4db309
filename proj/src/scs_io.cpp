#include "scs/scs_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace scs {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json real_to_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double real_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("unexpected real value '" + s + "'");
    }
    return j.get<double>();
}

std::string hex_bits(std::uint64_t bits) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(bits));
    return buf;
}

std::uint64_t parse_hex_bits(const std::string& text) {
    if (text.rfind("0x", 0) != 0) throw std::invalid_argument("mask '" + text + "' is not 0x-prefixed hex");
    std::uint64_t bits = 0;
    const char* first = text.data() + 2;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, bits, 16);
    if (ec != std::errc{} || ptr != last || first == last) throw std::invalid_argument("cannot parse mask '" + text + "'");
    return bits;
}

}  // namespace

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("format_real: conversion failed");
    return std::string(buf, ptr);
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string cov_mode_name(CovMode mode) { return mode == CovMode::Iid ? "iid" : "gaussian"; }

CovMode parse_cov_mode(const std::string& text) {
    if (text == "iid") return CovMode::Iid;
    if (text == "gaussian") return CovMode::Gaussian;
    throw std::invalid_argument("cov mode must be 'iid' or 'gaussian', got '" + text + "'");
}

std::string to_json(const ScsResult& r, int indent) {
    json j;
    j["format"] = "scs-result";
    j["version"] = kFormatVersion;
    j["n_assets"] = r.n_assets();
    j["asset_labels"] = r.asset_labels;
    j["loss"] = r.loss;
    j["cov_mode"] = cov_mode_name(r.cov_mode);
    j["alpha"] = r.alpha;
    j["quantile"] = r.quantile;
    j["reference"] = hex_bits(r.reference.bits());
    j["reference_loss"] = r.reference_loss;
    j["universe_size"] = r.universe_size;
    j["included_count"] = r.included_count;
    j["degenerate_count"] = r.degenerate_count;
    j["undefined_count"] = r.undefined_count;
    j["records_complete"] = r.records_complete;
    json zq = json::array();
    for (const auto& [p, z] : r.z_quantiles) zq.push_back({{"p", p}, {"z", real_to_json(z)}});
    j["z_quantiles"] = std::move(zq);
    json recs = json::array();
    for (const auto& rec : r.records) {
        recs.push_back({{"mask", hex_bits(rec.mask.bits())},
                        {"loss", real_to_json(rec.loss)},
                        {"z", real_to_json(rec.z)},
                        {"included", rec.included},
                        {"degenerate", rec.degenerate},
                        {"status", to_string(rec.status)}});
    }
    j["records"] = std::move(recs);
    return j.dump(indent);
}

ScsResult scs_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scs.json is not valid JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != "scs-result") throw std::invalid_argument("not an scs-result document");
        if (j.at("version").get<int>() != kFormatVersion) throw std::invalid_argument("unsupported scs-result version");
        const int n = j.at("n_assets").get<int>();
        ScsResult r;
        r.asset_labels = j.at("asset_labels").get<std::vector<std::string>>();
        if (static_cast<int>(r.asset_labels.size()) != n) throw std::invalid_argument("label count does not match n_assets");
        r.loss = j.at("loss").get<std::string>();
        r.cov_mode = parse_cov_mode(j.at("cov_mode").get<std::string>());
        r.alpha = j.at("alpha").get<double>();
        r.quantile = j.at("quantile").get<double>();
        r.reference = SelectionMask(parse_hex_bits(j.at("reference").get<std::string>()), n);
        r.reference_loss = j.at("reference_loss").get<double>();
        r.universe_size = j.at("universe_size").get<std::uint64_t>();
        r.included_count = j.at("included_count").get<std::uint64_t>();
        r.degenerate_count = j.at("degenerate_count").get<std::uint64_t>();
        r.undefined_count = j.at("undefined_count").get<std::uint64_t>();
        r.records_complete = j.at("records_complete").get<bool>();
        for (const auto& q : j.at("z_quantiles")) r.z_quantiles.emplace_back(q.at("p").get<double>(), real_from_json(q.at("z")));
        const auto& recs = j.at("records");
        r.records.reserve(recs.size());
        std::uint64_t included = 0;
        for (const auto& rec : recs) {
            ScsRecord out{SelectionMask(parse_hex_bits(rec.at("mask").get<std::string>()), n),
                          real_from_json(rec.at("loss")),
                          real_from_json(rec.at("z")),
                          rec.at("included").get<bool>(),
                          rec.at("degenerate").get<bool>(),
                          record_status_from_string(rec.at("status").get<std::string>())};
            included += out.included ? 1 : 0;
            r.records.push_back(out);
        }
        if (included != r.included_count) throw std::invalid_argument("included_count does not match the records");
        return r;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed scs.json: ") + e.what());
    }
}

void write_scs_json(const ScsResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << to_json(result) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

ScsResult read_scs_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scs_from_json(text);
}

void write_records_csv(const ScsResult& result, std::ostream& out) {
    out << "mask,labels,loss,z,included,degenerate,status\r\n";
    for (const auto& rec : result.records) {
        std::string labels;
        for (int j = 0; j < rec.mask.universe(); ++j) {
            if (!rec.mask.contains(j)) continue;
            if (!labels.empty()) labels += ';';
            labels += result.asset_labels.at(static_cast<std::size_t>(j));
        }
        out << hex_bits(rec.mask.bits()) << ',' << csv_field(labels) << ',' << format_real(rec.loss) << ','
            << format_real(rec.z) << ',' << (rec.included ? 1 : 0) << ',' << (rec.degenerate ? 1 : 0) << ','
            << to_string(rec.status) << "\r\n";
    }
}

void write_records_csv(const ScsResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_records_csv(result, out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace scs
