#include "scs/panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace scs {

namespace {

std::string describe_position(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec == std::errc() && ptr == end) return true;
    // from_chars rejects "nan"/"inf" spellings on some inputs; fall back to strtod.
    char* stop = nullptr;
    out = std::strtod(text.c_str(), &stop);
    return !text.empty() && stop == text.c_str() + text.size();
}

}  // namespace

ReturnPanel::ReturnPanel(std::vector<double> column_major, std::size_t periods,
                         std::vector<std::string> asset_labels, int max_assets)
    : data_(std::move(column_major)), periods_(periods), labels_(std::move(asset_labels)),
      max_assets_(max_assets) {
    const int n = assets();
    if (periods_ < 2) throw PanelError("panel needs at least 2 periods, got " + std::to_string(periods_));
    if (n < 1) throw PanelError("panel needs at least one asset");
    if (n > max_assets_)
        throw PanelError("panel has " + std::to_string(n) + " assets, limit is " + std::to_string(max_assets_));
    if (data_.size() != periods_ * static_cast<std::size_t>(n))
        throw PanelError("panel data size does not match T x N");
    std::set<std::string> seen;
    for (const auto& label : labels_) {
        if (label.empty()) throw PanelError("empty asset label");
        if (!seen.insert(label).second) throw PanelError("duplicate asset label '" + label + "'");
    }
    for (int j = 0; j < n; ++j) {
        for (std::size_t t = 0; t < periods_; ++t) {
            if (!std::isfinite(at(t, j)))
                throw PanelError("non-finite value at " + describe_position(t, static_cast<std::size_t>(j)));
        }
    }
}

ReturnPanel ReturnPanel::from_rows(const std::vector<std::vector<double>>& rows,
                                   std::vector<std::string> asset_labels, int max_assets) {
    const std::size_t n = asset_labels.size();
    std::vector<double> data(rows.size() * n);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != n)
            throw PanelError("row " + std::to_string(t) + " has " + std::to_string(rows[t].size()) +
                             " fields, expected " + std::to_string(n));
        for (std::size_t j = 0; j < n; ++j) data[j * rows.size() + t] = rows[t][j];
    }
    return ReturnPanel(std::move(data), rows.size(), std::move(asset_labels), max_assets);
}

int ReturnPanel::label_index(const std::string& label) const {
    for (int j = 0; j < assets(); ++j) {
        if (labels_[static_cast<std::size_t>(j)] == label) return j;
    }
    return -1;
}

ReturnPanel parse_csv(const std::string& text, const CsvOptions& options) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t expected = 0;
    bool have_width = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_line(line, options.delimiter);
        if (options.date_column) {
            if (fields.size() < 2) throw PanelError("line " + std::to_string(line_no) + ": missing data after date column");
            fields.erase(fields.begin());
        }
        if (options.header && labels.empty()) {
            for (auto& f : fields) labels.push_back(trim(f));
            expected = labels.size();
            have_width = true;
            continue;
        }
        if (!have_width) {
            expected = fields.size();
            have_width = true;
        }
        if (fields.size() != expected)
            throw PanelError("malformed row " + std::to_string(rows.size()) + " (line " + std::to_string(line_no) +
                             "): " + std::to_string(fields.size()) + " fields, expected " + std::to_string(expected));
        std::vector<double> row(expected);
        for (std::size_t j = 0; j < expected; ++j) {
            const std::string cell = trim(fields[j]);
            double v = 0.0;
            if (!parse_double(cell, v))
                throw PanelError("malformed value '" + cell + "' at " + describe_position(rows.size(), j));
            if (!std::isfinite(v))
                throw PanelError("non-finite value at " + describe_position(rows.size(), j));
            row[j] = v * options.scale;
        }
        rows.push_back(std::move(row));
    }
    if (!have_width) throw PanelError("empty CSV input");
    if (labels.empty()) {
        for (std::size_t j = 0; j < expected; ++j) labels.push_back("A" + std::to_string(j + 1));
    }
    return ReturnPanel::from_rows(rows, std::move(labels), options.max_assets);
}

ReturnPanel load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PanelError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), options);
}

std::string to_csv(const ReturnPanel& panel, char delimiter) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto& labels = panel.labels();
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j) out << delimiter;
        out << labels[j];
    }
    out << '\n';
    for (std::size_t t = 0; t < panel.periods(); ++t) {
        for (int j = 0; j < panel.assets(); ++j) {
            if (j) out << delimiter;
            out << panel.at(t, j);
        }
        out << '\n';
    }
    return out.str();
}

ReturnPanel log_returns(const std::vector<std::vector<double>>& prices,
                        std::vector<std::string> asset_labels, int max_assets) {
    if (prices.size() < 3)
        throw PanelError("log returns need at least 3 price rows, got " + std::to_string(prices.size()));
    const std::size_t n = asset_labels.size();
    std::vector<std::vector<double>> rows(prices.size() - 1, std::vector<double>(n));
    for (std::size_t t = 0; t < prices.size(); ++t) {
        if (prices[t].size() != n) throw PanelError("price row " + std::to_string(t) + " has wrong width");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(prices[t][j] > 0.0))
                throw PanelError("nonpositive price at " + describe_position(t, j));
        }
        if (t > 0) {
            for (std::size_t j = 0; j < n; ++j) rows[t - 1][j] = std::log(prices[t][j] / prices[t - 1][j]);
        }
    }
    return ReturnPanel::from_rows(rows, std::move(asset_labels), max_assets);
}

std::vector<PanelDiagnostic> validate(const ReturnPanel& panel, int max_assets) {
    std::vector<PanelDiagnostic> out;
    const int n = panel.assets();
    const auto t_count = static_cast<double>(panel.periods());
    std::vector<double> mean(static_cast<std::size_t>(n)), sd(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto col = panel.column(j);
        double s = 0.0;
        for (double x : col) s += x;
        const double m = s / t_count;
        double ss = 0.0;
        for (double x : col) ss += (x - m) * (x - m);
        mean[static_cast<std::size_t>(j)] = m;
        sd[static_cast<std::size_t>(j)] = std::sqrt(ss / (t_count - 1.0));
        if (ss == 0.0)
            out.push_back({PanelDiagnostic::Kind::ZeroVariance, j, -1,
                           "zero variance: column " + std::to_string(j) + " (" + panel.labels()[static_cast<std::size_t>(j)] + ")"});
    }
    for (int i = 0; i < n; ++i) {
        if (sd[static_cast<std::size_t>(i)] == 0.0) continue;
        for (int j = i + 1; j < n; ++j) {
            if (sd[static_cast<std::size_t>(j)] == 0.0) continue;
            auto a = panel.column(i);
            auto b = panel.column(j);
            double c = 0.0;
            for (std::size_t t = 0; t < a.size(); ++t)
                c += (a[t] - mean[static_cast<std::size_t>(i)]) * (b[t] - mean[static_cast<std::size_t>(j)]);
            const double corr = c / (t_count - 1.0) / (sd[static_cast<std::size_t>(i)] * sd[static_cast<std::size_t>(j)]);
            if (corr > 1.0 - 1e-12)
                out.push_back({PanelDiagnostic::Kind::DuplicatePair, i, j,
                               "duplicate pair: columns " + std::to_string(i) + " and " + std::to_string(j)});
        }
    }
    if (n > max_assets)
        out.push_back({PanelDiagnostic::Kind::TooManyAssets, -1, -1,
                       "asset count " + std::to_string(n) + " exceeds limit " + std::to_string(max_assets)});
    return out;
}

}  // namespace scs
