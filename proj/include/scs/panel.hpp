#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scs/selection.hpp"

namespace scs {

class PanelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// T x N matrix of per-period asset returns, stored column-major so that a
/// single asset's history is contiguous. Immutable after construction.
class ReturnPanel {
public:
    /// `column_major` holds N columns of length T back to back.
    ReturnPanel(std::vector<double> column_major, std::size_t periods,
                std::vector<std::string> asset_labels,
                int max_assets = kDefaultMaxAssets);

    /// Builds from row-major rows (each row is one period).
    static ReturnPanel from_rows(const std::vector<std::vector<double>>& rows,
                                 std::vector<std::string> asset_labels,
                                 int max_assets = kDefaultMaxAssets);

    std::size_t periods() const noexcept { return periods_; }
    int assets() const noexcept { return static_cast<int>(labels_.size()); }
    int max_assets() const noexcept { return max_assets_; }

    std::span<const double> column(int j) const {
        return {data_.data() + static_cast<std::size_t>(j) * periods_, periods_};
    }
    double at(std::size_t t, int j) const { return data_[static_cast<std::size_t>(j) * periods_ + t]; }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    int label_index(const std::string& label) const;  // -1 when absent

private:
    std::vector<double> data_;
    std::size_t periods_;
    std::vector<std::string> labels_;
    int max_assets_;
};

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
    bool date_column = false;
    double scale = 1.0;  // multiplies every parsed value (0.01 for percent input)
    int max_assets = kDefaultMaxAssets;
};

ReturnPanel load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
ReturnPanel parse_csv(const std::string& text, const CsvOptions& options = {});

/// Writes with 17 significant digits, so `parse_csv` reproduces every value exactly.
std::string to_csv(const ReturnPanel& panel, char delimiter = ',');

/// prices is row-major, one row per period. Returns ln(p[t+1]/p[t]).
ReturnPanel log_returns(const std::vector<std::vector<double>>& prices,
                        std::vector<std::string> asset_labels,
                        int max_assets = kDefaultMaxAssets);

struct PanelDiagnostic {
    enum class Kind { ZeroVariance, DuplicatePair, TooManyAssets };
    Kind kind;
    int first = -1;
    int second = -1;
    std::string message;
};

/// Diagnostic only; an empty list means the panel is clean.
std::vector<PanelDiagnostic> validate(const ReturnPanel& panel, int max_assets = kDefaultMaxAssets);

}  // namespace scs
