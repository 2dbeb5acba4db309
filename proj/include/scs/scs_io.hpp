#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "scs/screening.hpp"

namespace scs {

/// Shortest decimal spelling that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_real(double value);

/// RFC-4180 field: quoted when it holds a delimiter, quote, or line break.
std::string csv_field(std::string_view text);

std::string cov_mode_name(CovMode mode);
CovMode parse_cov_mode(const std::string& text);

/// Full serialization. Infinite z values are written as the string "inf",
/// undefined losses as null.
std::string to_json(const ScsResult& result, int indent = 2);
ScsResult scs_from_json(const std::string& text);

void write_scs_json(const ScsResult& result, const std::filesystem::path& path);
ScsResult read_scs_json(const std::filesystem::path& path);

/// Records table: mask,labels,loss,z,included,degenerate,status. Labels of the
/// selected assets are joined with ';'.
void write_records_csv(const ScsResult& result, std::ostream& out);
void write_records_csv(const ScsResult& result, const std::filesystem::path& path);

}  // namespace scs
