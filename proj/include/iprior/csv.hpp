#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iprior::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 style: comma separated, optional double quotes with "" escapes,
/// CRLF or LF line ends. A header row is required; every record must have
/// exactly as many fields as the header.
Table parse(std::string_view text);
Table read(const std::filesystem::path &path);

std::string quote(std::string_view field);
/// Shortest representation that round-trips to the same double.
std::string format_number(double value);
std::string join_row(const std::vector<std::string> &fields);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path &path, std::string_view content);

} // namespace iprior::csv
