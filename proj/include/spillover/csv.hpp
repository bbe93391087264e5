#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace spillover {

// Header-plus-rows view of a delimited text file. Fields may be wrapped in
// double quotes; a doubled quote inside quotes is a literal quote.
struct DelimitedTable {
    char delimiter = ',';
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    /// Column position by name; throws InputError when absent.
    std::size_t column(std::string_view name) const;
};

std::vector<std::string> split_delimited(std::string_view line, char delimiter);

/// Tab when the header line contains one, else comma.
char detect_delimiter(std::string_view header_line);

/// Reads a header row and data rows. Blank lines are skipped; rows whose
/// width differs from the header raise ParseError. `delimiter` 0 means detect.
DelimitedTable read_delimited(std::istream& in, char delimiter = 0);
DelimitedTable read_delimited_file(const std::string& path, char delimiter = 0);

/// Writes to `path + ".tmp"` then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace spillover
