#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rcf {

// Minimal CSV layer: comma separated, one header row, UTF-8, '.' decimal.
// Cells are kept as strings on read; numeric parsing happens at the schema
// layer where the missing-value policy lives.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

// Locale-independent float formatting; round-trips doubles exactly.
std::string format_double(double v);

// Parses a cell; empty / "NA" / "nan" style cells yield nullopt, anything
// else that fails to parse throws ParseError with row/column context.
std::optional<double> parse_cell(const std::string& cell, int row, const std::string& column);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rcf
