#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plateflow/grid.hpp"

namespace plateflow::cli {

/// printf "%.17g": enough digits for strtod to recover the exact double.
std::string format_double(double v);

/// CSV text for an interior field: header "# x,value" (or "# x,y,value"),
/// then one row per interior node in lexicographic order.
std::string field_csv(const Grid& g, const Field& u);

void write_field_csv(const std::filesystem::path& path, const Grid& g, const Field& u);

struct FieldTable {
    int dim = 0;
    std::vector<Point> points;
    std::vector<double> values;
};

/// Parses the CSV layout above; the header fixes the dimension. Throws
/// std::runtime_error naming the file and line on malformed input.
FieldTable read_field_table(const std::filesystem::path& path);

/// Reads a field file written for `g`; every interior node must appear in
/// order with matching coordinates.
Field load_field(const std::filesystem::path& path, const Grid& g);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace plateflow::cli
