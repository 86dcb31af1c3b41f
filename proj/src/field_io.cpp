#include "plateflow/cli/field_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plateflow::cli {

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string field_csv(const Grid& g, const Field& u)
{
    require_field(g, u, "field");
    std::string out = g.dim() == 1 ? "# x,value\n" : "# x,y,value\n";
    for (Index j = 0; j < g.interior_size(); ++j) {
        const Point x = g.interior_coords(j);
        for (int k = 0; k < g.dim(); ++k) {
            out += format_double(x[static_cast<std::size_t>(k)]);
            out += ',';
        }
        out += format_double(u[j]);
        out += '\n';
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

void write_field_csv(const std::filesystem::path& path, const Grid& g, const Field& u)
{
    write_text(path, field_csv(g, u));
}

namespace {

double parse_cell(const std::string& cell, const std::string& where)
{
    std::size_t a = cell.find_first_not_of(" \t");
    std::size_t b = cell.find_last_not_of(" \t");
    if (a == std::string::npos)
        throw std::runtime_error(where + ": empty cell");
    double v = 0.0;
    const char* first = cell.data() + a;
    const char* last = cell.data() + b + 1;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error(where + ": not a number: '" + cell.substr(a, b + 1 - a) + "'");
    return v;
}

}  // namespace

FieldTable read_field_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    FieldTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        if (line.front() == '#') {
            if (t.dim != 0 || !t.points.empty())
                throw std::runtime_error(where + ": header after data");
            std::size_t commas = 0;
            for (char c : line)
                commas += c == ',';
            if (commas < 1 || commas > 2)
                throw std::runtime_error(where + ": header must list 1 or 2 coordinates and a value");
            t.dim = static_cast<int>(commas);
            continue;
        }
        if (t.dim == 0)
            throw std::runtime_error(where + ": missing '# coords..., value' header");
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (static_cast<int>(cells.size()) != t.dim + 1)
            throw std::runtime_error(where + ": expected " + std::to_string(t.dim + 1) + " columns");
        Point p{0.0, 0.0};
        for (int k = 0; k < t.dim; ++k)
            p[static_cast<std::size_t>(k)] = parse_cell(cells[static_cast<std::size_t>(k)], where);
        t.points.push_back(p);
        t.values.push_back(parse_cell(cells.back(), where));
    }
    if (t.dim == 0)
        throw std::runtime_error(path.string() + ": empty field table");
    return t;
}

Field load_field(const std::filesystem::path& path, const Grid& g)
{
    const FieldTable t = read_field_table(path);
    if (t.dim != g.dim() || static_cast<Index>(t.values.size()) != g.interior_size())
        throw std::runtime_error(path.string() + ": table does not match the grid");
    Field u(g.interior_size());
    for (Index j = 0; j < g.interior_size(); ++j) {
        if (t.points[static_cast<std::size_t>(j)] != g.interior_coords(j))
            throw std::runtime_error(path.string() + ": row " + std::to_string(j + 1) + " is not the expected node");
        u[j] = t.values[static_cast<std::size_t>(j)];
    }
    return u;
}

}  // namespace plateflow::cli
