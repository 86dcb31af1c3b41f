#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateflow/problem.hpp"
#include "plateflow/step.hpp"

namespace plateflow::cli {

/// One problem found while reading a run configuration. Line and column are
/// 1-based; 0 means the error is not tied to a position.
struct ConfigError {
    enum class Kind { Syntax, UnknownSection, UnknownKey, DuplicateKey, MissingKey, Type, Constraint, File };
    Kind kind = Kind::Syntax;
    int line = 0;
    int column = 0;
    std::string message;
};

std::string to_string(ConfigError::Kind kind);

/// "line 3, column 7: syntax: expected '='"
std::string describe(const ConfigError& e);

class ConfigParseError : public std::runtime_error {
public:
    explicit ConfigParseError(std::vector<ConfigError> errors);
    const std::vector<ConfigError>& errors() const { return errors_; }

private:
    std::vector<ConfigError> errors_;
};

/**
 * A scalar field given as a sum of built-in terms joined by " + ":
 *   const:c                 c
 *   affine:a0,a1[,a2]       a0 + a1 x + a2 y (one slope per axis)
 *   bump:A,c,w              A exp(-|x - c|^2 / w^2), 1D
 *   bump:A,cx,cy,w          the same in 2D
 *   file:path               node values from a CSV table
 */
struct FieldTerm {
    enum class Kind { Constant, Affine, Bump, File };
    Kind kind = Kind::Constant;
    std::vector<double> params;
    std::filesystem::path path;
    std::vector<Point> table_points;
    std::vector<double> table_values;
};

struct FieldSpec {
    std::string text;
    std::vector<FieldTerm> terms;
};

/// Throws std::invalid_argument with a message on malformed specs or
/// parameter counts that do not fit `dim`; file terms are loaded relative to
/// `base_dir` and throw std::runtime_error when unreadable.
FieldSpec parse_field_spec(const std::string& text, int dim, const std::filesystem::path& base_dir);

/// Evaluates the spec at a node; file terms throw std::out_of_range for
/// points missing from the table.
Sampler make_sampler(const FieldSpec& spec);

/// Which step indices get a field file.
struct FieldSelection {
    enum class Mode { None, All, Last, List };
    Mode mode = Mode::All;
    std::vector<int> indices;

    std::vector<int> resolve(int n_steps) const;
    std::string text() const;
};

struct RunConfig {
    int dim = 1;
    std::vector<double> lengths;
    std::vector<Index> interior_counts;
    FieldSpec obstacle;
    FieldSpec initial;
    double horizon = 1.0;
    int n_steps = 1;
    StepConfig step;
    std::string out_dir;
    FieldSelection fields;
    bool emit_diagnostics = true;
    bool emit_aggregates = true;

    Grid grid() const;
    ObstacleProblem problem() const;
};

/**
 * Reads the `key = value` / `[section]` grammar. Blank lines and lines
 * starting with '#' or ';' are ignored; values may be wrapped in double
 * quotes. Sections and keys:
 *   [domain]  dim, L, m
 *   [problem] f, u0
 *   [time]    T, n
 *   [solver]  strategy, eps_schedule, newton_tol, max_newton_iters, fallback_pg_iters
 *   [output]  dir, fields (all | none | last | comma list), diagnostics, aggregates
 * L and m take one value per axis or a single value for all axes.
 * Throws ConfigParseError carrying every error found.
 */
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads and parses a file; relative file terms resolve against its directory.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace plateflow::cli
