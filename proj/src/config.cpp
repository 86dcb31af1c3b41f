#include "plateflow/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "plateflow/cli/field_io.hpp"

namespace plateflow::cli {

std::string to_string(ConfigError::Kind kind)
{
    switch (kind) {
    case ConfigError::Kind::Syntax: return "syntax";
    case ConfigError::Kind::UnknownSection: return "unknown_section";
    case ConfigError::Kind::UnknownKey: return "unknown_key";
    case ConfigError::Kind::DuplicateKey: return "duplicate_key";
    case ConfigError::Kind::MissingKey: return "missing_key";
    case ConfigError::Kind::Type: return "type";
    case ConfigError::Kind::Constraint: return "constraint";
    case ConfigError::Kind::File: return "file";
    }
    return "unknown";
}

std::string describe(const ConfigError& e)
{
    std::string out;
    if (e.line > 0) {
        out += "line " + std::to_string(e.line);
        if (e.column > 0)
            out += ", column " + std::to_string(e.column);
        out += ": ";
    }
    return out + to_string(e.kind) + ": " + e.message;
}

namespace {

std::string join_errors(const std::vector<ConfigError>& errors)
{
    std::string out = "invalid configuration";
    for (const ConfigError& e : errors)
        out += "\n  " + describe(e);
    return out;
}

std::string trim(const std::string& s)
{
    const std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return {};
    const std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b + 1 - a);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep))
        out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

std::optional<double> to_double(const std::string& s)
{
    double v = 0.0;
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), last, v);
    if (s.empty() || ec != std::errc() || ptr != last)
        return std::nullopt;
    return v;
}

std::optional<long> to_long(const std::string& s)
{
    long v = 0;
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), last, v);
    if (s.empty() || ec != std::errc() || ptr != last)
        return std::nullopt;
    return v;
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    for (const std::string& part : split(s, ',')) {
        const auto v = to_double(part);
        if (!v)
            throw std::invalid_argument(what + ": '" + part + "' is not a number");
        out.push_back(*v);
    }
    return out;
}

}  // namespace

ConfigParseError::ConfigParseError(std::vector<ConfigError> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors))
{
}

FieldSpec parse_field_spec(const std::string& text, int dim, const std::filesystem::path& base_dir)
{
    FieldSpec spec;
    spec.text = text;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = text.find(" + ", start);
        parts.push_back(trim(text.substr(start, at == std::string::npos ? std::string::npos : at - start)));
        if (at == std::string::npos)
            break;
        start = at + 3;
    }
    for (const std::string& part : parts) {
        const std::size_t colon = part.find(':');
        if (part.empty() || colon == std::string::npos)
            throw std::invalid_argument("field term '" + part + "' must look like kind:params");
        const std::string kind = part.substr(0, colon);
        const std::string args = trim(part.substr(colon + 1));
        FieldTerm term;
        if (kind == "const") {
            term.kind = FieldTerm::Kind::Constant;
            term.params = parse_numbers(args, "const");
            if (term.params.size() != 1)
                throw std::invalid_argument("const takes one value");
        } else if (kind == "affine") {
            term.kind = FieldTerm::Kind::Affine;
            term.params = parse_numbers(args, "affine");
            if (static_cast<int>(term.params.size()) != 1 + dim)
                throw std::invalid_argument("affine takes an offset and " + std::to_string(dim) + " slope(s)");
        } else if (kind == "bump") {
            term.kind = FieldTerm::Kind::Bump;
            term.params = parse_numbers(args, "bump");
            if (static_cast<int>(term.params.size()) != 2 + dim)
                throw std::invalid_argument(dim == 1 ? "bump takes A,c,w" : "bump takes A,cx,cy,w");
            if (!(term.params.back() > 0.0))
                throw std::invalid_argument("bump width must be positive");
        } else if (kind == "file") {
            term.kind = FieldTerm::Kind::File;
            if (args.empty())
                throw std::invalid_argument("file term needs a path");
            term.path = std::filesystem::path(args);
            if (term.path.is_relative() && !base_dir.empty())
                term.path = base_dir / term.path;
            if (!std::filesystem::exists(term.path))
                throw std::runtime_error("file not found: " + term.path.string());
            const FieldTable t = read_field_table(term.path);
            if (t.dim != dim)
                throw std::invalid_argument("table " + term.path.string() + " has dimension " +
                                            std::to_string(t.dim));
            term.table_points = t.points;
            term.table_values = t.values;
        } else {
            throw std::invalid_argument("unknown field kind '" + kind + "'");
        }
        for (double p : term.params)
            if (!std::isfinite(p))
                throw std::invalid_argument("field parameters must be finite");
        spec.terms.push_back(std::move(term));
    }
    return spec;
}

Sampler make_sampler(const FieldSpec& spec)
{
    return [terms = spec.terms](const Point& x) {
        double sum = 0.0;
        for (const FieldTerm& t : terms) {
            const auto& p = t.params;
            switch (t.kind) {
            case FieldTerm::Kind::Constant:
                sum += p[0];
                break;
            case FieldTerm::Kind::Affine:
                sum += p[0];
                for (std::size_t k = 1; k < p.size(); ++k)
                    sum += p[k] * x[k - 1];
                break;
            case FieldTerm::Kind::Bump: {
                const double w = p.back();
                double r2 = 0.0;
                for (std::size_t k = 1; k + 1 < p.size(); ++k)
                    r2 += (x[k - 1] - p[k]) * (x[k - 1] - p[k]);
                sum += p[0] * std::exp(-r2 / (w * w));
                break;
            }
            case FieldTerm::Kind::File: {
                std::size_t best = t.table_points.size();
                double best_d = 1e-9;
                for (std::size_t r = 0; r < t.table_points.size(); ++r) {
                    const double d = std::max(std::abs(t.table_points[r][0] - x[0]),
                                              std::abs(t.table_points[r][1] - x[1]));
                    if (d <= best_d) {
                        best_d = d;
                        best = r;
                    }
                }
                if (best == t.table_points.size())
                    throw std::out_of_range("node (" + format_double(x[0]) + ", " + format_double(x[1]) +
                                            ") missing from " + t.path.string());
                sum += t.table_values[best];
                break;
            }
            }
        }
        return sum;
    };
}

std::vector<int> FieldSelection::resolve(int n_steps) const
{
    std::vector<int> out;
    switch (mode) {
    case Mode::None:
        break;
    case Mode::All:
        for (int i = 0; i <= n_steps; ++i)
            out.push_back(i);
        break;
    case Mode::Last:
        out.push_back(n_steps);
        break;
    case Mode::List:
        for (int i : indices)
            if (i <= n_steps)
                out.push_back(i);
        break;
    }
    return out;
}

std::string FieldSelection::text() const
{
    switch (mode) {
    case Mode::None: return "none";
    case Mode::All: return "all";
    case Mode::Last: return "last";
    case Mode::List: break;
    }
    std::string out;
    for (std::size_t k = 0; k < indices.size(); ++k)
        out += (k ? ", " : "") + std::to_string(indices[k]);
    return out;
}

Grid RunConfig::grid() const
{
    return Grid::build(dim, lengths, interior_counts);
}

ObstacleProblem RunConfig::problem() const
{
    return ObstacleProblem::build(grid(), make_sampler(obstacle), make_sampler(initial));
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
    int value_column = 0;
};

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"domain", {"dim", "L", "m"}},
        {"problem", {"f", "u0"}},
        {"time", {"T", "n"}},
        {"solver", {"strategy", "eps_schedule", "newton_tol", "max_newton_iters", "fallback_pg_iters"}},
        {"output", {"dir", "fields", "diagnostics", "aggregates"}},
    };
    return keys;
}

class Reader {
public:
    Reader(const std::map<std::string, Entry>& entries, std::vector<ConfigError>& errors)
        : entries_(entries), errors_(errors)
    {
    }

    const Entry* find(const std::string& key, bool required)
    {
        const auto it = entries_.find(key);
        if (it != entries_.end())
            return &it->second;
        if (required)
            errors_.push_back({ConfigError::Kind::MissingKey, 0, 0, "missing required key " + key});
        return nullptr;
    }

    void error(ConfigError::Kind kind, const Entry& e, const std::string& message)
    {
        errors_.push_back({kind, e.line, e.value_column, message});
    }

    std::optional<double> number(const std::string& key, bool required)
    {
        const Entry* e = find(key, required);
        if (!e)
            return std::nullopt;
        const auto v = to_double(e->value);
        if (!v || !std::isfinite(*v)) {
            error(ConfigError::Kind::Type, *e, key + " expects a number, got '" + e->value + "'");
            return std::nullopt;
        }
        return v;
    }

    std::optional<long> integer(const std::string& key, bool required)
    {
        const Entry* e = find(key, required);
        if (!e)
            return std::nullopt;
        const auto v = to_long(e->value);
        if (!v) {
            error(ConfigError::Kind::Type, *e, key + " expects an integer, got '" + e->value + "'");
            return std::nullopt;
        }
        return v;
    }

    std::optional<bool> boolean(const std::string& key)
    {
        const Entry* e = find(key, false);
        if (!e)
            return std::nullopt;
        if (e->value == "true" || e->value == "yes" || e->value == "1")
            return true;
        if (e->value == "false" || e->value == "no" || e->value == "0")
            return false;
        error(ConfigError::Kind::Type, *e, key + " expects true or false, got '" + e->value + "'");
        return std::nullopt;
    }

    template <class T, class Convert>
    std::optional<std::vector<T>> list(const std::string& key, bool required, Convert convert, const char* type)
    {
        const Entry* e = find(key, required);
        if (!e)
            return std::nullopt;
        std::vector<T> out;
        for (const std::string& part : split(e->value, ',')) {
            const auto v = convert(part);
            if (!v) {
                error(ConfigError::Kind::Type, *e, key + " expects a comma list of " + type + ", got '" + part + "'");
                return std::nullopt;
            }
            out.push_back(static_cast<T>(*v));
        }
        return out;
    }

private:
    const std::map<std::string, Entry>& entries_;
    std::vector<ConfigError>& errors_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    std::vector<ConfigError> errors;
    std::map<std::string, Entry> entries;
    std::string section;
    bool section_known = false;

    std::stringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        const std::size_t first = raw.find_first_not_of(" \t");
        if (first == std::string::npos || raw[first] == '#' || raw[first] == ';')
            continue;
        const int col0 = static_cast<int>(first) + 1;

        if (raw[first] == '[') {
            const std::size_t close = raw.find(']', first);
            if (close == std::string::npos) {
                errors.push_back({ConfigError::Kind::Syntax, lineno, static_cast<int>(raw.size()) + 1,
                                  "expected ']' to close the section header"});
                section_known = false;
                continue;
            }
            if (raw.find_first_not_of(" \t", close + 1) != std::string::npos) {
                errors.push_back({ConfigError::Kind::Syntax, lineno,
                                  static_cast<int>(raw.find_first_not_of(" \t", close + 1)) + 1,
                                  "unexpected text after section header"});
            }
            section = trim(raw.substr(first + 1, close - first - 1));
            section_known = known_keys().count(section) > 0;
            if (!section_known)
                errors.push_back({ConfigError::Kind::UnknownSection, lineno, col0 + 1,
                                  "unknown section [" + section + "]"});
            continue;
        }

        const std::size_t eq = raw.find('=');
        if (eq == std::string::npos) {
            errors.push_back({ConfigError::Kind::Syntax, lineno, static_cast<int>(raw.find_last_not_of(" \t")) + 2,
                              "expected '=' after key"});
            continue;
        }
        const std::string key = trim(raw.substr(first, eq - first));
        if (key.empty()) {
            errors.push_back({ConfigError::Kind::Syntax, lineno, static_cast<int>(eq) + 1, "missing key before '='"});
            continue;
        }
        if (key.find_first_of(" \t") != std::string::npos) {
            errors.push_back({ConfigError::Kind::Syntax, lineno, col0 + static_cast<int>(key.find_first_of(" \t")),
                              "key '" + key + "' contains whitespace"});
            continue;
        }
        std::string value = trim(raw.substr(eq + 1));
        const std::size_t vpos = raw.find_first_not_of(" \t", eq + 1);
        const int vcol = vpos == std::string::npos ? static_cast<int>(raw.size()) + 1 : static_cast<int>(vpos) + 1;
        if (!value.empty() && value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                errors.push_back({ConfigError::Kind::Syntax, lineno, static_cast<int>(raw.size()) + 1,
                                  "unterminated quoted value"});
                continue;
            }
            value = value.substr(1, value.size() - 2);
        }
        if (section.empty()) {
            errors.push_back({ConfigError::Kind::Syntax, lineno, col0, "key '" + key + "' appears before any [section]"});
            continue;
        }
        if (!section_known)
            continue;
        if (!known_keys().at(section).count(key)) {
            errors.push_back({ConfigError::Kind::UnknownKey, lineno, col0,
                              "unknown key '" + key + "' in [" + section + "]"});
            continue;
        }
        const std::string full = section + "." + key;
        const auto prior = entries.find(full);
        if (prior != entries.end()) {
            errors.push_back({ConfigError::Kind::DuplicateKey, lineno, col0,
                              "key " + full + " on line " + std::to_string(lineno) + " duplicates line " +
                                  std::to_string(prior->second.line)});
            continue;
        }
        entries[full] = Entry{value, lineno, vcol};
    }

    RunConfig cfg;
    Reader r(entries, errors);
    using Kind = ConfigError::Kind;

    bool domain_ok = true;
    if (const auto dim = r.integer("domain.dim", true)) {
        if (*dim != 1 && *dim != 2) {
            r.error(Kind::Constraint, *r.find("domain.dim", true), "dim must be 1 or 2, got " + std::to_string(*dim));
            domain_ok = false;
        } else {
            cfg.dim = static_cast<int>(*dim);
        }
    } else {
        domain_ok = false;
    }
    const auto broadcast = [&](auto values, const char* key) {
        if (values && domain_ok && values->size() == 1 && cfg.dim == 2)
            values->push_back(values->front());
        if (values && domain_ok && static_cast<int>(values->size()) != cfg.dim) {
            r.error(Kind::Constraint, *r.find(key, true),
                    std::string(key) + " needs 1 or " + std::to_string(cfg.dim) + " values");
            values.reset();
        }
        return values;
    };
    const auto lengths = broadcast(r.list<double>("domain.L", true, to_double, "numbers"), "domain.L");
    const auto counts = broadcast(r.list<Index>("domain.m", true, to_long, "integers"), "domain.m");
    if (lengths) {
        for (double l : *lengths)
            if (!(l > 0.0) || !std::isfinite(l)) {
                r.error(Kind::Constraint, *r.find("domain.L", true), "lengths must be positive");
                domain_ok = false;
                break;
            }
        cfg.lengths = *lengths;
    } else {
        domain_ok = false;
    }
    if (counts) {
        for (Index m : *counts)
            if (m < 1) {
                r.error(Kind::Constraint, *r.find("domain.m", true), "interior counts must be >= 1");
                domain_ok = false;
                break;
            }
        cfg.interior_counts = *counts;
    } else {
        domain_ok = false;
    }

    bool fields_ok = domain_ok;
    for (auto [key, target] : {std::pair{"problem.f", &cfg.obstacle}, std::pair{"problem.u0", &cfg.initial}}) {
        const Entry* e = r.find(key, true);
        if (!e) {
            fields_ok = false;
            continue;
        }
        if (!domain_ok)
            continue;
        try {
            *target = parse_field_spec(e->value, cfg.dim, base_dir);
        } catch (const std::invalid_argument& ex) {
            r.error(Kind::Type, *e, ex.what());
            fields_ok = false;
        } catch (const std::exception& ex) {
            r.error(Kind::File, *e, ex.what());
            fields_ok = false;
        }
    }

    if (const auto t = r.number("time.T", true)) {
        if (!(*t > 0.0))
            r.error(Kind::Constraint, *r.find("time.T", true), "T must be positive");
        cfg.horizon = *t;
    }
    if (const auto n = r.integer("time.n", true)) {
        if (*n < 1 || *n > 100000000)
            r.error(Kind::Constraint, *r.find("time.n", true), "n must be a positive step count");
        cfg.n_steps = static_cast<int>(std::clamp<long>(*n, 1, 100000000));
    }

    if (const Entry* e = r.find("solver.strategy", false)) {
        try {
            cfg.step.solver = parse_strategy(e->value);
        } catch (const std::invalid_argument&) {
            r.error(Kind::Type, *e, "strategy must be penalty_then_polish, active_set or penalty_only");
        }
    }
    if (const auto s = r.list<double>("solver.eps_schedule", false, to_double, "numbers")) {
        bool ok = !s->empty();
        for (std::size_t k = 0; k < s->size(); ++k)
            ok = ok && (*s)[k] > 0.0 && (k == 0 || (*s)[k] < (*s)[k - 1]);
        if (!ok)
            r.error(Kind::Constraint, *r.find("solver.eps_schedule", false),
                    "eps_schedule must be positive and strictly decreasing");
        cfg.step.penalty_eps_schedule = *s;
    }
    if (const auto v = r.number("solver.newton_tol", false)) {
        if (!(*v > 0.0))
            r.error(Kind::Constraint, *r.find("solver.newton_tol", false), "newton_tol must be positive");
        cfg.step.newton_tol = *v;
    }
    if (const auto v = r.integer("solver.max_newton_iters", false)) {
        if (*v < 1 || *v > 1000000)
            r.error(Kind::Constraint, *r.find("solver.max_newton_iters", false), "max_newton_iters must be >= 1");
        cfg.step.max_newton_iters = static_cast<int>(std::clamp<long>(*v, 1, 1000000));
    }
    if (const auto v = r.integer("solver.fallback_pg_iters", false)) {
        if (*v < 1)
            r.error(Kind::Constraint, *r.find("solver.fallback_pg_iters", false), "fallback_pg_iters must be >= 1");
        cfg.step.fallback_pg_iters = *v;
    }

    if (const Entry* e = r.find("output.dir", false))
        cfg.out_dir = e->value;
    if (const Entry* e = r.find("output.fields", false)) {
        if (e->value == "all") {
            cfg.fields.mode = FieldSelection::Mode::All;
        } else if (e->value == "none") {
            cfg.fields.mode = FieldSelection::Mode::None;
        } else if (e->value == "last") {
            cfg.fields.mode = FieldSelection::Mode::Last;
        } else if (const auto list = r.list<int>("output.fields", false, to_long, "step indices")) {
            cfg.fields.mode = FieldSelection::Mode::List;
            cfg.fields.indices = *list;
            for (int i : *list)
                if (i < 0) {
                    r.error(Kind::Constraint, *e, "field step indices must be >= 0");
                    break;
                }
        }
    }
    if (const auto b = r.boolean("output.diagnostics"))
        cfg.emit_diagnostics = *b;
    if (const auto b = r.boolean("output.aggregates"))
        cfg.emit_aggregates = *b;

    if (errors.empty() && fields_ok) {
        try {
            (void)cfg.problem();
        } catch (const ObstacleViolation& ex) {
            r.error(Kind::Constraint, *r.find("problem.u0", true), ex.what());
        } catch (const ProblemError& ex) {
            r.error(Kind::Constraint, *r.find("problem.f", true), ex.what());
        } catch (const std::out_of_range& ex) {
            r.error(Kind::File, *r.find("problem.f", true), ex.what());
        } catch (const std::invalid_argument& ex) {
            r.error(Kind::Constraint, *r.find("domain.m", true), ex.what());
        }
    }

    if (!errors.empty()) {
        std::stable_sort(errors.begin(), errors.end(), [](const ConfigError& a, const ConfigError& b) {
            return a.line < b.line;
        });
        throw ConfigParseError(std::move(errors));
    }
    cfg.step.tau = cfg.horizon / cfg.n_steps;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigParseError({{ConfigError::Kind::File, 0, 0, "cannot read config " + path.string()}});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

}  // namespace plateflow::cli
