#include "blowup/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

ShootingOptions RunConfig::shooting() const
{
    ShootingOptions o;
    o.xi1 = xi1;
    o.n_terms = n_terms;
    o.integrator.tol = integrator_tol;
    return o;
}

NewtonOptions RunConfig::newton() const
{
    NewtonOptions n;
    n.tol = tol;
    return n;
}

StabilityOptions RunConfig::stability() const
{
    StabilityOptions s;
    s.grid.n = grid_n;
    s.grid.scheme = scheme;
    s.grid.closure = closure;
    s.grid.xi1 = xi1;
    s.margin = margin;
    s.shooting = shooting();
    return s;
}

ShootingProblem RunConfig::problem() const
{
    ShootingProblem p;
    p.normalization = normalization;
    p.fixed.d = d;
    p.fixed.sigma = sigma;
    p.fixed.eps = eps;
    p.fixed.delta = delta;
    p.fixed.omega = 1.0;
    p.options = shooting();
    return p;
}

namespace {

std::string shortest(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s)
{
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s)
{
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + s + "'");
    }
    return v;
}

std::string format_rule(const DeltaRule& rule)
{
    return rule.kind == DeltaRule::Kind::Zero ? "0" : shortest(rule.r) + "*eps";
}

template <class F>
auto wrap(F&& f, const std::string& value)
{
    try {
        return f(value);
    } catch (const Error& e) {
        throw std::invalid_argument(e.what());
    }
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        {"d", [](RunConfig& c, const std::string& v) { c.d = parse_int(v); },
         [](const RunConfig& c) { return std::to_string(c.d); }},
        {"sigma", [](RunConfig& c, const std::string& v) { c.sigma = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.sigma); }},
        {"eps", [](RunConfig& c, const std::string& v) { c.eps = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.eps); }},
        {"delta", [](RunConfig& c, const std::string& v) { c.delta = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.delta); }},
        {"delta_rule",
         [](RunConfig& c, const std::string& v) { c.delta_rule = wrap(DeltaRule::parse, v); },
         [](const RunConfig& c) { return format_rule(c.delta_rule); }},
        {"normalization",
         [](RunConfig& c, const std::string& v) {
             c.normalization = wrap(normalization_from_string, v);
         },
         [](const RunConfig& c) { return std::string(to_string(c.normalization)); }},
        {"xi1", [](RunConfig& c, const std::string& v) { c.xi1 = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.xi1); }},
        {"n_terms", [](RunConfig& c, const std::string& v) { c.n_terms = parse_int(v); },
         [](const RunConfig& c) { return std::to_string(c.n_terms); }},
        {"tol", [](RunConfig& c, const std::string& v) { c.tol = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.tol); }},
        {"integrator_tol",
         [](RunConfig& c, const std::string& v) { c.integrator_tol = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.integrator_tol); }},
        {"n", [](RunConfig& c, const std::string& v) { c.grid_n = parse_int(v); },
         [](const RunConfig& c) { return std::to_string(c.grid_n); }},
        {"scheme", [](RunConfig& c, const std::string& v) { c.scheme = wrap(scheme_from_string, v); },
         [](const RunConfig& c) { return std::string(to_string(c.scheme)); }},
        {"closure",
         [](RunConfig& c, const std::string& v) { c.closure = wrap(closure_from_string, v); },
         [](const RunConfig& c) { return std::string(to_string(c.closure)); }},
        {"margin", [](RunConfig& c, const std::string& v) { c.margin = parse_double(v); },
         [](const RunConfig& c) { return shortest(c.margin); }},
        {"out", [](RunConfig& c, const std::string& v) { c.out = v; },
         [](const RunConfig& c) { return c.out; }},
        {"sidecar", [](RunConfig& c, const std::string& v) { c.sidecar = v; },
         [](const RunConfig& c) { return c.sidecar; }},
        {"branch_file", [](RunConfig& c, const std::string& v) { c.branch_file = v; },
         [](const RunConfig& c) { return c.branch_file; }},
        {"spectrum_csv", [](RunConfig& c, const std::string& v) { c.spectrum_csv = v; },
         [](const RunConfig& c) { return c.spectrum_csv; }},
        {"verdict_json", [](RunConfig& c, const std::string& v) { c.verdict_json = v; },
         [](const RunConfig& c) { return c.verdict_json; }},
    };
    return table;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("unknown key '" + key + "'");
}

void parse_config(RunConfig& cfg, const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), number);
        }
    }
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    RunConfig cfg;
    parse_config(cfg, text.str());
    return cfg;
}

std::string format_config(const RunConfig& cfg)
{
    std::string out;
    for (const auto& f : fields()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

}  // namespace blowup
