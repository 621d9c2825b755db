#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "blowup/commands.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"

using namespace blowup;

namespace {

// Config keys that can also be given as flags (dashes instead of underscores).
const char* const kConfigKeys[] = {
    "d",   "sigma",  "eps",    "delta", "delta_rule", "normalization", "xi1",          "n_terms",      "tol",
    "integrator_tol", "n", "scheme", "closure", "margin", "out",        "sidecar",       "branch_file", "spectrum_csv",
    "verdict_json",
};

std::string flag_name(std::string key)
{
    for (auto& c : key) {
        if (c == '_') c = '-';
    }
    return "--" + key;
}

void apply_perturbation(std::vector<ReferenceRow>& refs, const std::string& spec)
{
    // table,j,column,delta
    const auto comma = [&](std::size_t from) {
        const auto p = spec.find(',', from);
        if (p == std::string::npos) throw UsageError("perturbation must be 'table,j,column,delta'");
        return p;
    };
    const auto c1 = comma(0), c2 = comma(c1 + 1), c3 = comma(c2 + 1);
    const auto head = parse_numbers(spec.substr(0, c2), 2);
    const std::string column = spec.substr(c2 + 1, c3 - c2 - 1);
    const double delta = parse_numbers(spec.substr(c3 + 1), 1)[0];
    for (auto& r : refs) {
        if (r.table != static_cast<int>(head[0]) || r.j != static_cast<int>(head[1])) continue;
        if (column == "kappa") r.kappa += delta;
        else if (column == "mu") r.mu += delta;
        else if (column == "kappa_q1") r.kappa_q1 += delta;
        else if (column == "omega_q1") r.omega_q1 += delta;
        else if (column == "eps_star") r.eps_star += delta;
        else throw UsageError("unknown column '" + column + "'");
        return;
    }
    throw UsageError("no reference row " + spec.substr(0, c2));
}

std::array<double, 2> pair_of(const std::string& text)
{
    const auto v = parse_numbers(text, 2);
    return {v[0], v[1]};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Self-similar blow-up profiles of the complex Ginzburg-Landau equation"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    std::string config_path;
    bool print_config = false;
    int jobs = default_jobs();
    std::map<std::string, std::string> overrides;
    app.add_option("--config", config_path, "key = value config file");
    app.add_flag("--print-config", print_config, "print the effective config and exit");
    app.add_option("--jobs", jobs, "worker threads (default from BLOWUP_PROFILER_JOBS)");
    for (const char* key : kConfigKeys) {
        app.add_option_function<std::string>(
            flag_name(key), [&overrides, key](const std::string& v) { overrides[key] = v; }, "config override");
    }

    std::string guess;
    auto* solve = app.add_subcommand("solve", "Newton solve from a guess of the two unknowns");
    solve->add_option("--guess", guess, "mu,kappa (fix_omega) or kappa,omega (fix_amplitude)")->required();

    ScanOptions scan_opts;
    std::string rect;
    auto* scan = app.add_subcommand("scan", "locate roots in a rectangle by degree bisection");
    scan->add_option("--rect", rect, "x_lo,x_hi,y_lo,y_hi in the unknown plane")->required();
    scan->add_option("--depth", scan_opts.depth, "maximum bisection depth");
    scan->add_option("--per-side", scan_opts.per_side, "initial boundary samples per side");
    scan->add_option("--forced-depth", scan_opts.forced_depth, "levels split regardless of degree");

    BranchCommand branch_cmd;
    std::string seed;
    auto* branch = app.add_subcommand("branch", "continue a branch from eps = 0 through its turning point");
    branch->add_option("--seed", seed, "mu,kappa guess of the eps = 0 root");
    branch->add_option("--j", branch_cmd.index_j, "branch label (default: maxima count of the seed)");
    branch->add_option("--resume", branch_cmd.resume, "branch file to continue");
    branch->add_option("--h0", branch_cmd.continuation.h0, "initial arclength step");
    branch->add_option("--h-max", branch_cmd.continuation.h_max, "largest arclength step");
    branch->add_option("--max-points", branch_cmd.continuation.max_points, "point budget");
    branch->add_option("--kappa-min", branch_cmd.continuation.stop.kappa_min, "stop below this kappa");
    branch->add_option("--eps-max", branch_cmd.continuation.stop.eps_max, "stop above this eps");
    branch->add_option("--after-turn", branch_cmd.continuation.stop.points_after_turn,
                       "stop this many points past the turning point");

    SpectrumCommand spectrum_cmd;
    std::string root;
    auto* spectrum = app.add_subcommand("spectrum", "linearized spectrum and stability verdict");
    spectrum->add_option("--root", root, "mu,kappa guess at the configured eps, polished first");
    spectrum->add_option("--branch", spectrum_cmd.branch, "branch file");
    spectrum->add_option("--index", spectrum_cmd.index, "branch point (default: last)");
    spectrum->add_flag("--all", spectrum_cmd.all, "classify every point and tag the branch file");

    TablesOptions tables_opts;
    std::vector<std::string> perturb;
    auto* tables = app.add_subcommand("tables", "reproduce the reference root tables");
    tables->add_flag("--full", tables_opts.full, "turning points for every row");
    tables->add_option("--perturb", perturb, "table,j,column,delta shift of a reference value");

    auto* kummer = app.add_subcommand("kummer-check", "special-function identity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    return run_guarded(
        [&]() -> int {
            RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
            for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
            if (print_config) {
                std::cout << format_config(cfg);
                return kExitOk;
            }
            if (jobs < 1) throw UsageError("--jobs must be at least 1");

            std::ofstream out_file;
            std::ostream* out = &std::cout;
            if (cfg.out != "-") {
                out_file.open(cfg.out);
                if (!out_file) throw UsageError("cannot write '" + cfg.out + "'");
                out = &out_file;
            }

            if (solve->parsed()) return cmd_solve(cfg, pair_of(guess), *out);
            if (scan->parsed()) {
                const auto r = parse_numbers(rect, 4);
                scan_opts.rect = {r[0], r[1], r[2], r[3]};
                scan_opts.jobs = jobs;
                std::string side = cfg.sidecar;
                if (side.empty() && cfg.out != "-") side = cfg.out + ".cells.csv";
                if (side.empty()) return cmd_scan(cfg, scan_opts, *out, std::cerr);
                std::ofstream sidecar(side);
                if (!sidecar) throw UsageError("cannot write '" + side + "'");
                return cmd_scan(cfg, scan_opts, *out, sidecar);
            }
            if (branch->parsed()) {
                if (!seed.empty()) branch_cmd.seed = pair_of(seed);
                return cmd_branch(cfg, branch_cmd, *out);
            }
            if (spectrum->parsed()) {
                if (!root.empty()) spectrum_cmd.root = pair_of(root);
                spectrum_cmd.jobs = jobs;
                return cmd_spectrum(cfg, spectrum_cmd, *out);
            }
            if (tables->parsed()) {
                auto refs = reference_rows();
                for (const auto& p : perturb) apply_perturbation(refs, p);
                tables_opts.jobs = jobs;
                return cmd_tables(cfg, tables_opts, refs, *out);
            }
            if (kummer->parsed()) return cmd_kummer_check(*out);
            throw UsageError("no subcommand given (see --help)");
        },
        std::cerr);
}
