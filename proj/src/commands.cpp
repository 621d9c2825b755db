#include "blowup/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/special.hpp"

namespace blowup {

int run_guarded(const std::function<int()>& body, std::ostream& err)
{
    try {
        return body();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

std::vector<double> parse_numbers(const std::string& text, std::size_t count)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("malformed number '" + item + "' in '" + text + "'");
        }
    }
    if (out.size() != count) {
        throw UsageError("expected " + std::to_string(count) + " comma-separated numbers, got '" + text + "'");
    }
    return out;
}

std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// Output stream for a path, "-" meaning the given fallback stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw UsageError("cannot write '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

void validate_config(const RunConfig& cfg)
{
    ProfileParams p;
    p.d = cfg.d;
    p.sigma = cfg.sigma;
    p.eps = cfg.eps;
    p.delta = cfg.delta;
    try {
        validate(p);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    if (cfg.n_terms != 1 && cfg.n_terms != 2) throw UsageError("n_terms must be 1 or 2");
    if (cfg.xi1 < 10.0) throw UsageError("xi1 must be at least 10");
}

std::string root_json(const RootPoint& root, int j)
{
    const RootPoint w = normalize_convert(root, Normalization::FixOmega);
    const RootPoint a = normalize_convert(root, Normalization::FixAmplitude);
    std::ostringstream os;
    os << "{\"normalization\":\"" << to_string(root.normalization) << "\",\"d\":" << root.params.d
       << ",\"sigma\":" << fmt17(root.params.sigma) << ",\"eps\":" << fmt17(root.params.eps)
       << ",\"delta\":" << fmt17(root.params.delta) << ",\"mu\":" << fmt17(root.mu.real())
       << ",\"kappa\":" << fmt17(root.params.kappa) << ",\"omega\":" << fmt17(root.params.omega)
       << ",\"residual\":" << fmt17(root.residual_norm) << ",\"iterations\":" << root.iterations
       << ",\"j\":" << j << ",\"fix_omega\":{\"mu\":" << fmt17(w.mu.real())
       << ",\"kappa\":" << fmt17(w.params.kappa) << "},\"fix_amplitude\":{\"kappa\":" << fmt17(a.params.kappa)
       << ",\"omega\":" << fmt17(a.params.omega) << "}}";
    return os.str();
}

RootPoint solve_root(const RunConfig& cfg, std::array<double, 2> guess)
{
    RootPoint root = newton_root(guess, cfg.problem(), cfg.newton());
    root.branch_index = profile_maxima_count(root_trajectory(root, cfg.shooting()));
    return root;
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::array<double, 2> guess, std::ostream& out)
{
    validate_config(cfg);
    const RootPoint root = solve_root(cfg, guess);
    out << root_json(root, root.branch_index) << '\n';
    return kExitOk;
}

int cmd_scan(const RunConfig& cfg, const ScanOptions& opts, std::ostream& out, std::ostream& sidecar)
{
    validate_config(cfg);
    if (!(opts.rect.x_lo < opts.rect.x_hi) || !(opts.rect.y_lo < opts.rect.y_hi)) {
        throw UsageError("scan rectangle must have x_lo < x_hi and y_lo < y_hi");
    }
    ShootingContext ctx;
    ctx.problem = cfg.problem();
    ctx.newton = cfg.newton();
    ctx.forced_depth = opts.forced_depth;
    ctx.jobs = opts.jobs;
    const LocateResult found = locate_roots(opts.rect, opts.depth, ctx, opts.per_side);

    out << (cfg.normalization == Normalization::FixOmega ? "mu,kappa,residual,j\n" : "kappa,omega,residual,j\n");
    for (const auto& r : found.roots) {
        const auto x = r.unknowns();
        out << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << fmt17(r.residual_norm) << ',' << r.branch_index
            << '\n';
    }
    sidecar << "kind,x_lo,x_hi,y_lo,y_hi\n";
    const auto cells = [&](const char* kind, const std::vector<Rect>& rects) {
        for (const auto& c : rects) {
            sidecar << kind << ',' << fmt17(c.x_lo) << ',' << fmt17(c.x_hi) << ',' << fmt17(c.y_lo) << ','
                    << fmt17(c.y_hi) << '\n';
        }
    };
    cells("unreliable", found.unreliable);
    cells("excluded", found.excluded);
    return kExitOk;
}

namespace {

ContinuationOptions branch_options(const RunConfig& cfg, ContinuationOptions o)
{
    o.shooting = cfg.shooting();
    o.tol = cfg.tol;
    return o;
}

void branch_summary(const Branch& b, std::ostream& out)
{
    double eps_max = 0.0;
    for (const auto& p : b.points) eps_max = std::max(eps_max, p.eps);
    const auto& last = b.points.back();
    out << "{\"index_j\":" << b.index_j << ",\"points\":" << b.points.size() << ",\"eps_max\":" << fmt17(eps_max)
        << ",\"end\":{\"eps\":" << fmt17(last.eps) << ",\"mu\":" << fmt17(last.mu)
        << ",\"kappa\":" << fmt17(last.kappa) << ",\"s\":" << fmt17(last.arclength) << '}';
    if (b.turning_point) {
        out << ",\"eps_star\":" << fmt17(b.turning_point->eps_star) << ",\"s_star\":"
            << fmt17(b.turning_point->arclength);
    } else {
        out << ",\"eps_star\":null";
    }
    out << "}\n";
}

}  // namespace

int cmd_branch(const RunConfig& cfg, const BranchCommand& cmd, std::ostream& out)
{
    validate_config(cfg);
    if (cfg.normalization != Normalization::FixOmega) throw UsageError("branches are traced with fix_omega");
    const ContinuationOptions opts = branch_options(cfg, cmd.continuation);
    if (!(opts.h0 > 0.0)) throw UsageError("h0 must be positive");
    Branch branch;
    try {
        if (!cmd.resume.empty()) {
            branch = resume_branch(load_branch(cmd.resume), opts);
        } else {
            if (!cmd.seed) throw UsageError("branch needs --seed or --resume");
            RunConfig at_zero = cfg;
            at_zero.eps = 0.0;
            at_zero.delta = 0.0;
            RootPoint seed = solve_root(at_zero, *cmd.seed);
            if (cmd.index_j > 0) seed.branch_index = cmd.index_j;
            branch = trace_branch(seed, cfg.delta_rule, opts);
        }
    } catch (const StallError& e) {
        save_branch(e.partial(), cfg.branch_file);
        throw;
    }
    save_branch(branch, cfg.branch_file);
    branch_summary(branch, out);
    return kExitOk;
}

int cmd_spectrum(const RunConfig& cfg, const SpectrumCommand& cmd, std::ostream& out)
{
    validate_config(cfg);
    const StabilityOptions sopts = cfg.stability();
    if (cmd.root) {
        const RootPoint root = solve_root(cfg, *cmd.root);
        const Spectrum s = analyze_stability(root.params, root.mu.real(), sopts);
        Sink csv(cfg.spectrum_csv, out);
        write_spectrum_csv(csv.get(), s);
        const std::string v = verdict_json(s, root.params.eps, root.params.kappa, root.mu.real());
        Sink js(cfg.verdict_json, out);
        js.get() << v << '\n';
        if (cfg.verdict_json != "-") out << v << '\n';
        return kExitOk;
    }
    if (cmd.branch.empty()) throw UsageError("spectrum needs --root or --branch");
    Branch b = load_branch(cmd.branch);
    if (b.points.empty()) throw UsageError("branch file has no points");

    std::vector<std::size_t> picks;
    if (cmd.all) {
        for (std::size_t i = 0; i < b.points.size(); ++i) picks.push_back(i);
    } else {
        const long idx = cmd.index < 0 ? static_cast<long>(b.points.size()) - 1 : cmd.index;
        if (idx >= static_cast<long>(b.points.size())) throw UsageError("point index out of range");
        picks.push_back(static_cast<std::size_t>(idx));
    }
    std::vector<Spectrum> spectra(picks.size());
    std::vector<std::string> failures(picks.size());
    parallel_for(picks.size(), cmd.jobs, [&](std::size_t k) {
        const auto& p = b.points[picks[k]];
        try {
            spectra[k] = analyze_stability(b.params_at(p), p.mu, sopts);
        } catch (const DoubletNotFoundError& e) {
            failures[k] = e.what();
        }
    });

    if (!cmd.all) {
        if (!failures[0].empty()) throw DoubletNotFoundError(failures[0]);
        const auto& p = b.points[picks[0]];
        Sink csv(cfg.spectrum_csv, out);
        write_spectrum_csv(csv.get(), spectra[0]);
        const std::string v = verdict_json(spectra[0], p.eps, p.kappa, p.mu);
        Sink js(cfg.verdict_json, out);
        js.get() << v << '\n';
        if (cfg.verdict_json != "-") out << v << '\n';
        return kExitOk;
    }

    Sink js(cfg.verdict_json, out);
    int missing = 0;
    for (std::size_t k = 0; k < picks.size(); ++k) {
        auto& p = b.points[picks[k]];
        if (!failures[k].empty()) {
            ++missing;
            p.stability = Stability::Unknown;
            js.get() << "{\"eps\":" << fmt17(p.eps) << ",\"kappa\":" << fmt17(p.kappa) << ",\"mu\":" << fmt17(p.mu)
                     << ",\"verdict\":\"doublet_not_found\"}\n";
            continue;
        }
        const Spectrum& s = spectra[k];
        p.stability = s.verdict == Verdict::Stable     ? Stability::Stable
                      : s.verdict == Verdict::Unstable ? Stability::Unstable
                                                       : Stability::Unknown;
        js.get() << verdict_json(s, p.eps, p.kappa, p.mu) << '\n';
    }
    save_branch(b, cmd.branch);
    return missing == 0 ? kExitOk : kExitNumerical;
}

std::vector<ReferenceRow> reference_rows()
{
    return {
        {1, 1, 0.06064, 0.85311, 1.23204, 0.32669, 0.38294},
        {1, 2, 0.05182, 0.49323, 0.78308, 1.51894, 3.07959},
        {1, 3, 0.04466, 0.34673, 1.12388, 0.20263, 0.58438},
        {1, 4, 0.03900, 0.26678, 0.78308, 0.47127, 1.76651},
        {1, 5, 0.03455, 0.21643, 1.07947, 0.15225, 0.70345},
        {1, 6, 0.03099, 0.18185, 0.92714, 0.25750, 1.41624},
        {1, 7, 0.02803, 0.15667, 1.05430, 0.12284, 0.78409},
        {1, 8, 0.02559, 0.13756, 0.95061, 0.17365, 1.26236},
        {2, 1, 0.19813, 0.91737, 1.88529, 0.25810, 0.28135},
        {2, 2, 0.24402, 0.32091, 0.83559, 0.45535, 1.41727},
        {2, 3, 0.22762, 0.22704, 1.10834, 0.18242, 0.80684},
        {2, 4, 0.19520, 0.16543, 1.03257, 0.15516, 0.93792},
        {2, 5, 0.18168, 0.14237, 1.00325, 0.13241, 0.96677},
    };
}

std::vector<TableCell> reproduce_tables(const RunConfig& cfg, const TablesOptions& opts,
                                        const std::vector<ReferenceRow>& refs)
{
    std::vector<ReferenceRow> rows;
    for (const auto& r : refs) {
        if ((r.table == 1 && r.j <= opts.rows_table1) || (r.table == 2 && r.j <= opts.rows_table2)) {
            rows.push_back(r);
        }
    }
    std::vector<std::vector<TableCell>> per_row(rows.size());
    parallel_for(rows.size(), opts.jobs, [&](std::size_t k) {
        const ReferenceRow& ref = rows[k];
        RunConfig c = cfg;
        c.d = ref.table == 1 ? 1 : 3;
        c.sigma = ref.table == 1 ? 2.3 : 1.0;
        c.eps = 0.0;
        c.delta = 0.0;
        c.normalization = Normalization::FixOmega;
        auto& cells = per_row[k];
        bool q1_seed = false;
        const auto add = [&](const char* column, double reference, double computed, double tol) {
            cells.push_back({ref.table, ref.j, column, reference, computed, tol,
                             std::abs(computed - reference) <= tol, q1_seed});
        };
        const double nan = std::numeric_limits<double>::quiet_NaN();
        // The printed row holds two seeds: (mu, kappa) and, through the exact
        // conversion, the Q(0) = 1 columns. The second is tried when the first
        // fails or lands on a root with the wrong number of maxima.
        std::optional<RootPoint> root;
        try {
            root = solve_root(c, {ref.mu, ref.kappa});
        } catch (const Error&) {
        }
        if (!root || root->branch_index != ref.j) {
            const double mu = std::pow(ref.omega_q1, -1.0 / (2.0 * c.sigma));
            try {
                RootPoint alt = solve_root(c, {mu, ref.kappa_q1 / ref.omega_q1});
                if (!root || alt.branch_index == ref.j) {
                    root = alt;
                    q1_seed = true;
                }
            } catch (const Error&) {
            }
        }
        if (!root) {
            add("kappa", ref.kappa, nan, opts.root_tol);
            add("mu", ref.mu, nan, opts.root_tol);
            return;
        }
        add("kappa", ref.kappa, root->params.kappa, opts.root_tol);
        add("mu", ref.mu, root->mu.real(), opts.root_tol);
        const RootPoint q1 = normalize_convert(*root, Normalization::FixAmplitude);
        add("kappa_q1", ref.kappa_q1, q1.params.kappa, opts.convert_tol);
        add("omega_q1", ref.omega_q1, q1.params.omega, opts.convert_tol);
        add("maxima", ref.j, root->branch_index, 0.0);
        if (ref.table == 2 && ref.j == 1) {
            // independent dynamical-rescaling values for the first profile
            add("kappa_lit", 0.917, root->params.kappa, 1e-3);
            add("mu_lit", 1.885, root->mu.real(), 1e-3);
        }
        if (opts.full || ref.j <= 2) {
            ContinuationOptions co;
            co.stop.points_after_turn = 2;
            co = branch_options(c, co);
            double eps_star = nan;
            try {
                const Branch b = trace_branch(*root, DeltaRule::zero(), co);
                if (b.turning_point) eps_star = b.turning_point->eps_star;
            } catch (const Error&) {
            }
            add("eps_star", ref.eps_star, eps_star, opts.eps_star_tol);
        }
    });
    std::vector<TableCell> out;
    for (auto& r : per_row) out.insert(out.end(), r.begin(), r.end());
    return out;
}

int cmd_tables(const RunConfig& cfg, const TablesOptions& opts, const std::vector<ReferenceRow>& refs,
               std::ostream& out)
{
    const auto cells = reproduce_tables(cfg, opts, refs);
    out << "table,j,column,reference,computed,diff,tol,status\n";
    int failed = 0;
    for (const auto& c : cells) {
        if (!c.pass) ++failed;
        out << c.table << ',' << c.j << ',' << c.column << ',' << fmt17(c.reference) << ',' << fmt17(c.computed)
            << ',' << fmt17(c.computed - c.reference) << ',' << fmt17(c.tol) << ',' << (c.pass ? "pass" : "FAIL")
            << '\n';
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].q1_seed && (i == 0 || cells[i - 1].table != cells[i].table || cells[i - 1].j != cells[i].j)) {
            out << "# table " << cells[i].table << " j " << cells[i].j << ": seeded from the Q(0) = 1 columns\n";
        }
    }
    out << "# " << cells.size() << " cells, " << failed << " failed\n";
    return failed == 0 ? kExitOk : kExitNumerical;
}

std::vector<CheckResult> special_checks()
{
    std::vector<CheckResult> out;
    const double pi = std::numbers::pi;

    // U(a, a+1, z) = z^{-a}
    {
        const cplx as[] = {0.7, {0.3, 0.8}, {2.5, -1.0}, {0.2174, 0.5861}};
        const cplx zs[] = {2.0, {0.0, 50.0}, {-10.0, 1.0}, {0.5, -3.0}, std::polar(20.0, 3.0)};
        double worst = 0.0;
        for (cplx a : as) {
            for (cplx z : zs) {
                const cplx u = kummer_u_quadrature({a, a + 1.0, z}).value;
                const cplx exact = std::exp(-a * std::log(z));
                worst = std::max(worst, std::abs(u - exact) / std::abs(exact));
            }
        }
        out.push_back({"u_a_a_plus_1", worst, 1e-12, worst <= 1e-12});
    }

    // quadrature against the series: |difference| / (2 |first omitted term|)
    {
        const cplx as[] = {0.5, {0.2174, 0.5861}, {0.5, 0.5}};
        const double bs[] = {0.5, 1.5};
        const double radii[] = {20.0, 50.0};
        const double angles[] = {-pi / 2, -pi / 4, 0.0, pi / 4, pi / 2, 3 * pi / 4, 0.95 * pi};
        double worst = 0.0;
        for (cplx a : as) {
            for (double b : bs) {
                for (double r : radii) {
                    for (double th : angles) {
                        const KummerArgs k{a, b, std::polar(r, th)};
                        const cplx q = kummer_u_quadrature(k).value;
                        const SeriesResult s = kummer_u_series(k, 4);
                        // the floor covers the quadrature's own error where the series is exact
                        const double allowed = 2.0 * s.omitted + 1e-12 * std::abs(q);
                        worst = std::max(worst, std::abs(q - s.value) / allowed);
                    }
                }
            }
        }
        out.push_back({"quadrature_vs_series", worst, 1.0, worst <= 1.0});
    }

    // Wronskian from values and derivatives against the closed form
    {
        double worst = 0.0;
        for (int d : {1, 3}) {
            for (double eps : {0.0, 0.05, 0.2}) {
                ProfileParams p;
                p.d = d;
                p.sigma = d == 1 ? 2.3 : 1.0;
                p.kappa = d == 1 ? 0.85311 : 0.91737;
                p.eps = eps;
                for (double xi : {2.0, 5.0, 10.0, 30.0}) {
                    const FundamentalPair f = fundamental_pair_scaled(p, xi);
                    const cplx w = f.p * f.e_prime - f.p_prime * f.e;
                    worst = std::max(worst, std::abs(w - f.w) / std::abs(f.w));
                }
            }
        }
        out.push_back({"wronskian", worst, 1e-8, worst <= 1e-8});
    }

    // Kummer's equation z y'' + (b - z) y' - a y = 0 for U and V by central differences
    {
        const double h = 1e-3;
        const cplx zs[] = {{3.0, 3.0}, {1.0, 4.0}, {-2.0, 3.0}};
        const KummerArgs bases[] = {{{0.2174, 0.5861}, 0.5, 0.0}, {{0.5, 0.545}, 1.5, 0.0}};
        double worst = 0.0;
        for (const auto& base : bases) {
            for (cplx z : zs) {
                for (int which = 0; which < 2; ++which) {
                    const auto f = [&](cplx zz) {
                        const KummerArgs k{base.a, base.b, zz};
                        return which == 0 ? kummer_u(k) : kummer_v(k);
                    };
                    const cplx y0 = f(z), yp = f(z + h), ym = f(z - h);
                    const cplx d1 = (yp - ym) / (2 * h);
                    const cplx d2 = (yp - 2.0 * y0 + ym) / (h * h);
                    const cplx res = z * d2 + (base.b - z) * d1 - base.a * y0;
                    const double scale =
                        std::abs(z * d2) + std::abs((base.b - z) * d1) + std::abs(base.a * y0);
                    worst = std::max(worst, std::abs(res) / scale);
                }
            }
        }
        out.push_back({"kummer_equation", worst, 1e-6, worst <= 1e-6});
    }
    return out;
}

int cmd_kummer_check(std::ostream& out)
{
    const auto checks = special_checks();
    out << "check,deviation,bound,status\n";
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.pass;
        out << c.name << ',' << fmt17(c.deviation) << ',' << fmt17(c.bound) << ',' << (c.pass ? "pass" : "FAIL")
            << '\n';
    }
    return ok ? kExitOk : kExitNumerical;
}

}  // namespace blowup
