#include "blowup/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "blowup/errors.hpp"

namespace blowup {

std::vector<double> LinearizationGrid::nodes() const
{
    std::vector<double> x(unknowns());
    for (int k = 0; k < unknowns(); ++k) x[k] = k * h();
    return x;
}

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    default: return "inconclusive";
    }
}

const char* to_string(Scheme s) { return s == Scheme::Central2 ? "central2" : "central4"; }

Scheme scheme_from_string(const std::string& name)
{
    if (name == "central2") return Scheme::Central2;
    if (name == "central4") return Scheme::Central4;
    throw UsageError("unknown scheme '" + name + "' (central2 | central4)");
}

const char* to_string(Closure c) { return c == Closure::Robin ? "robin" : "dynamic"; }

Closure closure_from_string(const std::string& name)
{
    if (name == "robin") return Closure::Robin;
    if (name == "dynamic") return Closure::Dynamic;
    throw UsageError("unknown closure '" + name + "' (robin | dynamic)");
}

namespace {

void check_grid(const LinearizationGrid& grid, const ProfileParams& params)
{
    if (grid.n < 200) throw ResolutionError("linearization grid needs at least 200 nodes");
    const double per_wave = 2.0 * std::numbers::pi * grid.n / (params.kappa * grid.xi1 * grid.xi1);
    if (per_wave < grid.min_nodes_per_wave) {
        throw ResolutionError("grid resolves the outgoing phase with " + std::to_string(per_wave) +
                              " nodes per wavelength at xi1 (need " +
                              std::to_string(grid.min_nodes_per_wave) + ")");
    }
}

std::vector<ProfileState> profile_on(const ProfileTrajectory& traj, const std::vector<double>& xs)
{
    std::vector<ProfileState> out;
    out.reserve(xs.size());
    const double first = traj.nodes.front().xi;
    for (double x : xs) {
        if (x < first) {
            // inside the Taylor hand-off interval
            const auto& n0 = traj.nodes.front();
            out.push_back({n0.q + 0.5 * n0.q_second * (x * x - first * first), n0.q_second * x});
        } else {
            out.push_back(sample(traj, x));
        }
    }
    return out;
}

}  // namespace

SymmetryModes symmetry_modes(const ProfileTrajectory& traj, const ProfileParams& params,
                             const LinearizationGrid& grid)
{
    const auto xs = grid.nodes();
    const auto q = profile_on(traj, xs);
    const cplx alpha(1.0 / params.sigma, params.omega / params.kappa);
    SymmetryModes m;
    m.y1.resize(xs.size());
    m.y2.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        m.y1[k] = I * q[k].q;
        m.y2[k] = xs[k] * q[k].q_prime + alpha * q[k].q;
    }
    return m;
}

Matrix assemble(const ProfileTrajectory& traj, const ProfileParams& params, const LinearizationGrid& grid)
{
    validate(params);
    check_grid(grid, params);
    if (traj.xi_end < grid.xi1 * (1.0 - 1e-12)) throw RangeError("trajectory does not reach xi1");
    const int n = grid.n;
    const double h = grid.h();
    const auto xs = grid.nodes();
    const auto q = profile_on(traj, xs);

    const cplx a(params.eps, 1.0);  // i + eps
    const cplx nl(-params.delta, 1.0);  // i - delta
    const double sigma = params.sigma;
    const double kappa = params.kappa;
    const double dm1 = params.d - 1.0;
    const cplx alpha(1.0 / sigma, params.omega / kappa);
    // Robin closure: w_n = e1 w_{n-1} + e2 w_{n-2}
    const cplx denom = 3.0 + 2.0 * h * alpha / grid.xi1;
    const cplx e1 = 4.0 / denom;
    const cplx e2 = -1.0 / denom;

    const int nu = grid.unknowns();
    Matrix m(2 * nu, 2 * nu);
    auto put = [&](int row, int col, cplx c) {
        m(row, col) += c.real();
        m(row, col + nu) -= c.imag();
        m(row + nu, col) += c.imag();
        m(row + nu, col + nu) += c.real();
    };
    auto put_conj = [&](int row, int col, cplx c) {
        m(row, col) += c.real();
        m(row, col + nu) += c.imag();
        m(row + nu, col) += c.imag();
        m(row + nu, col + nu) -= c.real();
    };

    // Couples node k to node j, folding reflected (j < 0) and eliminated
    // (j = n) indices back onto the unknowns.
    auto couple = [&](int k, int j, cplx c) {
        if (j < 0) j = -j;
        if (j < nu) {
            put(k, j, c);
        } else {
            put(k, n - 1, c * e1);
            put(k, n - 2, c * e2);
        }
    };

    const bool fourth = grid.scheme == Scheme::Central4;
    for (int k = 0; k < nu; ++k) {
        const double xi = xs[k];
        const double aq = std::abs(q[k].q);
        const double pw = std::pow(aq, 2.0 * sigma);
        const cplx phase2 = aq > 0.0 ? (q[k].q / aq) * (q[k].q / aq) : cplx(0.0);
        if (k == n) {
            // boundary row: lambda w = -kappa (xi1 w' + w/sigma) - i omega w
            put(k, k, -kappa / sigma - I * params.omega);
            const double c = -kappa * grid.xi1 / (2.0 * h);
            couple(k, n, 3.0 * c);
            couple(k, n - 1, -4.0 * c);
            couple(k, n - 2, c);
            continue;
        }
        put(k, k, -kappa / sigma - I * params.omega + nl * (1.0 + sigma) * pw);
        put_conj(k, k, nl * sigma * pw * phase2);
        const bool wide = fourth && k + 2 < nu;
        if (k == 0) {
            // at the origin (d-1)/xi w' -> (d-1) w'', so Laplacian = d w''
            if (wide) {
                const cplx c = a * static_cast<double>(params.d) / (12.0 * h * h);
                couple(0, 0, -30.0 * c);
                couple(0, 1, 32.0 * c);
                couple(0, 2, -2.0 * c);
            } else {
                const cplx c = a * (2.0 * params.d) / (h * h);
                couple(0, 0, -c);
                couple(0, 1, c);
            }
            continue;
        }
        // w'' and w' weights, then drift = (i + eps)(d-1)/xi - kappa xi multiplies w'
        const cplx drift = a * dm1 / xi - kappa * xi;
        if (wide) {
            const double s2 = 1.0 / (12.0 * h * h);
            const double s1 = 1.0 / (12.0 * h);
            couple(k, k - 2, a * (-s2) + drift * s1);
            couple(k, k - 1, a * (16.0 * s2) + drift * (-8.0 * s1));
            couple(k, k, a * (-30.0 * s2));
            couple(k, k + 1, a * (16.0 * s2) + drift * (8.0 * s1));
            couple(k, k + 2, a * (-s2) + drift * (-s1));
        } else {
            couple(k, k - 1, a / (h * h) - drift / (2.0 * h));
            couple(k, k, -2.0 * a / (h * h));
            couple(k, k + 1, a / (h * h) + drift / (2.0 * h));
        }
    }
    return m;
}

std::vector<cplx> real_stack(const std::vector<cplx>& w)
{
    const std::size_t n = w.size();
    std::vector<cplx> out(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = w[k].real();
        out[k + n] = w[k].imag();
    }
    return out;
}

Spectrum classify(std::vector<cplx> eigenvalues, double kappa0, double margin)
{
    if (eigenvalues.empty()) throw DomainError("classify needs a nonempty spectrum");
    Spectrum s;
    s.eigenvalues = std::move(eigenvalues);
    const auto& ev = s.eigenvalues;
    auto nearest = [&](cplx target, std::size_t skip) {
        std::size_t best = ev.size();
        for (std::size_t i = 0; i < ev.size(); ++i) {
            if (i == skip) continue;
            if (best == ev.size() || std::abs(ev[i] - target) < std::abs(ev[best] - target)) best = i;
        }
        return best;
    };
    const cplx two_k = 2.0 * kappa0;
    s.index_zero = nearest(0.0, ev.size());
    s.index_two_kappa = nearest(two_k, s.index_zero);
    if (s.index_two_kappa == ev.size()) throw DoubletNotFoundError("spectrum has a single eigenvalue");
    s.lambda_zero = ev[s.index_zero];
    s.lambda_two_kappa = ev[s.index_two_kappa];
    if (std::abs(s.lambda_zero) > 0.1 * kappa0 || std::abs(s.lambda_two_kappa - two_k) > 0.1 * kappa0) {
        throw DoubletNotFoundError("no eigenvalue within 0.1 kappa0 of 0 and 2 kappa0 (|l0| = " +
                                   std::to_string(std::abs(s.lambda_zero)) + ", |l2 - 2k| = " +
                                   std::to_string(std::abs(s.lambda_two_kappa - two_k)) + ")");
    }
    double rest = -std::numeric_limits<double>::infinity();
    s.separation_zero = std::numeric_limits<double>::infinity();
    s.separation_two_kappa = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (i == s.index_zero || i == s.index_two_kappa) continue;
        rest = std::max(rest, ev[i].real());
        s.separation_zero = std::min(s.separation_zero, std::abs(ev[i]));
        s.separation_two_kappa = std::min(s.separation_two_kappa, std::abs(ev[i] - two_k));
    }
    s.max_real_rest = rest;
    if (rest < -margin) {
        s.verdict = Verdict::Stable;
    } else if (rest > margin) {
        s.verdict = Verdict::Unstable;
    } else {
        s.verdict = Verdict::Inconclusive;
    }
    return s;
}

Spectrum analyze_stability(const ProfileParams& params, double mu, const StabilityOptions& opts)
{
    ShootingOptions so = opts.shooting;
    so.xi1 = opts.grid.xi1;
    const ProfileTrajectory traj = profile_trajectory(params, mu, so);
    const Matrix m = assemble(traj, params, opts.grid);
    Spectrum s = classify(eigenvalues(m), params.kappa, opts.margin);
    const SymmetryModes modes = symmetry_modes(traj, params, opts.grid);
    s.r1 = mode_residual(m, real_stack(modes.y1), 0.0);
    s.r2 = mode_residual(m, real_stack(modes.y2), 2.0 * params.kappa);
    return s;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s)
{
    out << "re,im,is_doublet\n";
    char buf[96];
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const bool doublet = i == s.index_zero || i == s.index_two_kappa;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", s.eigenvalues[i].real(), s.eigenvalues[i].imag(),
                      doublet ? 1 : 0);
        out << buf;
    }
}

std::string verdict_json(const Spectrum& s, double eps, double kappa, double mu)
{
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"eps\":%.17g,\"kappa\":%.17g,\"mu\":%.17g,\"lambda0_re\":%.17g,\"lambda0_im\":%.17g,"
                  "\"lambda2k_re\":%.17g,\"lambda2k_im\":%.17g,\"max_real_rest\":%.17g,\"verdict\":\"%s\"}",
                  eps, kappa, mu, s.lambda_zero.real(), s.lambda_zero.imag(), s.lambda_two_kappa.real(),
                  s.lambda_two_kappa.imag(), s.max_real_rest, to_string(s.verdict));
    return buf;
}

}  // namespace blowup
