#include "blowup/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr double kPi = std::numbers::pi;

// Lanczos coefficients, g = 7, n = 9.
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo;
    double hi;
    cplx value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod(const F& f, double lo, double hi)
{
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const cplx fc = f(center);
    cplx kronrod = fc * kWgk[7];
    cplx gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const cplx sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

bool is_nonpositive_integer(cplx z)
{
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real());
}

cplx principal_pow(cplx base, cplx w) { return std::exp(w * std::log(base)); }

// e^{-s} s^{a-1} (1+s/z)^{b-a-1}, integrated against the substitution s = t^p.
struct KummerIntegrand {
    cplx a;
    cplx c;  // b - a - 1
    cplx z;
    double p;

    cplx operator()(double t) const
    {
        const double log_t = std::log(t);
        const double s = std::exp(p * log_t);
        const cplx log_term = (p * a - 1.0) * log_t - s + c * std::log(1.0 + s / z);
        return p * std::exp(log_term);
    }
};

}  // namespace

void validate(const ProfileParams& p)
{
    if (p.d < 1 || p.d > 3) throw DomainError("dimension d must be 1, 2 or 3");
    if (!(p.sigma > 2.0 / p.d)) throw DomainError("sigma must exceed 2/d");
    if (!(p.eps >= 0.0) || !(p.delta >= 0.0)) throw DomainError("eps and delta must be >= 0");
    if (!(p.kappa > 0.0)) throw DomainError("kappa must be positive");
    if (!std::isfinite(p.omega)) throw DomainError("omega must be finite");
}

cplx gamma_complex(cplx z)
{
    if (is_nonpositive_integer(z)) throw DomainError("gamma pole at non-positive integer");
    if (z.real() < 0.5) {
        return kPi / (std::sin(kPi * z) * gamma_complex(1.0 - z));
    }
    z -= 1.0;
    cplx x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + static_cast<double>(i));
    const cplx t = z + 7.5;
    return std::sqrt(2.0 * kPi) * std::exp((z + 0.5) * std::log(t) - t) * x;
}

QuadratureResult kummer_u_quadrature(const KummerArgs& args, double tol)
{
    const cplx a = args.a;
    const cplx z = args.z;
    if (!(a.real() > 0.0)) throw DomainError("kummer_u_quadrature requires Re a > 0");
    if (z == 0.0 || (z.imag() == 0.0 && z.real() < 0.0))
        throw DomainError("kummer_u_quadrature requires |arg z| < pi");

    const cplx c = args.b - a - 1.0;
    const double p = a.real() < 1.0 ? 1.0 / a.real() : 1.0;
    const KummerIntegrand f{a, c, z, p};

    // Upper cutoff in s: the integrand bound falls below 1e-18.
    const double growth = std::max(0.0, c.real());
    const double phase = std::exp(kPi * std::abs(c.imag()));
    double s_max = 40.0;
    auto bound = [&](double s) {
        return std::exp(-s) * std::pow(s, a.real()) * std::pow(1.0 + s / std::abs(z), growth) *
               phase;
    };
    while (bound(s_max) > 1e-18) s_max *= 1.25;
    const double t_max = std::pow(s_max, 1.0 / p);

    std::priority_queue<Panel> panels;
    constexpr int kInitial = 16;
    cplx total = 0.0;
    double error = 0.0;
    for (int i = 0; i < kInitial; ++i) {
        // geometric-ish split that puts more panels near the origin
        const double lo = t_max * std::pow(static_cast<double>(i) / kInitial, 2);
        const double hi = t_max * std::pow(static_cast<double>(i + 1) / kInitial, 2);
        Panel panel = gauss_kronrod(f, lo, hi);
        total += panel.value;
        error += panel.error;
        panels.push(panel);
    }

    constexpr int kMaxPanels = 20000;
    int count = kInitial;
    while (error > tol * std::abs(total) && count < kMaxPanels) {
        const Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Panel left = gauss_kronrod(f, worst.lo, mid);
        const Panel right = gauss_kronrod(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
        ++count;
        if (count % 256 == 0) {
            // resum to keep the running error free of cancellation drift
            auto copy = panels;
            total = 0.0;
            error = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                error += copy.top().error;
                copy.pop();
            }
        }
    }
    const double rel = error / std::max(std::abs(total), std::numeric_limits<double>::min());
    if (rel > tol) throw AccuracyError("kummer_u_quadrature: panel budget exhausted", rel);

    const cplx value = principal_pow(z, -a) * total / gamma_complex(a);
    return {value, rel};
}

SeriesResult kummer_u_series(const KummerArgs& args, int n)
{
    if (n < 1) throw DomainError("kummer_u_series needs n >= 1");
    const cplx a = args.a;
    const cplx a2 = 1.0 + a - args.b;
    const cplx inv = -1.0 / args.z;
    cplx term = 1.0;
    cplx sum = 0.0;
    for (int k = 0; k < n; ++k) {
        sum += term;
        term *= (a + static_cast<double>(k)) * (a2 + static_cast<double>(k)) * inv /
                static_cast<double>(k + 1);
    }
    const cplx prefactor = principal_pow(args.z, -a);
    return {prefactor * sum, std::abs(prefactor * term)};
}

cplx kummer_u(const KummerArgs& args, double tol)
{
    if (std::abs(args.z) >= 12.0) {
        const cplx a = args.a;
        const cplx a2 = 1.0 + a - args.b;
        const cplx inv = -1.0 / args.z;
        cplx term = 1.0;
        cplx sum = 0.0;
        double previous = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 200; ++k) {
            const double mag = std::abs(term);
            if (mag > previous) break;  // past the optimal truncation
            sum += term;
            if (mag <= tol * std::abs(sum)) {
                return principal_pow(args.z, -a) * sum;
            }
            previous = mag;
            term *= (a + static_cast<double>(k)) * (a2 + static_cast<double>(k)) * inv /
                    static_cast<double>(k + 1);
        }
    }
    return kummer_u_quadrature(args, tol).value;
}

namespace {

// V without its e^z factor: U(b-a, b, -z).
cplx kummer_v_reduced(const KummerArgs& args, double tol)
{
    return kummer_u({args.b - args.a, args.b, -args.z}, tol);
}

}  // namespace

cplx kummer_v(const KummerArgs& args, double tol)
{
    return std::exp(args.z) * kummer_v_reduced(args, tol);
}

cplx kummer_wronskian_closed_form(const KummerArgs& args)
{
    const double sign = args.z.imag() > 0.0 ? 1.0 : -1.0;
    return std::exp(sign * I * kPi * (args.b - args.a)) * principal_pow(args.z, -args.b) *
           std::exp(args.z);
}

KummerArgs kummer_args(const ProfileParams& params, double xi)
{
    const cplx a = 0.5 * cplx(1.0 / params.sigma, params.omega / params.kappa);
    const cplx b = 0.5 * params.d;
    return {a, b, kummer_z(params, xi)};
}

namespace {

FundamentalPair fundamental_pair_impl(const ProfileParams& params, double xi, double tol,
                                      bool scaled)
{
    if (!(xi > 0.0)) throw DomainError("fundamental_pair requires xi > 0");
    if (!(params.kappa > 0.0)) throw DomainError("fundamental_pair requires kappa > 0");
    const KummerArgs k = kummer_args(params, xi);
    const cplx dz = 2.0 * k.z / xi;

    const cplx p = kummer_u(k, tol);
    const cplx p_prime = -k.a * kummer_u({k.a + 1.0, k.b + 1.0, k.z}, tol) * dz;

    const cplx ba = k.b - k.a;
    const cplx u_ba = kummer_u({ba, k.b, -k.z}, tol);
    const cplx u_ba1 = kummer_u({ba + 1.0, k.b + 1.0, -k.z}, tol);
    const cplx scale = scaled ? cplx(1.0) : std::exp(k.z);
    const cplx e = scale * u_ba;
    const cplx e_prime = scale * (u_ba + ba * u_ba1) * dz;

    const double sign = k.z.imag() > 0.0 ? 1.0 : -1.0;
    const cplx w = cplx(0.0, -params.kappa) / cplx(1.0, -params.eps) *
                   std::exp(sign * I * kPi * ba) * xi * principal_pow(k.z, -k.b) * scale;
    return {p, p_prime, e, e_prime, w};
}

}  // namespace

FundamentalPair fundamental_pair(const ProfileParams& params, double xi, double tol)
{
    return fundamental_pair_impl(params, xi, tol, false);
}

FundamentalPair fundamental_pair_scaled(const ProfileParams& params, double xi, double tol)
{
    return fundamental_pair_impl(params, xi, tol, true);
}

cplx wronskian_closed_form(const ProfileParams& params, double xi)
{
    const KummerArgs k = kummer_args(params, xi);
    const double sign = k.z.imag() > 0.0 ? 1.0 : -1.0;
    return cplx(0.0, -params.kappa) / cplx(1.0, -params.eps) *
           std::exp(sign * I * kPi * (k.b - k.a)) * xi * principal_pow(k.z, -k.b) *
           std::exp(k.z);
}

cplx kernel_k(const ProfileParams& params, double xi, double eta)
{
    // Both pieces carry e^{z(eta)} in W and e^{z(.)} in E; work with the
    // scaled pair and restore exp(z(xi) - z(eta)) where it does not cancel.
    const FundamentalPair at_xi = fundamental_pair_scaled(params, xi);
    const FundamentalPair at_eta = fundamental_pair_scaled(params, eta);
    const cplx c = -1.0 / cplx(1.0, -params.eps);
    if (eta <= xi) {
        return c * at_xi.p * at_eta.e / at_eta.w;
    }
    const cplx shift = std::exp(kummer_z(params, xi) - kummer_z(params, eta));
    return c * at_xi.e * at_eta.p / at_eta.w * shift;
}

FarFieldExpansion farfield_coeffs(const ProfileParams& params, cplx a0, int n, double nonlinear)
{
    if (n < 0) throw DomainError("farfield_coeffs needs n >= 0");
    if (n > 2) throw UnsupportedOrderError("farfield_coeffs implements n <= 2 only");
    if (!(params.kappa > 0.0)) throw DomainError("farfield_coeffs requires kappa > 0");

    const cplx s = decay_exponent(params);
    const cplx diffusion(1.0, -params.eps);
    const cplx cubic = nonlinear * cplx(1.0, params.delta);
    const double d = params.d;
    const double sigma = params.sigma;

    FarFieldExpansion out{s, {a0}, n + 1};
    if (n == 0) return out;

    const double m0 = std::norm(a0);  // |a0|^2
    const cplx g0 = m0 == 0.0 ? cplx(0.0) : std::pow(m0, sigma) * a0;
    const cplx a1 = (diffusion * s * (s + d - 2.0) * a0 + cubic * g0) / (2.0 * I * params.kappa);
    out.coeffs.push_back(a1);
    if (n == 1) return out;

    cplx g1 = 0.0;
    if (m0 != 0.0) {
        g1 = (sigma + 1.0) * std::pow(m0, sigma) * a1 +
             sigma * std::pow(m0, sigma - 1.0) * a0 * a0 * std::conj(a1);
    }
    const cplx a2 =
        (diffusion * (s - 2.0) * (s + d - 4.0) * a1 + cubic * g1) / (4.0 * I * params.kappa);
    out.coeffs.push_back(a2);
    return out;
}

std::pair<cplx, cplx> farfield_eval(const FarFieldExpansion& expansion, double xi)
{
    cplx f = 0.0;
    cplx fp = 0.0;
    const double log_xi = std::log(xi);
    for (std::size_t l = 0; l < expansion.coeffs.size(); ++l) {
        const cplx power = expansion.exponent - 2.0 * static_cast<double>(l);
        const cplx term = expansion.coeffs[l] * std::exp(power * log_xi);
        f += term;
        fp += power * term / xi;
    }
    return {f, fp};
}

FarFieldExpansion farfield_match(const ProfileParams& params, cplx beta, double xi, int n_terms)
{
    if (n_terms < 1) throw DomainError("farfield_match needs n_terms >= 1");
    const cplx lead = std::exp(decay_exponent(params) * std::log(xi));
    cplx a0 = beta / lead;
    FarFieldExpansion expansion = farfield_coeffs(params, a0, n_terms - 1);
    // F(xi) = beta fixes a0 through a contraction with ratio O(xi^-2).
    for (int it = 0; it < 60 && n_terms > 1; ++it) {
        const cplx value = farfield_eval(expansion, xi).first;
        if (value == 0.0) break;
        const cplx next = a0 * beta / value;
        const bool done = std::abs(next - a0) <= 1e-15 * std::abs(a0);
        a0 = next;
        expansion = farfield_coeffs(params, a0, n_terms - 1);
        if (done) break;
    }
    return expansion;
}

cplx farfield_log_derivative(const ProfileParams& params, cplx beta, double xi, int n_terms)
{
    if (n_terms == 1) return decay_exponent(params) / xi;
    // beta = 0 is the linear limit; the ratio F'/F is then independent of a0
    const FarFieldExpansion expansion = beta == 0.0
                                            ? farfield_coeffs(params, 1.0, n_terms - 1, 0.0)
                                            : farfield_match(params, beta, xi, n_terms);
    const auto [f, fp] = farfield_eval(expansion, xi);
    return fp / f;
}

namespace {

// int_0^h e^{-lambda t} (g0 + (g1 - g0) t/h) dt
cplx filon_panel(cplx lambda, double h, cplx g0, cplx g1)
{
    const cplx x = lambda * h;
    cplx phi0;
    cplx phi1;
    if (std::abs(x) < 1e-2) {
        phi0 = h * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0);
        phi1 = h * h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0 + x * x * x * x / 144.0);
    } else {
        const cplx e = std::exp(-x);
        phi0 = (1.0 - e) / lambda;
        phi1 = (1.0 - e * (1.0 + x)) / (lambda * lambda);
    }
    return g0 * phi0 + (g1 - g0) / h * phi1;
}

}  // namespace

PicardResult picard_farfield(cplx beta, const ProfileParams& params, double xi1,
                             std::span<const double> grid, const PicardOptions& opts)
{
    validate(params);
    if (!(params.eps > 0.0)) throw DomainError("picard_farfield requires eps > 0");
    if (!(xi1 >= 1.0)) throw DomainError("picard_farfield requires xi1 >= 1");
    for (double g : grid) {
        if (!(g >= xi1)) throw DomainError("picard_farfield grid must lie in [xi1, inf)");
    }

    const double xi_top = grid.empty() ? xi1 : *std::max_element(grid.begin(), grid.end());
    // Beyond Xi the factor exp(Re z(xi) - Re z(eta)) is below the cutoff.
    const double decay_rate = params.kappa * params.eps / (2.0 * (1.0 + params.eps * params.eps));
    const double xi_end =
        std::sqrt(xi_top * xi_top + std::log(1.0 / opts.cutoff) / decay_rate) + opts.step;

    std::vector<double> nodes;
    for (double x = xi1; x < xi_end; x += opts.step) nodes.push_back(x);
    nodes.push_back(xi_end);
    nodes.insert(nodes.end(), grid.begin(), grid.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                nodes.end());
    const std::size_t m = nodes.size();

    std::vector<cplx> p(m), e(m), w(m), z(m);
    for (std::size_t k = 0; k < m; ++k) {
        const FundamentalPair fp = fundamental_pair_scaled(params, nodes[k]);
        p[k] = fp.p;
        e[k] = fp.e;
        w[k] = fp.w;
        z[k] = kummer_z(params, nodes[k]);
    }

    const cplx c = cplx(1.0, params.delta) / cplx(1.0, -params.eps);
    const double sigma = params.sigma;
    auto cubic = [sigma](cplx u) {
        const double m2 = std::norm(u);
        return m2 == 0.0 ? cplx(0.0) : std::pow(m2, sigma) * u;
    };

    std::vector<cplx> u(m);
    for (std::size_t k = 0; k < m; ++k) u[k] = beta * p[k] / p[0];

    std::vector<cplx> next(m), inner(m), outer(m), nl(m);
    PicardResult result;
    double previous_change = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    for (int sweep = 1; sweep <= opts.iters; ++sweep) {
        for (std::size_t k = 0; k < m; ++k) nl[k] = cubic(u[k]);

        // inner(k) = int_{xi1}^{xi_k} E W^{-1} N (exponentials cancel)
        inner[0] = 0.0;
        for (std::size_t k = 1; k < m; ++k) {
            const double h = nodes[k] - nodes[k - 1];
            inner[k] = inner[k - 1] +
                       0.5 * h * (e[k - 1] * nl[k - 1] / w[k - 1] + e[k] * nl[k] / w[k]);
        }
        // outer(k) = int_{xi_k}^{Xi} exp(z_k - z(eta)) P W^{-1} N, by backward recursion
        outer[m - 1] = 0.0;
        for (std::size_t k = m - 1; k-- > 0;) {
            const double h = nodes[k + 1] - nodes[k];
            const cplx lambda = (z[k + 1] - z[k]) / h;
            const cplx g0 = p[k] * nl[k] / w[k];
            const cplx g1 = p[k + 1] * nl[k + 1] / w[k + 1];
            outer[k] = std::exp(z[k] - z[k + 1]) * outer[k + 1] + filon_panel(lambda, h, g0, g1);
        }

        const cplx gamma = (beta - c * e[0] * outer[0]) / p[0];
        double change = 0.0;
        double size = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            next[k] = gamma * p[k] + c * (p[k] * inner[k] + e[k] * outer[k]);
            if (!std::isfinite(next[k].real()) || !std::isfinite(next[k].imag()))
                throw ConvergenceError("picard_farfield: iterate is not finite");
            change = std::max(change, std::abs(next[k] - u[k]));
            size = std::max(size, std::abs(next[k]));
        }
        u.swap(next);
        result.sweeps = sweep;
        result.last_change = change;
        if (size == 0.0 || change <= opts.stall * size) break;
        growth_streak = change > previous_change ? growth_streak + 1 : 0;
        if (growth_streak >= 3)
            throw ConvergenceError("picard_farfield: sweeps diverge, |beta| too large");
        previous_change = change;
    }

    result.values.reserve(grid.size());
    for (double g : grid) {
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), g - 1e-12);
        result.values.push_back(u[static_cast<std::size_t>(it - nodes.begin())]);
    }
    return result;
}

}  // namespace blowup
