#include "blowup/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Rhs {
    double dm1;
    double kappa;
    cplx linear;      // i kappa/sigma - omega
    cplx cubic;       // nonlinear (1 + i delta)
    cplx inv_diff;    // 1/(1 - i eps)
    double sigma;
    bool sigma_one;
    double d;

    explicit Rhs(const ProfileParams& p, double nonlinear)
        : dm1(p.d - 1.0),
          kappa(p.kappa),
          linear(-p.omega, p.kappa / p.sigma),
          cubic(nonlinear * cplx(1.0, p.delta)),
          inv_diff(1.0 / cplx(1.0, -p.eps)),
          sigma(p.sigma),
          sigma_one(p.sigma == 1.0),
          d(p.d)
    {
    }

    cplx nonlinearity(cplx q) const
    {
        const double m2 = std::norm(q);
        if (m2 == 0.0) return 0.0;
        return (sigma_one ? m2 : std::pow(m2, sigma)) * q;
    }

    cplx operator()(double xi, cplx q, cplx qp) const
    {
        const cplx rest = linear * q + cubic * nonlinearity(q);
        if (xi == 0.0) return -inv_diff * rest / d;
        return -dm1 / xi * qp - inv_diff * (cplx(0.0, kappa * xi) * qp + rest);
    }
};

struct State {
    cplx q;
    cplx p;
};

inline double err_component(cplx err, cplx y0, cplx y1, double tol)
{
    const double sc = tol * (1.0 + std::max(std::abs(y0), std::abs(y1)));
    return std::norm(err) / (sc * sc);
}

}  // namespace

cplx profile_second_derivative(const ProfileParams& params, double xi, cplx q, cplx q_prime,
                               double nonlinear)
{
    return Rhs(params, nonlinear)(xi, q, q_prime);
}

ProfileState taylor_start(const ProfileParams& params, cplx mu, double xi0, double nonlinear)
{
    const Rhs rhs(params, nonlinear);
    const cplx diff(1.0, -params.eps);
    const cplx c2 = -(rhs.linear * mu + rhs.cubic * rhs.nonlinearity(mu)) / (2.0 * params.d * diff);
    // xi^2 coefficient of the equation: |Q|^{2 sigma} Q grows by
    // |mu|^{2 sigma} (c2 + 2 sigma Re(conj(mu) c2) mu / |mu|^2) xi^2
    cplx cubic2 = 0.0;
    const double m2 = std::norm(mu);
    if (m2 > 0.0) {
        cubic2 = std::pow(m2, params.sigma) * (c2 + 2.0 * params.sigma * (std::conj(mu) * c2).real() * mu / m2);
    }
    const cplx c4 = -(cplx(0.0, 2.0 * params.kappa) * c2 + rhs.linear * c2 + rhs.cubic * cubic2) /
                    (4.0 * (params.d + 2.0) * diff);
    const double x2 = xi0 * xi0;
    return {mu + c2 * x2 + c4 * x2 * x2, 2.0 * c2 * xi0 + 4.0 * c4 * x2 * xi0};
}

ProfileState integrate_span(const ProfileParams& params, double xi_from, ProfileState start,
                            double xi_to, const IntegratorOptions& opts,
                            std::vector<TrajectoryNode>* record)
{
    const Rhs f(params, opts.nonlinear);
    const double tol = opts.tol;
    const double direction = xi_to >= xi_from ? 1.0 : -1.0;
    double xi = xi_from;
    State y{start.q, start.q_prime};
    cplx k1 = f(xi, y.q, y.p);
    if (record) record->push_back({xi, y.q, y.p, k1});
    if (xi_to == xi_from) return start;

    double h = direction * std::min(opts.initial_step, std::abs(xi_to - xi_from));
    double err_prev = 1e-4;
    long steps = 0;
    constexpr double kAlpha = 0.7 / 5.0;
    constexpr double kBeta = 0.4 / 5.0;

    while (direction * (xi_to - xi) > 0.0) {
        if (++steps > opts.max_steps) throw StiffnessError("integrate: step budget exhausted");
        bool last = false;
        if (direction * (xi + h - xi_to) >= 0.0) {
            h = xi_to - xi;
            last = true;
        }
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(xi)))
            throw StiffnessError("integrate: step size underflow");

        // stage derivatives: dq = p, dp = f(xi, q, p)
        const cplx kq1 = y.p, kp1 = k1;
        const cplx q2 = y.q + h * a21 * kq1, p2 = y.p + h * a21 * kp1;
        const cplx kq2 = p2, kp2 = f(xi + c2 * h, q2, p2);
        const cplx q3 = y.q + h * (a31 * kq1 + a32 * kq2);
        const cplx p3 = y.p + h * (a31 * kp1 + a32 * kp2);
        const cplx kq3 = p3, kp3 = f(xi + c3 * h, q3, p3);
        const cplx q4 = y.q + h * (a41 * kq1 + a42 * kq2 + a43 * kq3);
        const cplx p4 = y.p + h * (a41 * kp1 + a42 * kp2 + a43 * kp3);
        const cplx kq4 = p4, kp4 = f(xi + c4 * h, q4, p4);
        const cplx q5 = y.q + h * (a51 * kq1 + a52 * kq2 + a53 * kq3 + a54 * kq4);
        const cplx p5 = y.p + h * (a51 * kp1 + a52 * kp2 + a53 * kp3 + a54 * kp4);
        const cplx kq5 = p5, kp5 = f(xi + c5 * h, q5, p5);
        const cplx q6 = y.q + h * (a61 * kq1 + a62 * kq2 + a63 * kq3 + a64 * kq4 + a65 * kq5);
        const cplx p6 = y.p + h * (a61 * kp1 + a62 * kp2 + a63 * kp3 + a64 * kp4 + a65 * kp5);
        const cplx kq6 = p6, kp6 = f(xi + h, q6, p6);
        const cplx qn = y.q + h * (b1 * kq1 + b3 * kq3 + b4 * kq4 + b5 * kq5 + b6 * kq6);
        const cplx pn = y.p + h * (b1 * kp1 + b3 * kp3 + b4 * kp4 + b5 * kp5 + b6 * kp6);
        const double xn = last ? xi_to : xi + h;
        const cplx kq7 = pn, kp7 = f(xn, qn, pn);

        const cplx eq = h * (e1 * kq1 + e3 * kq3 + e4 * kq4 + e5 * kq5 + e6 * kq6 + e7 * kq7);
        const cplx ep = h * (e1 * kp1 + e3 * kp3 + e4 * kp4 + e5 * kp5 + e6 * kp6 + e7 * kp7);
        double err = std::sqrt(0.5 * (err_component(eq, y.q, qn, tol) +
                                      err_component(ep, y.p, pn, tol)));
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            xi = xn;
            y = {qn, pn};
            k1 = kp7;
            if (record) record->push_back({xi, y.q, y.p, k1});
            if (std::abs(y.q) > opts.blowup_guard)
                throw EscapeError("integrate: |Q| exceeded the blow-up guard", xi);
            const double e = std::max(err, 1e-10);
            double factor = 0.9 * std::pow(e, -kAlpha) * std::pow(err_prev, kBeta);
            factor = std::clamp(factor, 0.2, 5.0);
            err_prev = std::max(err, 1e-4);
            h *= factor;
        } else {
            const double factor = std::max(0.2, 0.9 * std::pow(err, -kAlpha));
            h *= factor;
        }
    }
    return {y.q, y.p};
}

namespace {

std::pair<double, ProfileState> start_state(const ProfileParams& params, cplx mu,
                                            const IntegratorOptions& opts)
{
    validate(params);
    if (opts.xi0 == 0.0) {
        if (params.d != 1) throw DomainError("xi0 = 0 is only allowed for d = 1");
        return {0.0, ProfileState{mu, 0.0}};
    }
    if (!(opts.xi0 > 0.0 && opts.xi0 <= 1e-2)) throw DomainError("xi0 must lie in (0, 1e-2]");
    return {opts.xi0, taylor_start(params, mu, opts.xi0, opts.nonlinear)};
}

void check_span(double xi_end, const IntegratorOptions& opts)
{
    if (!(xi_end >= 1.0)) throw DomainError("integrate requires xi_end >= 1");
    if (!(opts.tol >= 1e-14 && opts.tol <= 1e-6)) throw DomainError("tol must lie in [1e-14, 1e-6]");
}

}  // namespace

ProfileTrajectory integrate(const ProfileParams& params, cplx mu, double xi_end,
                            const IntegratorOptions& opts)
{
    check_span(xi_end, opts);
    const auto [xi0, start] = start_state(params, mu, opts);
    ProfileTrajectory traj{params, mu, {}, xi_end, opts.tol};
    traj.nodes.reserve(4096);
    integrate_span(params, xi0, start, xi_end, opts, &traj.nodes);
    return traj;
}

ProfileState integrate_to(const ProfileParams& params, cplx mu, double xi_end,
                          const IntegratorOptions& opts)
{
    check_span(xi_end, opts);
    const auto [xi0, start] = start_state(params, mu, opts);
    return integrate_span(params, xi0, start, xi_end, opts);
}

ProfileState sample(const ProfileTrajectory& traj, double xi)
{
    const auto& nodes = traj.nodes;
    if (nodes.empty() || xi < nodes.front().xi || xi > nodes.back().xi)
        throw RangeError("sample: xi outside the trajectory");
    auto it = std::lower_bound(nodes.begin(), nodes.end(), xi,
                               [](const TrajectoryNode& n, double x) { return n.xi < x; });
    if (it->xi == xi) return {it->q, it->q_prime};
    const TrajectoryNode& right = *it;
    const TrajectoryNode& left = *(it - 1);
    const double h = right.xi - left.xi;
    const double t = (xi - left.xi) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const cplx q = h00 * left.q + h10 * h * left.q_prime + h01 * right.q + h11 * h * right.q_prime;
    const cplx qp = h00 * left.q_prime + h10 * h * left.q_second + h01 * right.q_prime +
                    h11 * h * right.q_second;
    return {q, qp};
}

}  // namespace blowup
