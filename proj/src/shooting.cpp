#include "blowup/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/special.hpp"

namespace blowup {

const char* to_string(Normalization n)
{
    return n == Normalization::FixOmega ? "fix_omega" : "fix_amplitude";
}

Normalization normalization_from_string(const std::string& name)
{
    if (name == "fix_omega") return Normalization::FixOmega;
    if (name == "fix_amplitude") return Normalization::FixAmplitude;
    throw UsageError("unknown normalization '" + name + "' (fix_omega | fix_amplitude)");
}

namespace {

void check_residual_inputs(double mu, const ShootingOptions& opts)
{
    if (!(mu > 0.0)) throw DomainError("residual needs mu > 0");
    if (!(opts.xi1 >= 10.0)) throw DomainError("residual needs xi1 >= 10");
    if (opts.n_terms != 1 && opts.n_terms != 2) {
        throw UnsupportedOrderError("boundary condition order must be 1 or 2");
    }
}

// Gap between the growth rates of the two WKB modes of the linearized
// equation, (1 - i eps) l^2 + i kappa xi l - omega + i kappa / sigma = 0.
double mode_gap(const ProfileParams& p, double xi)
{
    const cplx diff(1.0, -p.eps);
    const cplx disc = -p.kappa * p.kappa * xi * xi + 4.0 * diff * cplx(p.omega, -p.kappa / p.sigma);
    return std::abs((std::sqrt(disc) / diff).real());
}

// Point where the integrated mode gap reaches the evanescent budget.
double evanescent_point(const ProfileParams& p, const ShootingOptions& opts)
{
    constexpr int kPanels = 256;
    const double h = opts.xi1 / kPanels;
    double total = 0.0;
    double prev = mode_gap(p, 0.0);
    for (int i = 1; i <= kPanels; ++i) {
        const double next = mode_gap(p, i * h);
        const double piece = 0.5 * h * (prev + next);
        if (total + piece >= opts.evanescent_budget) {
            return (i - 1) * h + h * (opts.evanescent_budget - total) / piece;
        }
        total += piece;
        prev = next;
    }
    return opts.xi1;
}

struct Matching {
    double xi;
    bool linear_leg;  // the evanescent budget binds: the tail is exponentially small there
};

// Point where Re z reaches the growth budget or the evanescent budget runs
// out, whichever comes first, never below a few units of xi.
Matching matching_point(const ProfileParams& p, const ShootingOptions& opts)
{
    const double lo = std::min(4.0, opts.xi1);
    const double ev = evanescent_point(p, opts);
    double growth = opts.xi1;
    if (p.eps > 0.0) {
        growth = std::sqrt(2.0 * opts.growth_budget * (1.0 + p.eps * p.eps) / (p.kappa * p.eps));
    }
    if (ev < growth) return {std::clamp(ev, lo, opts.xi1), true};
    return {std::clamp(growth, lo, opts.xi1), false};
}

ProfileState farfield_state(const ProfileParams& p, cplx beta, const ShootingOptions& opts)
{
    return {beta, farfield_log_derivative(p, beta, opts.xi1, opts.n_terms) * beta};
}

// Amplitude beta at xi1 whose far-field continuation passes through `target`
// at xm. The backward map is close to complex-linear in beta while the leg
// stays small, so a chord iteration on a finite-difference Jacobian converges
// in a few sweeps; the Jacobian is refreshed whenever a sweep stalls. When the
// forward value is large the map is strongly nonlinear and may have no
// preimage at all; that case is reported as an escape of the backward leg.
std::pair<cplx, ProfileState> match_backward(const ProfileParams& p, cplx target, double xm,
                                             const ShootingOptions& opts)
{
    auto back = [&](cplx beta) {
        try {
            return integrate_span(p, opts.xi1, farfield_state(p, beta, opts), xm, opts.integrator);
        } catch (const StiffnessError& e) {
            throw EscapeError(std::string("far-field leg failed: ") + e.what(), xm);
        }
    };
    // Start from the gain of the backward map on a small (linear) amplitude;
    // across an evanescent stretch it is far from the algebraic decay law.
    const cplx s = decay_exponent(p);
    const cplx trial = 1e-8 * target * std::pow(opts.xi1 / xm, s);
    cplx beta = trial * target / back(trial).q;
    ProfileState at = back(beta);
    const double scale = std::abs(target);
    double jac[2][2] = {};
    bool fresh = false;
    auto refresh = [&] {
        const double h = 1e-7 * std::max(std::abs(beta), 1e-300);
        const cplx dr = (back(beta + h).q - at.q) / h;
        const cplx di = (back(beta + cplx(0.0, h)).q - at.q) / h;
        jac[0][0] = dr.real();
        jac[1][0] = dr.imag();
        jac[0][1] = di.real();
        jac[1][1] = di.imag();
        fresh = true;
    };
    refresh();
    for (int iter = 0; iter < 40; ++iter) {
        const cplx g = at.q - target;
        if (std::abs(g) <= 1e-13 * scale) return {beta, at};
        const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if (det == 0.0 || !std::isfinite(det)) throw EscapeError("singular far-field matching map", xm);
        const cplx step((jac[1][1] * g.real() - jac[0][1] * g.imag()) / det,
                        (jac[0][0] * g.imag() - jac[1][0] * g.real()) / det);
        double lambda = 1.0;
        bool moved = false;
        for (int halving = 0; halving < 8 && !moved; ++halving, lambda *= 0.5) {
            try {
                const ProfileState next = back(beta - lambda * step);
                if (std::abs(next.q - target) < std::abs(g)) {
                    const bool slow = std::abs(next.q - target) > 0.5 * std::abs(g);
                    beta -= lambda * step;
                    at = next;
                    moved = true;
                    fresh = false;
                    if (slow) refresh();
                }
            } catch (const EscapeError&) {
            }
        }
        if (!moved) {
            if (fresh) break;
            refresh();
        }
    }
    if (std::abs(at.q - target) <= 1e-10 * scale) return {beta, at};
    throw EscapeError("no far-field continuation reaches the forward value", xm);
}

struct LinearLeg {
    cplx beta;             // far-field amplitude at xi1
    cplx log_der;          // boundary log-derivative used at xi1
    IntegratorOptions options;
};

// Transport of the boundary condition on the linear equation: once with the
// small-amplitude log-derivative to estimate beta, then with the
// log-derivative at that beta, so the result reduces to the xi1 form at
// xm = xi1.
LinearLeg linear_leg_to(const ProfileParams& p, cplx target, double xm, const ShootingOptions& opts)
{
    LinearLeg leg{0.0, 0.0, opts.integrator};
    leg.options.nonlinear = 0.0;
    auto shape = [&](cplx beta) {
        leg.log_der = farfield_log_derivative(p, beta, opts.xi1, opts.n_terms);
        return integrate_span(p, opts.xi1, {1.0, leg.log_der}, xm, leg.options).q;
    };
    const cplx estimate = target / shape(0.0);
    leg.beta = target / shape(estimate);
    return leg;
}

}  // namespace

ResidualDetail residual_detail(const ProfileParams& params, double mu, const ShootingOptions& opts)
{
    validate(params);
    check_residual_inputs(mu, opts);
    const auto [xm, linear_leg] = matching_point(params, opts);
    const ProfileState fwd = integrate_to(params, mu, xm, opts.integrator);
    // e^{-z} removes the growth and the fast phase of the E component, so f is
    // smooth in the parameters while |f| is unchanged on the real axis of z.
    const cplx damp = std::exp(-kummer_z(params, xm));
    const double norm = std::max(1.0, std::abs(fwd.q));

    if (xm >= opts.xi1) {
        const cplx log_der = farfield_log_derivative(params, fwd.q, opts.xi1, opts.n_terms);
        const cplx f = opts.xi1 * (fwd.q_prime - log_der * fwd.q) * damp / norm;
        return {f, opts.xi1, fwd.q, fwd.q};
    }
    if (fwd.q == 0.0) return {0.0, xm, 0.0, 0.0};
    if (!linear_leg) {
        // Off a root the growing component can carry the forward value out of
        // reach of any far-field tail; the linear leg still measures the mismatch.
        try {
            const auto [beta, back] = match_backward(params, fwd.q, xm, opts);
            const cplx f = xm * (fwd.q_prime - back.q_prime) * damp / norm;
            return {f, xm, fwd.q, beta};
        } catch (const EscapeError&) {
        }
    }
    const LinearLeg leg = linear_leg_to(params, fwd.q, xm, opts);
    const ProfileState shape = integrate_span(params, opts.xi1, {1.0, leg.log_der}, xm, leg.options);
    const cplx f = xm * (fwd.q_prime - fwd.q * shape.q_prime / shape.q) * damp / norm;
    return {f, xm, fwd.q, leg.beta};
}

cplx residual(const ProfileParams& params, double mu, const ShootingOptions& opts)
{
    return residual_detail(params, mu, opts).f;
}

std::array<double, 2> RootPoint::unknowns() const
{
    if (normalization == Normalization::FixOmega) return {mu.real(), params.kappa};
    return {params.kappa, params.omega};
}

ProfileParams ShootingProblem::params_at(std::array<double, 2> x) const
{
    ProfileParams p = fixed;
    if (normalization == Normalization::FixOmega) {
        p.omega = 1.0;
        p.kappa = x[1];
    } else {
        p.kappa = x[0];
        p.omega = x[1];
    }
    return p;
}

double ShootingProblem::mu_at(std::array<double, 2> x) const
{
    return normalization == Normalization::FixOmega ? x[0] : 1.0;
}

cplx ShootingProblem::operator()(std::array<double, 2> x) const
{
    return residual(params_at(x), mu_at(x), options);
}

RootPoint newton_root(std::array<double, 2> guess, const ShootingProblem& problem,
                      const NewtonOptions& newton)
{
    std::array<double, 2> x = guess;
    cplx f = problem(x);
    RootPoint out;
    out.normalization = problem.normalization;
    out.xi1 = problem.options.xi1;
    out.n_terms = problem.options.n_terms;

    double last_step = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter <= newton.max_iter; ++iter) {
        if (std::abs(f) <= newton.tol && (iter == 0 || last_step <= newton.step_tol ||
                                          std::abs(f) <= 1e-3 * newton.tol)) {
            out.params = problem.params_at(x);
            out.mu = problem.mu_at(x);
            out.residual_norm = std::abs(f);
            out.iterations = iter;
            return out;
        }
        if (iter == newton.max_iter) break;

        double jac[2][2];
        for (int k = 0; k < 2; ++k) {
            const double h = 1e-6 * (1.0 + std::abs(x[k]));
            auto xp = x;
            auto xm = x;
            xp[k] += h;
            xm[k] -= h;
            const cplx d = (problem(xp) - problem(xm)) / (2.0 * h);
            jac[0][k] = d.real();
            jac[1][k] = d.imag();
        }
        const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        const double jnorm = std::abs(jac[0][0]) + std::abs(jac[0][1]) + std::abs(jac[1][0]) +
                             std::abs(jac[1][1]);
        if (!std::isfinite(det) || std::abs(det) <= 1e-14 * jnorm * jnorm) {
            throw DegenerateError("singular shooting Jacobian at (" + std::to_string(x[0]) + ", " +
                                  std::to_string(x[1]) + ")");
        }
        const std::array<double, 2> step = {
            (jac[1][1] * f.real() - jac[0][1] * f.imag()) / det,
            (jac[0][0] * f.imag() - jac[1][0] * f.real()) / det};

        // Both unknowns are positive in either chart; a step may at most halve
        // one of them. Long jumps toward kappa -> 0 otherwise cross into the
        // interior-matched form of f, whose scale differs from the xi1 form.
        double lambda = 1.0;
        for (int k = 0; k < 2; ++k) {
            if (step[k] > 0.0) lambda = std::min(lambda, 0.5 * x[k] / step[k]);
        }
        bool accepted = false;
        for (int halving = 0; halving <= newton.max_halvings; ++halving) {
            const std::array<double, 2> trial = {x[0] - lambda * step[0], x[1] - lambda * step[1]};
            try {
                const cplx ft = problem(trial);
                if (std::abs(ft) < std::abs(f) || halving == newton.max_halvings) {
                    x = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
                // escape, failed far-field matching or a step outside the domain
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
        last_step = lambda * std::hypot(step[0], step[1]);
    }
    throw ConvergenceError("Newton did not converge; last iterate (" + std::to_string(x[0]) + ", " +
                           std::to_string(x[1]) + "), |f| = " + std::to_string(std::abs(f)));
}

RootPoint normalize_convert(const RootPoint& root, Normalization target)
{
    if (root.normalization == target) return root;
    RootPoint out = root;
    out.normalization = target;
    const double sigma = root.params.sigma;
    if (target == Normalization::FixAmplitude) {
        // lambda = mu^{-sigma} maps Q(0) = mu to 1
        const double mu = std::abs(root.mu);
        const double scale = std::pow(mu, -2.0 * sigma);
        out.params.kappa = root.params.kappa * scale;
        out.params.omega = root.params.omega * scale;
        out.mu = 1.0;
    } else {
        // lambda = omega^{-1/2} maps omega to 1
        const double omega = root.params.omega;
        out.params.kappa = root.params.kappa / omega;
        out.params.omega = 1.0;
        out.mu = std::abs(root.mu) * std::pow(omega, -0.5 / sigma);
    }
    return out;
}

int profile_maxima_count(const ProfileTrajectory& traj, double plateau)
{
    // Collapse the node sequence of |Q| into monotone runs, ignoring changes
    // below the plateau tolerance, and count rising-to-falling turns. Under the
    // even extension a maximum at xi > 0 appears twice, one at the origin once.
    int count = 0;
    int direction = 0;  // +1 rising, -1 falling, 0 before the first move
    double anchor = 0.0;
    for (std::size_t i = 0; i < traj.nodes.size(); ++i) {
        const double a = std::abs(traj.nodes[i].q);
        if (i == 0) {
            anchor = a;
            continue;
        }
        if (a > anchor + plateau) {
            direction = 1;
            anchor = a;
        } else if (a < anchor - plateau) {
            if (direction == 0) count += 1;
            if (direction == 1) count += 2;
            direction = -1;
            anchor = a;
        } else if ((direction == 1 && a > anchor) || (direction == -1 && a < anchor)) {
            anchor = a;
        }
    }
    return count;
}

ProfileTrajectory profile_trajectory(const ProfileParams& params, double mu, const ShootingOptions& opts)
{
    validate(params);
    check_residual_inputs(mu, opts);
    const auto [xm, linear_leg] = matching_point(params, opts);
    ProfileTrajectory traj = integrate(params, mu, xm, opts.integrator);
    if (xm >= opts.xi1) return traj;
    const ProfileState end{traj.nodes.back().q, traj.nodes.back().q_prime};
    if (end.q == 0.0) return integrate(params, mu, opts.xi1, opts.integrator);
    std::vector<TrajectoryNode> back;
    bool matched = false;
    if (!linear_leg) {
        try {
            const cplx beta = match_backward(params, end.q, xm, opts).first;
            integrate_span(params, opts.xi1, farfield_state(params, beta, opts), xm, opts.integrator, &back);
            matched = true;
        } catch (const EscapeError&) {
            back.clear();
        }
    }
    if (!matched) {
        const LinearLeg leg = linear_leg_to(params, end.q, xm, opts);
        integrate_span(params, opts.xi1, {leg.beta, leg.beta * leg.log_der}, xm, leg.options, &back);
    }
    // back runs from xi1 down to xm; its last node duplicates the forward end
    for (auto it = back.rbegin() + 1; it != back.rend(); ++it) traj.nodes.push_back(*it);
    traj.xi_end = opts.xi1;
    return traj;
}

ProfileTrajectory root_trajectory(const RootPoint& root, const ShootingOptions& opts)
{
    ShootingOptions o = opts;
    o.xi1 = root.xi1;
    o.n_terms = root.n_terms;
    return profile_trajectory(root.params, std::abs(root.mu), o);
}

double Rect::diameter() const { return std::hypot(x_hi - x_lo, y_hi - y_lo); }

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Sample {
    bool escaped = false;
    cplx f;
};

// Residual samples on a rectangle boundary, computed in parallel batches.
class BoundarySampler {
public:
    explicit BoundarySampler(const ShootingContext& ctx) : ctx_(ctx) {}

    std::vector<Sample> evaluate(const std::vector<std::array<double, 2>>& pts) const
    {
        std::vector<Sample> out(pts.size());
        parallel_for(pts.size(), ctx_.jobs, [&](std::size_t i) {
            try {
                out[i].f = ctx_.problem(pts[i]);
                if (!std::isfinite(out[i].f.real()) || !std::isfinite(out[i].f.imag())) {
                    out[i].escaped = true;
                }
            } catch (const EscapeError&) {
                out[i].escaped = true;
            } catch (const StiffnessError&) {
                out[i].escaped = true;
            }
        });
        return out;
    }

private:
    const ShootingContext& ctx_;
};

double arg_step(cplx from, cplx to) { return std::arg(to / from); }

// Winding contribution of one straight side, refined until each increment is
// below pi/2.
double side_winding(std::array<double, 2> a, std::array<double, 2> b, int per_side,
                    const ShootingContext& ctx, const BoundarySampler& sampler)
{
    constexpr int kMaxSub = 4096;
    std::vector<double> ts(per_side + 1);
    for (int i = 0; i <= per_side; ++i) ts[i] = static_cast<double>(i) / per_side;
    auto point = [&](double t) {
        return std::array<double, 2>{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
    };
    auto eval = [&](const std::vector<double>& t) {
        std::vector<std::array<double, 2>> pts;
        pts.reserve(t.size());
        for (double v : t) pts.push_back(point(v));
        return sampler.evaluate(pts);
    };
    std::vector<Sample> vals = eval(ts);

    for (;;) {
        for (const auto& v : vals) {
            if (v.escaped) throw ExcludedRegionError("IVP escape on the rectangle boundary");
            if (std::abs(v.f) < ctx.zero_threshold) {
                throw UnreliableDegreeError("residual nearly vanishes on the rectangle boundary");
            }
        }
        std::vector<double> mids;
        for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
            if (std::abs(arg_step(vals[i].f, vals[i + 1].f)) >= 0.5 * std::numbers::pi) {
                if (ts[i + 1] - ts[i] <= 1.0 / kMaxSub + 1e-15) {
                    throw UnreliableDegreeError("argument of the residual unresolved at 1/4096 side");
                }
                mids.push_back(0.5 * (ts[i] + ts[i + 1]));
            }
        }
        if (mids.empty()) break;
        const std::vector<Sample> mid_vals = eval(mids);
        std::vector<double> ts2;
        std::vector<Sample> vals2;
        std::size_t m = 0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            ts2.push_back(ts[i]);
            vals2.push_back(vals[i]);
            if (m < mids.size() && i + 1 < ts.size() && mids[m] > ts[i] && mids[m] < ts[i + 1]) {
                ts2.push_back(mids[m]);
                vals2.push_back(mid_vals[m]);
                ++m;
            }
        }
        ts = std::move(ts2);
        vals = std::move(vals2);
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) total += arg_step(vals[i].f, vals[i + 1].f);
    return total;
}

bool below_floor(const Rect& r, const ShootingContext& ctx)
{
    return ctx.problem.normalization == Normalization::FixOmega && r.x_lo < ctx.mu_floor;
}

}  // namespace

int winding_degree(const Rect& rect, int per_side, const ShootingContext& ctx)
{
    if (per_side < 32) throw DomainError("winding_degree needs per_side >= 32");
    if (!(rect.x_lo < rect.x_hi && rect.y_lo < rect.y_hi)) throw DomainError("empty rectangle");
    if (below_floor(rect, ctx)) {
        throw ExcludedRegionError("rectangle reaches below the mu floor (trivial zero at mu = 0)");
    }
    const BoundarySampler sampler(ctx);
    const std::array<std::array<double, 2>, 4> corners = {{{rect.x_lo, rect.y_lo},
                                                          {rect.x_hi, rect.y_lo},
                                                          {rect.x_hi, rect.y_hi},
                                                          {rect.x_lo, rect.y_hi}}};
    double total = 0.0;
    for (int s = 0; s < 4; ++s) total += side_winding(corners[s], corners[(s + 1) % 4], per_side, ctx, sampler);
    return static_cast<int>(std::lround(total / kTwoPi));
}

LocateResult locate_roots(const Rect& rect, int max_depth, const ShootingContext& ctx, int per_side)
{
    LocateResult result;
    std::vector<std::array<double, 2>> candidates;

    struct Cell {
        Rect r;
        int depth;
    };
    Rect outer = rect;
    if (below_floor(outer, ctx)) {
        Rect cut = outer;
        cut.x_hi = std::min(outer.x_hi, ctx.mu_floor);
        result.excluded.push_back(cut);
        outer.x_lo = ctx.mu_floor;
        if (outer.x_lo >= outer.x_hi) return result;
    }
    std::vector<Cell> stack{{outer, 0}};
    while (!stack.empty()) {
        const Cell cell = stack.back();
        stack.pop_back();
        int deg = 0;
        const bool forced = cell.depth < ctx.forced_depth;
        try {
            deg = winding_degree(cell.r, per_side, ctx);
        } catch (const UnreliableDegreeError&) {
            // A root sitting on the boundary: fall back to splitting unless the
            // cell is already small, in which case its center is a candidate.
            if (cell.r.diameter() < 1e-2 || cell.depth >= max_depth) {
                result.unreliable.push_back(cell.r);
                candidates.push_back({0.5 * (cell.r.x_lo + cell.r.x_hi), 0.5 * (cell.r.y_lo + cell.r.y_hi)});
                continue;
            }
            deg = 1;  // force a split; the halves use different boundaries
        } catch (const ExcludedRegionError&) {
            if (cell.r.diameter() < 1e-2 || cell.depth >= max_depth) {
                result.excluded.push_back(cell.r);
                continue;
            }
            deg = 1;
        }
        if (deg == 0 && !forced) continue;
        if (deg == 0 && cell.r.diameter() < 1e-2) continue;
        if (cell.r.diameter() < 1e-2 || cell.depth >= max_depth) {
            candidates.push_back({0.5 * (cell.r.x_lo + cell.r.x_hi), 0.5 * (cell.r.y_lo + cell.r.y_hi)});
            continue;
        }
        Rect a = cell.r;
        Rect b = cell.r;
        // Split across the longer side; the offset breaks symmetry with grids of roots.
        if (cell.r.x_hi - cell.r.x_lo >= cell.r.y_hi - cell.r.y_lo) {
            const double m = cell.r.x_lo + 0.5013 * (cell.r.x_hi - cell.r.x_lo);
            a.x_hi = m;
            b.x_lo = m;
        } else {
            const double m = cell.r.y_lo + 0.5013 * (cell.r.y_hi - cell.r.y_lo);
            a.y_hi = m;
            b.y_lo = m;
        }
        stack.push_back({b, cell.depth + 1});
        stack.push_back({a, cell.depth + 1});
    }

    std::vector<std::optional<RootPoint>> polished(candidates.size());
    parallel_for(candidates.size(), ctx.jobs, [&](std::size_t i) {
        try {
            polished[i] = newton_root(candidates[i], ctx.problem, ctx.newton);
        } catch (const Error&) {
        }
    });
    for (auto& p : polished) {
        if (!p) continue;
        const auto u = p->unknowns();
        const bool dup = std::any_of(result.roots.begin(), result.roots.end(), [&](const RootPoint& r) {
            const auto v = r.unknowns();
            return std::hypot(u[0] - v[0], u[1] - v[1]) < 1e-4;
        });
        if (dup) continue;
        try {
            p->branch_index = profile_maxima_count(root_trajectory(*p, ctx.problem.options));
        } catch (const Error&) {
        }
        result.roots.push_back(*p);
    }
    std::sort(result.roots.begin(), result.roots.end(), [](const RootPoint& l, const RootPoint& r) {
        return l.unknowns() < r.unknowns();
    });
    return result;
}

}  // namespace blowup
