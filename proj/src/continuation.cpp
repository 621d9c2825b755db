#include "blowup/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace blowup {

using json = nlohmann::json;

const char* to_string(Stability s)
{
    switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    default: return "unknown";
    }
}

Stability stability_from_string(const std::string& name)
{
    if (name == "stable") return Stability::Stable;
    if (name == "unstable") return Stability::Unstable;
    if (name == "unknown") return Stability::Unknown;
    throw std::invalid_argument("unknown stability tag '" + name + "'");
}

DeltaRule DeltaRule::parse(const std::string& text)
{
    if (text == "0" || text == "zero") return zero();
    const auto star = text.find("*eps");
    if (star != std::string::npos && star + 4 == text.size()) {
        try {
            std::size_t used = 0;
            const double r = std::stod(text.substr(0, star), &used);
            if (used == star) return proportional(r);
        } catch (const std::exception&) {
        }
    }
    throw UsageError("delta rule must be '0' or '<r>*eps', got '" + text + "'");
}

std::string DeltaRule::to_string() const
{
    if (kind == Kind::Zero) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g*eps", r);
    return buf;
}

ProfileParams Branch::params_at(const BranchPoint& p) const
{
    ProfileParams out;
    out.d = d;
    out.sigma = sigma;
    out.eps = p.eps;
    out.delta = delta_rule(p.eps);
    out.kappa = p.kappa;
    out.omega = 1.0;
    return out;
}

namespace {

using Vec3 = std::array<double, 3>;
using Jac = std::array<Vec3, 2>;  // rows: Re f, Im f

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Solves A x = b for 3x3 A by Gaussian elimination with partial pivoting.
bool solve3(std::array<Vec3, 3> a, Vec3 b, Vec3& x)
{
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        if (a[piv][c] == 0.0 || !std::isfinite(a[piv][c])) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 3; ++r) {
            const double m = a[r][c] / a[c][c];
            for (int k = c; k < 3; ++k) a[r][k] -= m * a[c][k];
            b[r] -= m * b[c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

// The shooting system in scaled coordinates y = (mu, kappa, scale * eps).
class BranchSystem {
public:
    BranchSystem(const Branch& b, const ShootingOptions& opts) : branch_(b), opts_(opts)
    {
        opts_.xi1 = b.xi1;
        opts_.n_terms = b.n_terms;
    }

    cplx f(const Vec3& y) const
    {
        ProfileParams p;
        p.d = branch_.d;
        p.sigma = branch_.sigma;
        p.eps = y[2] / branch_.eps_scale;
        p.delta = branch_.delta_rule(p.eps);
        p.kappa = y[1];
        p.omega = 1.0;
        return residual(p, y[0], opts_);
    }

    // Central differences with step 1e-6 (1 + |y|); one-sided second order in
    // eps when the stencil would cross eps = 0.
    Jac jacobian(const Vec3& y) const
    {
        Jac j{};
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-6 * (1.0 + std::abs(y[k]));
            cplx d;
            if (k == 2 && y[2] - h < 0.0) {
                Vec3 y1 = y;
                Vec3 y2 = y;
                y1[2] += h;
                y2[2] += 2.0 * h;
                d = (-3.0 * f(y) + 4.0 * f(y1) - f(y2)) / (2.0 * h);
            } else {
                Vec3 yp = y;
                Vec3 ym = y;
                yp[k] += h;
                ym[k] -= h;
                d = (f(yp) - f(ym)) / (2.0 * h);
            }
            j[0][k] = d.real();
            j[1][k] = d.imag();
        }
        return j;
    }

    const Branch& branch() const { return branch_; }

private:
    const Branch& branch_;
    ShootingOptions opts_;
};

// Unit null vector of the 2x3 Jacobian, oriented along `previous`.
Vec3 tangent_of(const Jac& j, const Vec3& previous)
{
    Vec3 t = cross(j[0], j[1]);
    const double n = norm(t);
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateError("branch tangent undefined (rank-deficient Jacobian)");
    for (double& v : t) v /= n;
    if (dot(t, previous) < 0.0) {
        for (double& v : t) v = -v;
    }
    return t;
}

struct CorrectorResult {
    bool ok = false;
    Vec3 y{};
    cplx f;
    int iterations = 0;
    Jac jac{};
};

// Newton on {f(y) = 0, t.(y - y_pred) = 0}, starting from a given Jacobian and
// refreshing it when the contraction stalls.
CorrectorResult correct(const BranchSystem& sys, const Vec3& y_pred, const Vec3& t, Jac jac,
                        const ContinuationOptions& opts)
{
    CorrectorResult out;
    Vec3 y = y_pred;
    cplx f;
    try {
        f = sys.f(y);
    } catch (const Error&) {
        return out;
    }
    double prev = std::abs(f);
    for (int iter = 1; iter <= opts.max_corrector_iter; ++iter) {
        std::array<Vec3, 3> a = {jac[0], jac[1], t};
        const Vec3 rhs = {-f.real(), -f.imag(), -dot(t, {y[0] - y_pred[0], y[1] - y_pred[1], y[2] - y_pred[2]})};
        Vec3 dy{};
        if (!solve3(a, rhs, dy)) return out;
        for (int k = 0; k < 3; ++k) y[k] += dy[k];
        if (y[2] < 0.0 && y_pred[2] >= 0.0 && y[2] < -1e-12) {
            // the corrector may step slightly below eps = 0 only at the seed
            if (y_pred[2] > 0.0) return out;
            y[2] = 0.0;
        }
        try {
            f = sys.f(y);
        } catch (const Error&) {
            return out;
        }
        const double r = std::abs(f);
        if (r <= opts.tol && norm(dy) <= 1e-8 * (1.0 + norm(y))) {
            out.ok = true;
            out.y = y;
            out.f = f;
            out.iterations = iter;
            out.jac = jac;
            return out;
        }
        if (!std::isfinite(r)) return out;
        if (r > 0.5 * prev && iter >= 2) {
            try {
                jac = sys.jacobian(y);
            } catch (const Error&) {
                return out;
            }
        }
        prev = r;
    }
    return out;
}

Vec3 scaled(const Branch& b, const BranchPoint& p) { return {p.mu, p.kappa, b.eps_scale * p.eps}; }

BranchPoint make_point(const Branch& b, const Vec3& y, const Vec3& t, double s, double res)
{
    BranchPoint p;
    p.mu = y[0];
    p.kappa = y[1];
    p.eps = y[2] / b.eps_scale;
    p.arclength = s;
    p.tangent = t;
    p.residual_norm = res;
    return p;
}

// Cubic Hermite reconstruction between two points, in arclength.
struct HermiteSegment {
    Vec3 y0, y1, t0, t1;
    double s0, s1;

    Vec3 value(double s) const
    {
        const double h = s1 - s0;
        const double u = (s - s0) / h;
        const double h00 = 2 * u * u * u - 3 * u * u + 1;
        const double h10 = u * u * u - 2 * u * u + u;
        const double h01 = -2 * u * u * u + 3 * u * u;
        const double h11 = u * u * u - u * u;
        Vec3 v;
        for (int k = 0; k < 3; ++k) v[k] = h00 * y0[k] + h10 * h * t0[k] + h01 * y1[k] + h11 * h * t1[k];
        return v;
    }

    Vec3 derivative(double s) const
    {
        const double h = s1 - s0;
        const double u = (s - s0) / h;
        const double d00 = (6 * u * u - 6 * u) / h;
        const double d10 = 3 * u * u - 4 * u + 1;
        const double d01 = (-6 * u * u + 6 * u) / h;
        const double d11 = 3 * u * u - 2 * u;
        Vec3 v;
        for (int k = 0; k < 3; ++k) v[k] = d00 * y0[k] + d10 * t0[k] + d01 * y1[k] + d11 * t1[k];
        return v;
    }
};

std::optional<TurningPoint> refine_fold(const BranchSystem& sys, const BranchPoint& a, const BranchPoint& b,
                                        const ContinuationOptions& opts)
{
    const Branch& br = sys.branch();
    const HermiteSegment seg{scaled(br, a), scaled(br, b), a.tangent, b.tangent, a.arclength, b.arclength};
    double lo = a.arclength;
    double hi = b.arclength;
    double g_lo = seg.derivative(lo)[2];
    double g_hi = seg.derivative(hi)[2];
    double s = lo;
    // regula falsi with the Illinois modification
    int side = 0;
    for (int iter = 0; iter < 60; ++iter) {
        s = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        const double g = seg.derivative(s)[2];
        if (std::abs(g) < 1e-15 || hi - lo < 1e-14) break;
        if ((g > 0) == (g_lo > 0)) {
            lo = s;
            g_lo = g;
            if (side == -1) g_hi *= 0.5;
            side = -1;
        } else {
            hi = s;
            g_hi = g;
            if (side == 1) g_lo *= 0.5;
            side = 1;
        }
    }
    Vec3 t = seg.derivative(s);
    const double n = norm(t);
    for (double& v : t) v /= n;
    const Vec3 y_pred = seg.value(s);
    Jac jac;
    try {
        jac = sys.jacobian(y_pred);
    } catch (const Error&) {
        return std::nullopt;
    }
    const CorrectorResult c = correct(sys, y_pred, t, jac, opts);
    const Vec3 y = c.ok ? c.y : y_pred;
    return TurningPoint{y[2] / br.eps_scale, s, y[0], y[1]};
}

// Continues `branch` in place from its last point.
void advance(Branch& branch, const ContinuationOptions& opts)
{
    const BranchSystem sys(branch, opts.shooting);
    BranchPoint last = branch.points.back();
    Vec3 y = scaled(branch, last);
    Vec3 t = last.tangent;
    double h = last.step > 0.0 ? last.step : opts.h0;
    int easy = last.easy_streak;
    Jac jac = sys.jacobian(y);
    int after_turn = 0;

    while (static_cast<int>(branch.points.size()) < opts.max_points) {
        if (branch.turning_point && opts.stop.points_after_turn >= 0 &&
            after_turn >= opts.stop.points_after_turn) {
            return;
        }
        const Vec3 y_pred = {y[0] + h * t[0], y[1] + h * t[1], y[2] + h * t[2]};
        if (y_pred[2] < 0.0) return;  // the branch re-crosses eps = 0
        CorrectorResult c = correct(sys, y_pred, t, jac, opts);
        if (c.ok) {
            const Vec3 dev = {c.y[0] - y_pred[0], c.y[1] - y_pred[1], c.y[2] - y_pred[2]};
            if (norm(dev) > h) c.ok = false;  // landed on another sheet
        }
        Jac jac_new{};
        Vec3 t_new{};
        if (c.ok) {
            try {
                jac_new = sys.jacobian(c.y);
                t_new = tangent_of(jac_new, t);
            } catch (const Error&) {
                c.ok = false;
            }
        }
        if (!c.ok) {
            h *= 0.5;
            easy = 0;
            if (h < opts.h_min) {
                branch.points.back().step = h;
                throw StallError("corrector failed at the minimum step", branch);
            }
            continue;
        }
        const Vec3 dy = {c.y[0] - y[0], c.y[1] - y[1], c.y[2] - y[2]};
        const double s = branch.points.back().arclength + norm(dy);
        easy = c.iterations <= opts.easy_iterations ? easy + 1 : 0;
        double h_next = h;
        if (easy >= opts.easy_needed) {
            h_next = std::min(h * opts.grow, opts.h_max);
            easy = 0;
        }
        BranchPoint p = make_point(branch, c.y, t_new, s, std::abs(c.f));
        p.step = h_next;
        p.easy_streak = easy;
        const BranchPoint prev = branch.points.back();
        branch.points.push_back(p);
        if (branch.turning_point) ++after_turn;
        if (!branch.turning_point && prev.tangent[2] > 0.0 && t_new[2] <= 0.0) {
            branch.turning_point = refine_fold(sys, prev, p, opts);
        }
        y = c.y;
        t = t_new;
        jac = jac_new;
        h = h_next;
        if (p.kappa < opts.stop.kappa_min || p.eps > opts.stop.eps_max) return;
    }
}

}  // namespace

Branch trace_branch(const RootPoint& seed, const DeltaRule& delta_rule, const ContinuationOptions& opts)
{
    if (!(opts.h0 > 0.0)) throw DomainError("continuation step h0 must be positive");
    if (seed.normalization != Normalization::FixOmega) throw DomainError("branches start from a FixOmega root");
    if (seed.params.eps != 0.0) throw DomainError("branches start at eps = 0");
    Branch branch;
    branch.index_j = seed.branch_index;
    branch.d = seed.params.d;
    branch.sigma = seed.params.sigma;
    branch.delta_rule = delta_rule;
    branch.xi1 = seed.xi1;
    branch.n_terms = seed.n_terms;

    const BranchSystem sys(branch, opts.shooting);
    const Vec3 y0 = {seed.mu.real(), seed.params.kappa, 0.0};
    const Vec3 t0 = tangent_of(sys.jacobian(y0), {0.0, 0.0, 1.0});
    BranchPoint first = make_point(branch, y0, t0, 0.0, seed.residual_norm);
    first.step = opts.h0;
    branch.points.push_back(first);
    advance(branch, opts);
    return branch;
}

Branch resume_branch(const Branch& partial, const ContinuationOptions& opts)
{
    if (partial.points.empty()) throw DomainError("cannot resume an empty branch");
    Branch branch = partial;
    advance(branch, opts);
    return branch;
}

std::optional<TurningPoint> detect_turning_point(const Branch& branch, const ContinuationOptions& opts)
{
    if (branch.points.size() < 3) return std::nullopt;
    const BranchSystem sys(branch, opts.shooting);
    for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
        const auto& a = branch.points[i];
        const auto& b = branch.points[i + 1];
        if (a.tangent[2] > 0.0 && b.tangent[2] <= 0.0) return refine_fold(sys, a, b, opts);
    }
    return std::nullopt;
}

std::vector<double> maxima_locations(const ProfileTrajectory& traj, double plateau)
{
    // Same run compression as profile_maxima_count; a maximum is placed at the
    // node where its rising run peaked.
    std::vector<double> out;
    int direction = 0;
    double anchor = 0.0;
    double anchor_xi = 0.0;
    for (std::size_t i = 0; i < traj.nodes.size(); ++i) {
        const double a = std::abs(traj.nodes[i].q);
        const double xi = traj.nodes[i].xi;
        if (i == 0) {
            anchor = a;
            anchor_xi = 0.0;
            continue;
        }
        if (a > anchor + plateau) {
            direction = 1;
            anchor = a;
            anchor_xi = xi;
        } else if (a < anchor - plateau) {
            if (direction >= 0) out.push_back(direction == 0 ? 0.0 : anchor_xi);
            direction = -1;
            anchor = a;
            anchor_xi = xi;
        } else if ((direction == 1 && a > anchor) || (direction == -1 && a < anchor)) {
            anchor = a;
            anchor_xi = xi;
        }
    }
    return out;
}

EndpointReport branch_endpoint_diagnostics(const Branch& branch, const ShootingOptions& opts)
{
    EndpointReport report;
    if (branch.points.empty()) return report;
    ShootingOptions o = opts;
    o.xi1 = branch.xi1;
    o.n_terms = branch.n_terms;
    const auto& end = branch.points.back();
    report.kappa_end = end.kappa;
    report.mu_end = end.mu;
    report.regime_reached = end.kappa < 0.05;
    const std::size_t first = branch.points.size() > 10 ? branch.points.size() - 10 : 0;
    for (std::size_t i = first; i < branch.points.size(); ++i) {
        const auto& p = branch.points[i];
        try {
            const auto traj = profile_trajectory(branch.params_at(p), p.mu, o);
            report.history.push_back({p.kappa, p.mu, maxima_locations(traj)});
            if (i + 1 == branch.points.size()) {
                report.maxima_count = profile_maxima_count(traj);
                report.maxima_locations = report.history.back().maxima;
            }
        } catch (const Error&) {
            report.history.push_back({p.kappa, p.mu, {}});
        }
    }
    return report;
}

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string branch_header_json(const Branch& b)
{
    std::ostringstream os;
    os << "{\"index_j\":" << b.index_j << ",\"d\":" << b.d << ",\"sigma\":" << num(b.sigma)
       << ",\"delta_rule\":\"" << b.delta_rule.to_string() << "\",\"xi1\":" << num(b.xi1)
       << ",\"n_terms\":" << b.n_terms << ",\"scaling\":{\"eps\":" << num(b.eps_scale) << "}}";
    return os.str();
}

std::string branch_point_json(const BranchPoint& p)
{
    std::ostringstream os;
    os << "{\"eps\":" << num(p.eps) << ",\"mu\":" << num(p.mu) << ",\"kappa\":" << num(p.kappa)
       << ",\"s\":" << num(p.arclength) << ",\"tangent\":[" << num(p.tangent[0]) << ','
       << num(p.tangent[1]) << ',' << num(p.tangent[2]) << "],\"residual\":" << num(p.residual_norm)
       << ",\"stability\":\"" << to_string(p.stability) << "\",\"step\":" << num(p.step)
       << ",\"easy\":" << p.easy_streak << '}';
    return os.str();
}

namespace {

std::string turning_json(const TurningPoint& t)
{
    return "{\"turning_point\":{\"eps_star\":" + num(t.eps_star) + ",\"s\":" + num(t.arclength) +
           ",\"mu\":" + num(t.mu) + ",\"kappa\":" + num(t.kappa) + "}}";
}

}  // namespace

void save_branch(const Branch& branch, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << branch_header_json(branch) << '\n';
    for (const auto& p : branch.points) out << branch_point_json(p) << '\n';
    if (branch.turning_point) out << turning_json(*branch.turning_point) << '\n';
    if (!out) throw Error("write failed for " + path);
}

void append_branch_point(const BranchPoint& point, const std::string& path)
{
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("cannot append to " + path);
    out << branch_point_json(point) << '\n';
}

Branch load_branch(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    Branch b;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            if (!have_header) {
                b.index_j = j.at("index_j").get<int>();
                b.d = j.at("d").get<int>();
                b.sigma = j.at("sigma").get<double>();
                b.delta_rule = DeltaRule::parse(j.at("delta_rule").get<std::string>());
                b.xi1 = j.at("xi1").get<double>();
                b.n_terms = j.at("n_terms").get<int>();
                b.eps_scale = j.at("scaling").at("eps").get<double>();
                have_header = true;
                continue;
            }
            if (j.contains("turning_point")) {
                const auto& t = j.at("turning_point");
                b.turning_point = TurningPoint{t.at("eps_star").get<double>(), t.at("s").get<double>(),
                                               t.at("mu").get<double>(), t.at("kappa").get<double>()};
                continue;
            }
            BranchPoint p;
            p.eps = j.at("eps").get<double>();
            p.mu = j.at("mu").get<double>();
            p.kappa = j.at("kappa").get<double>();
            p.arclength = j.at("s").get<double>();
            const auto& t = j.at("tangent");
            if (t.size() != 3) throw std::invalid_argument("tangent must have 3 components");
            p.tangent = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
            p.residual_norm = j.at("residual").get<double>();
            p.stability = stability_from_string(j.at("stability").get<std::string>());
            p.step = j.value("step", 0.0);
            p.easy_streak = j.value("easy", 0);
            if (!b.points.empty() && !(p.arclength > b.points.back().arclength)) {
                throw ParseError("arclength must increase", line_no);
            }
            b.points.push_back(p);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (!have_header) throw ParseError("missing header", line_no + 1);
    return b;
}

}  // namespace blowup
