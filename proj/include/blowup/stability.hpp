#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "blowup/eigen.hpp"
#include "blowup/integrator.hpp"
#include "blowup/shooting.hpp"

namespace blowup {

enum class Scheme {
    Central2,  // three-point stencils
    Central4,  // five-point stencils; three-point at the last two nodes
};
const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

// Treatment of the truncation point xi1.
enum class Closure {
    // xi1 w' + (1/sigma + i omega/kappa) w = 0, eliminated from the unknowns
    Robin,
    // linearized time-dependent condition w_t + kappa (xi1 w' + w/sigma) + i omega w = 0,
    // kept as an extra unknown with its own row (amounts to a lambda-dependent Robin condition)
    Dynamic,
};
const char* to_string(Closure c);
Closure closure_from_string(const std::string& name);

// Uniform nodes xi_k = k h, h = xi1 / n: k = 0..n-1 for the Robin closure,
// k = 0..n for the dynamic one.
struct LinearizationGrid {
    int n = 600;
    Scheme scheme = Scheme::Central4;
    Closure closure = Closure::Dynamic;
    double xi1 = 30.0;
    // Nodes per local wavelength 2 pi / (kappa xi1) of the outgoing phase
    // kappa xi^2 / 2, required at xi1.
    double min_nodes_per_wave = 4.0;

    double h() const { return xi1 / n; }
    int unknowns() const { return closure == Closure::Dynamic ? n + 1 : n; }
    std::vector<double> nodes() const;
};

enum class Verdict { Stable, Unstable, Inconclusive };
const char* to_string(Verdict v);

struct Spectrum {
    std::vector<cplx> eigenvalues;
    cplx lambda_zero;        // member of the doublet nearest 0
    cplx lambda_two_kappa;   // member nearest 2 kappa0
    std::size_t index_zero = 0;
    std::size_t index_two_kappa = 0;
    double separation_zero = 0.0;       // distance from 0 to the nearest other eigenvalue
    double separation_two_kappa = 0.0;  // same for 2 kappa0
    double r1 = -1.0;  // relative residual of the mode iQ (negative when not computed)
    double r2 = -1.0;  // relative residual of the scaling mode
    double max_real_rest = 0.0;
    Verdict verdict = Verdict::Inconclusive;
};

struct SymmetryModes {
    std::vector<cplx> y1;  // i Q
    std::vector<cplx> y2;  // xi Q' + (1/sigma + i omega/kappa) Q
};

SymmetryModes symmetry_modes(const ProfileTrajectory& traj, const ProfileParams& params,
                             const LinearizationGrid& grid);

// Real 2N x 2N matrix (N = grid.unknowns()) of the linearization about Q
// acting on (Re w; Im w):
//   L w = (i + eps) (w'' + (d-1)/xi w') - kappa (xi w' + w/sigma) - i omega w
//         + (i - delta) ((1 + sigma)|Q|^{2 sigma} w + sigma |Q|^{2 sigma - 2} Q^2 conj(w)),
// central differences, w'(0) = 0 by even reflection, and the chosen closure at
// xi1 (one-sided second-order derivative there).
// Throws ResolutionError for an under-resolved grid.
Matrix assemble(const ProfileTrajectory& traj, const ProfileParams& params, const LinearizationGrid& grid);

// Stacks a complex grid function as the real vector (Re w; Im w).
std::vector<cplx> real_stack(const std::vector<cplx>& w);

// Removes the eigenvalue nearest 0 and the one nearest 2 kappa0 and classifies
// by the largest real part of the rest. Throws DoubletNotFoundError when
// either is farther than 0.1 kappa0 from its target.
Spectrum classify(std::vector<cplx> eigenvalues, double kappa0, double margin = 1e-3);

struct StabilityOptions {
    LinearizationGrid grid{};
    double margin = 1e-3;
    ShootingOptions shooting{};
};

// Profile, matrix, spectrum, classification and the two mode residuals.
Spectrum analyze_stability(const ProfileParams& params, double mu, const StabilityOptions& opts = {});

void write_spectrum_csv(std::ostream& out, const Spectrum& s);
std::string verdict_json(const Spectrum& s, double eps, double kappa, double mu);

}  // namespace blowup
