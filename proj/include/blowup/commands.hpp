#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blowup/config.hpp"

namespace blowup {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

// Runs body and maps exceptions to exit codes: UsageError, ParseError and
// std::invalid_argument give 2, any other error 1. The message goes to err.
int run_guarded(const std::function<int()>& body, std::ostream& err);

// "a,b" or "a,b,c,d" into numbers. Throws UsageError.
std::vector<double> parse_numbers(const std::string& text, std::size_t count);

// %.17g
std::string fmt17(double v);

// Root report: unknowns, residual, iterations, maxima count and both
// normalizations, as one JSON object.
int cmd_solve(const RunConfig& cfg, std::array<double, 2> guess, std::ostream& out);

struct ScanOptions {
    Rect rect{};
    int depth = 12;
    int per_side = 32;
    int forced_depth = 4;
    int jobs = 1;
};

// CSV `mu,kappa,residual,j` (FixOmega) or `kappa,omega,residual,j`
// (FixAmplitude); dropped cells go to the sidecar CSV `kind,x_lo,x_hi,y_lo,y_hi`.
int cmd_scan(const RunConfig& cfg, const ScanOptions& opts, std::ostream& out, std::ostream& sidecar);

struct BranchCommand {
    std::optional<std::array<double, 2>> seed;  // (mu, kappa) guess at eps = 0
    int index_j = 0;                            // 0: taken from the seed's maxima count
    std::string resume;                         // branch file to continue
    ContinuationOptions continuation{};
};

// Traces (or resumes) a branch into cfg.branch_file and prints a summary with
// eps*. On a stall the partial branch is written before the error propagates.
int cmd_branch(const RunConfig& cfg, const BranchCommand& cmd, std::ostream& out);

struct SpectrumCommand {
    std::optional<std::array<double, 2>> root;  // (mu, kappa) guess at cfg.eps, polished first
    std::string branch;                         // branch file
    int index = -1;                             // point of the branch; -1 with all = false: last
    bool all = false;                           // classify every point, update the file
    int jobs = 1;
};

// Spectrum CSV and verdict JSON for one point, or a verdict JSON line per
// point with the branch file's stability tags updated.
int cmd_spectrum(const RunConfig& cfg, const SpectrumCommand& cmd, std::ostream& out);

// Printed values of the published root tables (omega = 1 and Q(0) = 1 columns).
struct ReferenceRow {
    int table;  // 1: d = 1, sigma = 2.3; 2: d = 3, sigma = 1
    int j;
    double eps_star;
    double kappa;     // omega = 1
    double mu;        // omega = 1
    double kappa_q1;  // Q(0) = 1
    double omega_q1;  // Q(0) = 1
};

std::vector<ReferenceRow> reference_rows();

struct TableCell {
    int table;
    int j;
    std::string column;
    double reference;
    double computed;
    double tol;
    bool pass;
    bool q1_seed = false;  // root came from the seed implied by the Q(0) = 1 columns
};

struct TablesOptions {
    bool full = false;  // eps* for every row, not only j <= 2
    int jobs = 1;
    int rows_table1 = 5;
    int rows_table2 = 3;
    double root_tol = 2e-3;
    double convert_tol = 1.5e-3;
    double eps_star_tol = 5e-3;
};

std::vector<TableCell> reproduce_tables(const RunConfig& cfg, const TablesOptions& opts,
                                        const std::vector<ReferenceRow>& refs);

// Diff table; exit 1 when any cell fails.
int cmd_tables(const RunConfig& cfg, const TablesOptions& opts, const std::vector<ReferenceRow>& refs,
               std::ostream& out);

struct CheckResult {
    std::string name;
    double deviation;
    double bound;
    bool pass;
};

// Special-function identities: U(a, a+1, z) = z^{-a}, quadrature against the
// asymptotic series, the closed-form Wronskian, Kummer's equation by central
// differences.
std::vector<CheckResult> special_checks();

int cmd_kummer_check(std::ostream& out);

}  // namespace blowup
