#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace smla {

/// Truncated factor map X' = mu - A |X|^nu.
struct ModelParams {
    double mu = 0.0;
    double A = 0.0;
    double nu = 0.0;

    /// nu must be positive and finite, mu and A finite.
    void validate() const;
};

double step(double X, const ModelParams& p);

/// f'(X) for X != 0.
double step_derivative(double X, const ModelParams& p);

/// FromRight follows X = 0+; FromLeft follows the mirror orbit of 0-, which
/// yields the complementary symbols.
enum class ZeroSide { FromRight, FromLeft };

struct CriticalOrbit {
    /// X_0 = 0, X_1, ..., X_N (shorter when diverged).
    std::vector<double> orbit;
    /// Symbol of X_1 .. X_N: '1' for X >= 0, '0' for X < 0.
    std::string symbols;
    bool diverged = false;
};

/// Iterates 0 N times; stops when |X| exceeds 1e6.
CriticalOrbit critical_orbit(const ModelParams& p, std::size_t N, ZeroSide side = ZeroSide::FromRight);

enum class ModelCurve { L1, L2, L1LA, L2LA, LSN, LPD, LLac };

const char* to_string(ModelCurve c);
ModelCurve model_curve_from_string(const std::string& s);

/// mu on l1 (0), l2 (A mu^{nu-1} = 1) and l1_LA (A mu^{nu-1} = 2).
/// Needs 0 < nu < 1 and, for l2 / l1_LA, A > 0.
double analytic_curve(ModelCurve kind, double A, double nu);

/// Defining residual of a numerically solved curve at (mu, A, nu):
///  l_SN   f(x_c) - x_c where f'(x_c) = 1 on the increasing branch,
///  l_PD   f'(x*) + 1 at the fixed point x* > 0 of the decreasing branch,
///  l_lac  f^3(0) - x*,
///  l2_LA  f^3(0) - p1 with p1 < 0 the point of the unstable 2-cycle
///         nearest to 0.
/// Throws NumericFailure when the needed fixed point or cycle does not exist.
double curve_residual(ModelCurve kind, const ModelParams& p);

struct CurvePoint {
    ModelCurve kind = ModelCurve::L1;
    ModelParams params;
    double residual = 0.0;
};

/// Root in mu of curve_residual on [mu_lo, mu_hi] at fixed (A, nu). Throws
/// NumericFailure with residual samples when the ends have the same sign.
CurvePoint solve_curve(ModelCurve kind, double A, double nu, double mu_lo, double mu_hi);

/// Scans mu geometrically between 1e-3 l1_LA and 10 l2 for the first sign
/// change of the residual and solves there.
CurvePoint solve_curve(ModelCurve kind, double A, double nu);

/// Fixed points of f with X < 0 (increasing branch), located on a dense grid
/// and refined.
std::vector<double> increasing_branch_fixed_points(const ModelParams& p);

/// The fixed point X > 0; needs mu > 0 and A >= 0.
double decreasing_branch_fixed_point(const ModelParams& p);

enum class Regime { StablePeriodic, ChaoticCandidate, Escaped };

const char* to_string(Regime r);

struct RegimeReport {
    Regime regime = Regime::ChaoticCandidate;
    /// Cycle period for StablePeriodic, 0 otherwise.
    std::size_t period = 0;
};

/// Critical orbit after N_transient steps: a cycle of period <= 64 repeating
/// to 1e-9 over the N_probe tail is StablePeriodic, unbounded orbits are
/// Escaped, the rest ChaoticCandidate.
RegimeReport classify_regime(const ModelParams& p, std::size_t N_transient = 2000, std::size_t N_probe = 1000);

/// CSV `kind,mu,A,nu`.
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& pts, bool header = true);

enum class ChartAxis { A, Nu };

struct RegimeChartSpec {
    double mu_lo = 0.0, mu_hi = 0.1;
    std::size_t n_mu = 400;
    /// Second axis: A at fixed nu, or nu at fixed A.
    ChartAxis axis = ChartAxis::Nu;
    double s_lo = 0.55, s_hi = 0.95;
    std::size_t n_s = 400;
    double fixed = 0.63;
    std::size_t n_transient = 2000;
    std::size_t n_probe = 1000;
};

struct RegimeCell {
    double mu = 0.0;
    double s = 0.0;
    Regime regime = Regime::ChaoticCandidate;
};

std::vector<RegimeCell> regime_chart(const RegimeChartSpec& spec);

/// CSV `mu,A_or_nu,regime`.
void write_regime_csv(std::ostream& os, const std::vector<RegimeCell>& cells, bool header = true);

} // namespace smla
