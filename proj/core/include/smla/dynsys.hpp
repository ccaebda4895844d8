#pragma once

#include <array>
#include <complex>
#include <vector>

#include "smla/types.hpp"

namespace smla {

enum class SystemId { ShimizuMorioka, ExtendedSM, Lorenz };

const char* to_string(SystemId id);

/// Parameters of one of the supported vector fields.
///
/// ShimizuMorioka uses (alpha, lambda), ExtendedSM adds the cubic coefficient B,
/// Lorenz uses (b, sigma, r). Unused fields are ignored.
struct SystemParams {
    SystemId system = SystemId::ShimizuMorioka;
    double alpha = 0.0;
    double lambda = 0.0;
    double B = 0.0;
    double b = 0.0;
    double sigma = 0.0;
    double r = 0.0;

    static SystemParams shimizu_morioka(double alpha, double lambda);
    static SystemParams extended_sm(double alpha, double lambda, double B);
    static SystemParams lorenz(double b, double sigma, double r);

    /// Throws DomainError when the parameters are not admissible for `system`.
    void validate() const;

    bool operator==(const SystemParams&) const = default;
};

/// Right-hand side of the selected system. Rejects non-finite input.
Vec3 vector_field(const SystemParams& p, const State& s);

/// Same as vector_field() without input validation, for inner integration loops.
Vec3 vector_field_unchecked(const SystemParams& p, const State& s) noexcept;

Mat3 jacobian(const SystemParams& p, const State& s);
Mat3 jacobian_unchecked(const SystemParams& p, const State& s) noexcept;

/// Involution (x, y, z) -> (-x, -y, z); all three systems commute with it.
inline State apply_symmetry(const State& s) { return {-s.x(), -s.y(), s.z()}; }

/// Real roots and complex pairs of s^3 + a s^2 + b s + c, sorted by real part
/// descending (ties: imaginary part descending).
std::array<std::complex<double>, 3> solve_monic_cubic(double a, double b, double c);

/// Coefficients (a, b, c) of det(sI - M) = s^3 + a s^2 + b s + c.
std::array<double, 3> characteristic_polynomial(const Mat3& m);

struct EquilibriumReport {
    State location = State::Zero();
    std::array<std::complex<double>, 3> eigenvalues{};
    double gamma = 0.0;     ///< real part of the leading eigenvalue
    double lambda_s = 0.0;  ///< real part of the second eigenvalue
    double lambda_ss = 0.0; ///< real part of the third eigenvalue
    /// -lambda_s / gamma when the equilibrium is a saddle with real spectrum, NaN otherwise.
    double saddle_index = 0.0;
    /// gamma > 0 > lambda_s > lambda_ss, all real, leading stable direction on the z-axis.
    bool a2_condition_holds = false;
    bool stable = false;
};

/// Equilibria O, O+ and O- (in that order) with their spectra.
std::vector<EquilibriumReport> equilibria(const SystemParams& p);

/// Locations of the asymptotically stable equilibria (empty when none).
std::vector<State> stable_equilibria(const SystemParams& p);

/// Unit eigenvector of the unstable eigenvalue of O, oriented with x > 0.
Vec3 unstable_direction(const SystemParams& p);

/// Eigenbasis of J(O) ordered (unstable, leading stable, strong stable), unit columns.
Mat3 origin_eigenbasis(const SystemParams& p);

// Analytic parameter-plane curves of the Shimizu-Morioka system.

enum class CurveKind { Hopf, SaddleIndexLevel };

/// alpha on the curve at the given lambda.
/// Hopf: alpha = (2 - lambda^2) / lambda (O+- have a pure-imaginary pair), needs 0 < lambda < sqrt(2).
/// SaddleIndexLevel: alpha = nu0 (sqrt(lambda^2 + 4) - lambda) / 2.
double analytic_curve(CurveKind kind, double lambda, double nu0 = 1.0);

/// lambda on the Hopf curve for a given alpha, the positive root of lambda^2 + alpha lambda - 2 = 0.
double hopf_lambda(double alpha);

/// Hopf crossing located by bisection on the sign of the leading real part of
/// the O+ spectrum (cubic solver), to |d lambda| < tol.
double hopf_lambda_numeric(double alpha, double lambda_lo, double lambda_hi, double tol = 1e-13);

// Lorenz <-> extended Shimizu-Morioka.

struct ExtendedSmParams {
    double alpha = 0.0;
    double lambda = 0.0;
    double B = 0.0;
};

/// alpha = b / sqrt(sigma (r-1)), lambda = (1 + sigma) / sqrt(sigma (r-1)),
/// B = sqrt(sigma (r-1)) / (2 sigma - b). Requires sigma (r-1) > 0, 2 sigma != b.
ExtendedSmParams lorenz_to_extended_sm(double b, double sigma, double r);

/// Change of coordinates and time taking Lorenz orbits to extended-SM orbits.
/// Requires sigma (r-1) > 0 and 2 sigma > b.
class LorenzConjugacy {
public:
    LorenzConjugacy(double b, double sigma, double r);

    State map_state(const State& lorenz_state) const;
    Mat3 map_jacobian(const State& lorenz_state) const;
    /// t_new = time_scale() * t
    double time_scale() const { return time_scale_; }
    SystemParams target() const;
    SystemParams source() const { return SystemParams::lorenz(b_, sigma_, r_); }

private:
    double b_, sigma_, r_;
    double kx_, ky_, kz_;
    double time_scale_;
};

} // namespace smla
