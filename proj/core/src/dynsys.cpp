#include "smla/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smla {

namespace {

void require(bool cond, const char* msg)
{
    if (!cond) {
        throw DomainError(msg);
    }
}

std::complex<double> eval_cubic(double a, double b, double c, std::complex<double> s)
{
    return ((s + a) * s + b) * s + c;
}

std::complex<double> eval_cubic_derivative(double a, double b, std::complex<double> s)
{
    return (3.0 * s + 2.0 * a) * s + b;
}

// Eigenpairs of the planar block [[m00, m01], [m10, m11]]; returns the two
// eigenvalues (larger first) and matching 2D eigenvectors. Real spectrum assumed.
struct PlanarEigen {
    double mu_plus, mu_minus;
    Eigen::Vector2d v_plus, v_minus;
};

PlanarEigen planar_eigen(double m00, double m01, double m10, double m11)
{
    const double tr = m00 + m11;
    const double det = m00 * m11 - m01 * m10;
    const double disc = tr * tr / 4.0 - det;
    if (disc < 0.0) {
        throw DomainError("planar block of J(O) has complex eigenvalues");
    }
    const double root = std::sqrt(disc);
    PlanarEigen e;
    e.mu_plus = tr / 2.0 + root;
    e.mu_minus = tr / 2.0 - root;
    auto vec = [&](double mu) -> Eigen::Vector2d {
        if (std::abs(m01) >= std::abs(m10) && m01 != 0.0) {
            return Eigen::Vector2d(m01, mu - m00).normalized();
        }
        if (m10 != 0.0) {
            return Eigen::Vector2d(mu - m11, m10).normalized();
        }
        return std::abs(m00 - mu) < std::abs(m11 - mu) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
    };
    e.v_plus = vec(e.mu_plus);
    e.v_minus = vec(e.mu_minus);
    return e;
}

void sort_spectrum(std::array<std::complex<double>, 3>& ev)
{
    std::sort(ev.begin(), ev.end(), [](const auto& l, const auto& r) {
        if (l.real() != r.real()) {
            return l.real() > r.real();
        }
        return l.imag() > r.imag();
    });
}

EquilibriumReport make_report(const State& at, std::array<std::complex<double>, 3> ev, bool z_is_leading_stable)
{
    sort_spectrum(ev);
    EquilibriumReport rep;
    rep.location = at;
    rep.eigenvalues = ev;
    rep.gamma = ev[0].real();
    rep.lambda_s = ev[1].real();
    rep.lambda_ss = ev[2].real();
    const bool all_real = ev[0].imag() == 0.0 && ev[1].imag() == 0.0 && ev[2].imag() == 0.0;
    rep.a2_condition_holds = all_real && rep.gamma > 0.0 && 0.0 > rep.lambda_s && rep.lambda_s > rep.lambda_ss
                             && z_is_leading_stable;
    rep.saddle_index = (all_real && rep.gamma > 0.0 && rep.lambda_s < 0.0) ? -rep.lambda_s / rep.gamma
                                                                            : std::nan("");
    rep.stable = rep.gamma < 0.0;
    return rep;
}

EquilibriumReport origin_report(const SystemParams& p)
{
    const Mat3 j = jacobian_unchecked(p, State::Zero());
    const PlanarEigen pe = planar_eigen(j(0, 0), j(0, 1), j(1, 0), j(1, 1));
    const double z_eig = j(2, 2);
    std::array<std::complex<double>, 3> ev{pe.mu_plus, pe.mu_minus, z_eig};
    // The z-axis carries the leading stable direction iff z_eig lies between mu_minus and 0.
    const bool z_leading = z_eig < 0.0 && z_eig > pe.mu_minus;
    return make_report(State::Zero(), ev, z_leading);
}

EquilibriumReport off_origin_report(const SystemParams& p, const State& at)
{
    const auto coeffs = characteristic_polynomial(jacobian_unchecked(p, at));
    return make_report(at, solve_monic_cubic(coeffs[0], coeffs[1], coeffs[2]), false);
}

} // namespace

const char* to_string(SystemId id)
{
    switch (id) {
    case SystemId::ShimizuMorioka: return "ShimizuMorioka";
    case SystemId::ExtendedSM: return "ExtendedSM";
    case SystemId::Lorenz: return "Lorenz";
    }
    return "unknown";
}

SystemParams SystemParams::shimizu_morioka(double alpha, double lambda)
{
    SystemParams p;
    p.system = SystemId::ShimizuMorioka;
    p.alpha = alpha;
    p.lambda = lambda;
    return p;
}

SystemParams SystemParams::extended_sm(double alpha, double lambda, double B)
{
    SystemParams p;
    p.system = SystemId::ExtendedSM;
    p.alpha = alpha;
    p.lambda = lambda;
    p.B = B;
    return p;
}

SystemParams SystemParams::lorenz(double b, double sigma, double r)
{
    SystemParams p;
    p.system = SystemId::Lorenz;
    p.b = b;
    p.sigma = sigma;
    p.r = r;
    return p;
}

void SystemParams::validate() const
{
    switch (system) {
    case SystemId::ShimizuMorioka:
        require(std::isfinite(alpha) && std::isfinite(lambda), "non-finite Shimizu-Morioka parameters");
        require(alpha > 0.0, "alpha must be positive");
        break;
    case SystemId::ExtendedSM:
        require(std::isfinite(alpha) && std::isfinite(lambda) && std::isfinite(B),
                "non-finite extended Shimizu-Morioka parameters");
        require(alpha > 0.0, "alpha must be positive");
        break;
    case SystemId::Lorenz:
        require(std::isfinite(b) && std::isfinite(sigma) && std::isfinite(r), "non-finite Lorenz parameters");
        break;
    }
}

Vec3 vector_field_unchecked(const SystemParams& p, const State& s) noexcept
{
    const double x = s.x(), y = s.y(), z = s.z();
    switch (p.system) {
    case SystemId::ShimizuMorioka:
        return {y, x - p.lambda * y - x * z, -p.alpha * z + x * x};
    case SystemId::ExtendedSM:
        return {y, x - p.lambda * y - x * z - p.B * x * x * x, -p.alpha * z + x * x};
    case SystemId::Lorenz:
        return {p.sigma * (y - x), x * (p.r - z) - y, x * y - p.b * z};
    }
    return Vec3::Zero();
}

Vec3 vector_field(const SystemParams& p, const State& s)
{
    p.validate();
    if (!is_finite(s)) {
        throw DomainError("vector_field: non-finite state");
    }
    return vector_field_unchecked(p, s);
}

Mat3 jacobian_unchecked(const SystemParams& p, const State& s) noexcept
{
    const double x = s.x(), y = s.y(), z = s.z();
    Mat3 j;
    switch (p.system) {
    case SystemId::ShimizuMorioka:
        j << 0, 1, 0,
             1 - z, -p.lambda, -x,
             2 * x, 0, -p.alpha;
        break;
    case SystemId::ExtendedSM:
        j << 0, 1, 0,
             1 - z - 3 * p.B * x * x, -p.lambda, -x,
             2 * x, 0, -p.alpha;
        break;
    case SystemId::Lorenz:
        j << -p.sigma, p.sigma, 0,
             p.r - z, -1, -x,
             y, x, -p.b;
        break;
    }
    return j;
}

Mat3 jacobian(const SystemParams& p, const State& s)
{
    p.validate();
    if (!is_finite(s)) {
        throw DomainError("jacobian: non-finite state");
    }
    return jacobian_unchecked(p, s);
}

std::array<double, 3> characteristic_polynomial(const Mat3& m)
{
    const double tr = m.trace();
    const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)
                        + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)
                        + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    return {-tr, minors, -m.determinant()};
}

std::array<std::complex<double>, 3> solve_monic_cubic(double a, double b, double c)
{
    using cd = std::complex<double>;
    std::array<cd, 3> roots;

    const double shift = a / 3.0;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
        double r = t - shift;
        // One Newton polish on the real root before deflation.
        for (int it = 0; it < 3; ++it) {
            const double f = ((r + a) * r + b) * r + c;
            const double df = (3.0 * r + 2.0 * a) * r + b;
            if (df == 0.0) {
                break;
            }
            r -= f / df;
        }
        const double q1 = a + r;
        const double q0 = b + r * q1;
        const double d2 = q1 * q1 / 4.0 - q0;
        roots[0] = r;
        if (d2 >= 0.0) {
            const double s2 = std::sqrt(d2);
            const double big = -q1 / 2.0 - std::copysign(s2, q1);
            roots[1] = big;
            roots[2] = big != 0.0 ? q0 / big : 0.0;
        } else {
            const double im = std::sqrt(-d2);
            roots[1] = cd(-q1 / 2.0, im);
            roots[2] = cd(-q1 / 2.0, -im);
        }
    } else {
        const double m = 2.0 * std::sqrt(std::max(-p / 3.0, 0.0));
        double arg = m != 0.0 ? 3.0 * q / (p * m) : 0.0;
        arg = std::clamp(arg, -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            roots[k] = m * std::cos(theta - 2.0 * M_PI * k / 3.0) - shift;
        }
    }

    // Polish every root; keep conjugate pairs exactly conjugate afterwards.
    for (auto& r : roots) {
        for (int it = 0; it < 2; ++it) {
            const cd df = eval_cubic_derivative(a, b, r);
            if (std::abs(df) == 0.0) {
                break;
            }
            const cd next = r - eval_cubic(a, b, c, r) / df;
            if (std::abs(eval_cubic(a, b, c, next)) < std::abs(eval_cubic(a, b, c, r))) {
                r = next;
            }
        }
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (roots[i].imag() != 0.0 && std::abs(roots[i] - std::conj(roots[j])) < 1e-8 * (1.0 + std::abs(roots[i]))) {
                const double re = 0.5 * (roots[i].real() + roots[j].real());
                const double im = 0.5 * (std::abs(roots[i].imag()) + std::abs(roots[j].imag()));
                roots[i] = cd(re, im);
                roots[j] = cd(re, -im);
            }
        }
    }
    sort_spectrum(roots);
    return roots;
}

std::vector<EquilibriumReport> equilibria(const SystemParams& p)
{
    p.validate();
    std::vector<EquilibriumReport> out;
    out.push_back(origin_report(p));

    switch (p.system) {
    case SystemId::ShimizuMorioka: {
        const double x0 = std::sqrt(p.alpha);
        out.push_back(off_origin_report(p, State(x0, 0.0, 1.0)));
        out.push_back(off_origin_report(p, State(-x0, 0.0, 1.0)));
        break;
    }
    case SystemId::ExtendedSM: {
        const double denom = 1.0 + p.alpha * p.B;
        if (denom > 0.0) {
            const double x2 = p.alpha / denom;
            const double x0 = std::sqrt(x2);
            out.push_back(off_origin_report(p, State(x0, 0.0, x2 / p.alpha)));
            out.push_back(off_origin_report(p, State(-x0, 0.0, x2 / p.alpha)));
        }
        break;
    }
    case SystemId::Lorenz: {
        if (p.b * (p.r - 1.0) > 0.0) {
            const double x0 = std::sqrt(p.b * (p.r - 1.0));
            out.push_back(off_origin_report(p, State(x0, x0, p.r - 1.0)));
            out.push_back(off_origin_report(p, State(-x0, -x0, p.r - 1.0)));
        }
        break;
    }
    }
    return out;
}

std::vector<State> stable_equilibria(const SystemParams& p)
{
    std::vector<State> out;
    for (const auto& rep : equilibria(p)) {
        if (rep.stable) {
            out.push_back(rep.location);
        }
    }
    return out;
}

Mat3 origin_eigenbasis(const SystemParams& p)
{
    p.validate();
    const Mat3 j = jacobian_unchecked(p, State::Zero());
    const PlanarEigen pe = planar_eigen(j(0, 0), j(0, 1), j(1, 0), j(1, 1));
    if (pe.mu_plus <= 0.0) {
        throw DomainError("origin is not a saddle (no positive eigenvalue)");
    }
    Vec3 unstable(pe.v_plus.x(), pe.v_plus.y(), 0.0);
    if (unstable.x() < 0.0) {
        unstable = -unstable;
    }
    const Vec3 strong(pe.v_minus.x(), pe.v_minus.y(), 0.0);
    const Vec3 axis(0.0, 0.0, 1.0);
    Mat3 basis;
    basis.col(0) = unstable;
    if (j(2, 2) >= pe.mu_minus) {
        basis.col(1) = axis;
        basis.col(2) = strong;
    } else {
        basis.col(1) = strong;
        basis.col(2) = axis;
    }
    return basis;
}

Vec3 unstable_direction(const SystemParams& p)
{
    return origin_eigenbasis(p).col(0);
}

double analytic_curve(CurveKind kind, double lambda, double nu0)
{
    if (!std::isfinite(lambda) || lambda <= 0.0) {
        throw DomainError("analytic_curve: lambda must be positive");
    }
    switch (kind) {
    case CurveKind::Hopf:
        if (lambda >= std::sqrt(2.0)) {
            throw DomainError("analytic_curve(hopf): lambda must be below sqrt(2)");
        }
        return (2.0 - lambda * lambda) / lambda;
    case CurveKind::SaddleIndexLevel:
        if (!(nu0 > 0.0)) {
            throw DomainError("analytic_curve(saddle_index_level): level must be positive");
        }
        return nu0 * (std::sqrt(lambda * lambda + 4.0) - lambda) / 2.0;
    }
    throw DomainError("analytic_curve: unknown kind");
}

double hopf_lambda(double alpha)
{
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw DomainError("hopf_lambda: alpha must be positive");
    }
    return (-alpha + std::sqrt(alpha * alpha + 8.0)) / 2.0;
}

double hopf_lambda_numeric(double alpha, double lambda_lo, double lambda_hi, double tol)
{
    auto leading_real = [alpha](double lambda) {
        const auto eq = equilibria(SystemParams::shimizu_morioka(alpha, lambda));
        return eq.at(1).gamma;
    };
    double flo = leading_real(lambda_lo);
    const double fhi = leading_real(lambda_hi);
    if (flo * fhi > 0.0) {
        std::ostringstream msg;
        msg << "hopf_lambda_numeric: no sign change of Re(eig O+) on [" << lambda_lo << ", " << lambda_hi << "]";
        throw NumericFailure(msg.str());
    }
    double lo = lambda_lo, hi = lambda_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = leading_real(mid);
        if (fm == 0.0) {
            return mid;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

ExtendedSmParams lorenz_to_extended_sm(double b, double sigma, double r)
{
    const double k = sigma * (r - 1.0);
    if (!std::isfinite(k) || !std::isfinite(b) || k <= 0.0) {
        throw DomainError("lorenz_to_extended_sm: requires sigma (r - 1) > 0");
    }
    if (2.0 * sigma - b == 0.0) {
        throw DomainError("lorenz_to_extended_sm: requires 2 sigma != b");
    }
    const double root = std::sqrt(k);
    return {b / root, (1.0 + sigma) / root, root / (2.0 * sigma - b)};
}

LorenzConjugacy::LorenzConjugacy(double b, double sigma, double r) : b_(b), sigma_(sigma), r_(r)
{
    lorenz_to_extended_sm(b, sigma, r);
    if (!(2.0 * sigma - b > 0.0)) {
        throw DomainError("LorenzConjugacy: requires 2 sigma > b");
    }
    const double k = sigma * (r - 1.0);
    const double amp = std::sqrt(sigma - b / 2.0);
    kx_ = amp / std::pow(k, 0.75);
    ky_ = amp / std::pow(k, 1.25) * sigma;
    kz_ = 1.0 / (r - 1.0);
    time_scale_ = std::sqrt(k);
}

State LorenzConjugacy::map_state(const State& s) const
{
    return {kx_ * s.x(), ky_ * (s.y() - s.x()), kz_ * (s.z() - s.x() * s.x() / (2.0 * sigma_))};
}

Mat3 LorenzConjugacy::map_jacobian(const State& s) const
{
    Mat3 m;
    m << kx_, 0, 0,
         -ky_, ky_, 0,
         -kz_ * s.x() / sigma_, 0, kz_;
    return m;
}

SystemParams LorenzConjugacy::target() const
{
    const auto e = lorenz_to_extended_sm(b_, sigma_, r_);
    return SystemParams::extended_sm(e.alpha, e.lambda, e.B);
}

} // namespace smla
