#include "smla/modelmap.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "smla/types.hpp"

namespace smla {

void ModelParams::validate() const
{
    if (!std::isfinite(mu) || !std::isfinite(A)) {
        throw DomainError("model map: mu and A must be finite");
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw DomainError("model map: nu must be positive");
    }
}

double step(double X, const ModelParams& p) { return p.mu - p.A * std::pow(std::abs(X), p.nu); }

double step_derivative(double X, const ModelParams& p)
{
    if (X == 0.0) {
        throw DomainError("step_derivative: undefined at X = 0");
    }
    const double d = p.A * p.nu * std::pow(std::abs(X), p.nu - 1.0);
    return X > 0.0 ? -d : d;
}

CriticalOrbit critical_orbit(const ModelParams& p, std::size_t N, ZeroSide side)
{
    p.validate();
    if (N == 0) {
        throw DomainError("critical_orbit: N must be at least 1");
    }
    CriticalOrbit out;
    out.orbit.reserve(N + 1);
    out.symbols.reserve(N);
    const double sgn = side == ZeroSide::FromRight ? 1.0 : -1.0;
    double x = 0.0;
    out.orbit.push_back(0.0);
    for (std::size_t i = 0; i < N; ++i) {
        x = step(x, p);
        if (!(std::abs(x) <= 1e6)) {
            out.diverged = true;
            break;
        }
        out.orbit.push_back(sgn * x);
        const bool one = x >= 0.0;
        out.symbols.push_back((one == (side == ZeroSide::FromRight)) ? '1' : '0');
    }
    return out;
}

const char* to_string(ModelCurve c)
{
    switch (c) {
    case ModelCurve::L1: return "l1";
    case ModelCurve::L2: return "l2";
    case ModelCurve::L1LA: return "l1_LA";
    case ModelCurve::L2LA: return "l2_LA";
    case ModelCurve::LSN: return "l_SN";
    case ModelCurve::LPD: return "l_PD";
    case ModelCurve::LLac: return "l_lac";
    }
    return "unknown";
}

ModelCurve model_curve_from_string(const std::string& s)
{
    for (auto c : {ModelCurve::L1, ModelCurve::L2, ModelCurve::L1LA, ModelCurve::L2LA, ModelCurve::LSN, ModelCurve::LPD,
                   ModelCurve::LLac}) {
        if (s == to_string(c)) {
            return c;
        }
    }
    throw DomainError("unknown model-map curve '" + s + "'");
}

namespace {

void check_shilnikov_range(double A, double nu)
{
    if (!(nu > 0.0 && nu < 1.0)) {
        throw DomainError("model-map curves need 0 < nu < 1");
    }
    if (!(A > 0.0) || !std::isfinite(A)) {
        throw DomainError("model-map curves need A > 0");
    }
}

template <class F>
double root_between(F&& f, double lo, double hi, double flo, double fhi)
{
    boost::uintmax_t iters = 300;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    const double a = r.first, b = r.second;
    return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

double iterate(double x, const ModelParams& p, int n)
{
    for (int i = 0; i < n; ++i) {
        x = step(x, p);
    }
    return x;
}

// Point of the 2-cycle closest to 0 from the left, scanning |x| geometrically.
double two_cycle_point(const ModelParams& p)
{
    const double scale = std::max(std::abs(p.mu), 1e-300);
    auto h = [&](double x) { return step(step(x, p), p) - x; };
    const int n = 4000;
    double prev_x = -scale * 1e-14;
    double prev_h = h(prev_x);
    for (int i = 1; i <= n; ++i) {
        const double x = -scale * std::pow(10.0, -14.0 + 14.5 * i / n);
        const double hx = h(x);
        if ((hx < 0.0) != (prev_h < 0.0)) {
            const double r = root_between(h, x, prev_x, hx, prev_h);
            if (std::abs(step(r, p) - r) > 1e-6 * scale) {
                return r;
            }
        }
        prev_x = x;
        prev_h = hx;
    }
    throw NumericFailure("model map: no 2-cycle next to 0");
}

} // namespace

double analytic_curve(ModelCurve kind, double A, double nu)
{
    if (!(nu > 0.0 && nu < 1.0)) {
        throw DomainError("analytic_curve: nu must lie in (0, 1)");
    }
    switch (kind) {
    case ModelCurve::L1: return 0.0;
    case ModelCurve::L2: check_shilnikov_range(A, nu); return std::pow(A, 1.0 / (1.0 - nu));
    case ModelCurve::L1LA: check_shilnikov_range(A, nu); return std::pow(A / 2.0, 1.0 / (1.0 - nu));
    default: break;
    }
    throw DomainError(std::string("analytic_curve: no closed form for ") + to_string(kind));
}

double decreasing_branch_fixed_point(const ModelParams& p)
{
    if (!(p.mu > 0.0) || p.A < 0.0) {
        throw NumericFailure("decreasing-branch fixed point needs mu > 0 and A >= 0");
    }
    if (p.A == 0.0) {
        return p.mu;
    }
    auto g = [&](double x) { return x + p.A * std::pow(x, p.nu) - p.mu; };
    return root_between(g, 0.0, p.mu, -p.mu, g(p.mu));
}

std::vector<double> increasing_branch_fixed_points(const ModelParams& p)
{
    check_shilnikov_range(p.A, p.nu);
    // With w = -x the condition reads A w^nu - w - mu = 0, concave in w with
    // its top at w0.
    auto g = [&](double w) { return p.A * std::pow(w, p.nu) - w - p.mu; };
    const double w0 = std::pow(p.A * p.nu, 1.0 / (1.0 - p.nu));
    const double gtop = g(w0);
    std::vector<double> out;
    if (gtop < 0.0) {
        return out;
    }
    if (gtop == 0.0) {
        out.push_back(-w0);
        return out;
    }
    double hi = 2.0 * w0 + std::abs(p.mu) + 1.0;
    while (g(hi) > 0.0) {
        hi *= 2.0;
    }
    out.push_back(-root_between(g, w0, hi, gtop, g(hi)));
    if (p.mu > 0.0) {
        out.push_back(-root_between(g, 0.0, w0, -p.mu, gtop));
    }
    std::sort(out.begin(), out.end());
    return out;
}

double curve_residual(ModelCurve kind, const ModelParams& p)
{
    switch (kind) {
    case ModelCurve::L1: return p.mu;
    case ModelCurve::L2: return iterate(0.0, p, 2);
    case ModelCurve::L1LA: return iterate(0.0, p, 3) - iterate(0.0, p, 2);
    case ModelCurve::LSN: {
        check_shilnikov_range(p.A, p.nu);
        const double xc = -std::pow(p.A * p.nu, 1.0 / (1.0 - p.nu));
        return step(xc, p) - xc;
    }
    case ModelCurve::LPD: return step_derivative(decreasing_branch_fixed_point(p), p) + 1.0;
    case ModelCurve::LLac: return iterate(0.0, p, 3) - decreasing_branch_fixed_point(p);
    case ModelCurve::L2LA: return iterate(0.0, p, 3) - two_cycle_point(p);
    }
    return 0.0;
}

CurvePoint solve_curve(ModelCurve kind, double A, double nu, double mu_lo, double mu_hi)
{
    check_shilnikov_range(A, nu);
    auto r = [&](double mu) { return curve_residual(kind, ModelParams{mu, A, nu}); };
    const double rlo = r(mu_lo), rhi = r(mu_hi);
    if ((rlo < 0.0) == (rhi < 0.0) || !std::isfinite(rlo) || !std::isfinite(rhi)) {
        std::ostringstream os;
        os << "solve_curve(" << to_string(kind) << "): no sign change on [" << mu_lo << ", " << mu_hi
           << "], residuals " << rlo << ", " << r(0.5 * (mu_lo + mu_hi)) << ", " << rhi;
        throw NumericFailure(os.str());
    }
    CurvePoint cp;
    cp.kind = kind;
    cp.params = {root_between(r, mu_lo, mu_hi, rlo, rhi), A, nu};
    cp.residual = r(cp.params.mu);
    return cp;
}

CurvePoint solve_curve(ModelCurve kind, double A, double nu)
{
    check_shilnikov_range(A, nu);
    const double lo = 1e-3 * analytic_curve(ModelCurve::L1LA, A, nu);
    const double hi = 10.0 * analytic_curve(ModelCurve::L2, A, nu);
    const int n = 600;
    double prev_mu = 0.0, prev_r = 0.0;
    bool have = false;
    for (int i = 0; i <= n; ++i) {
        const double mu = lo * std::pow(hi / lo, static_cast<double>(i) / n);
        double rv = 0.0;
        try {
            rv = curve_residual(kind, ModelParams{mu, A, nu});
        } catch (const NumericFailure&) {
            have = false;
            continue;
        }
        if (have && (rv < 0.0) != (prev_r < 0.0)) {
            return solve_curve(kind, A, nu, prev_mu, mu);
        }
        prev_mu = mu;
        prev_r = rv;
        have = true;
    }
    throw NumericFailure(std::string("solve_curve: no sign change found for ") + to_string(kind));
}

const char* to_string(Regime r)
{
    switch (r) {
    case Regime::StablePeriodic: return "stable_periodic";
    case Regime::ChaoticCandidate: return "chaotic_candidate";
    case Regime::Escaped: return "escaped";
    }
    return "unknown";
}

RegimeReport classify_regime(const ModelParams& p, std::size_t N_transient, std::size_t N_probe)
{
    p.validate();
    if (N_probe < 2) {
        throw DomainError("classify_regime: N_probe must be at least 2");
    }
    RegimeReport rep;
    double x = 0.0;
    for (std::size_t i = 0; i < N_transient; ++i) {
        x = step(x, p);
        if (!(std::abs(x) <= 1e6)) {
            rep.regime = Regime::Escaped;
            return rep;
        }
    }
    std::vector<double> tail(N_probe);
    for (auto& v : tail) {
        x = step(x, p);
        if (!(std::abs(x) <= 1e6)) {
            rep.regime = Regime::Escaped;
            return rep;
        }
        v = x;
    }
    const std::size_t qmax = std::min<std::size_t>(64, N_probe / 2);
    for (std::size_t q = 1; q <= qmax; ++q) {
        bool cycle = true;
        for (std::size_t i = 0; i + q < N_probe && cycle; ++i) {
            cycle = std::abs(tail[i + q] - tail[i]) < 1e-9;
        }
        if (cycle) {
            rep.regime = Regime::StablePeriodic;
            rep.period = q;
            return rep;
        }
    }
    rep.regime = Regime::ChaoticCandidate;
    return rep;
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& pts, bool header)
{
    if (header) {
        os << "kind,mu,A,nu\n";
    }
    os << std::setprecision(17);
    for (const auto& c : pts) {
        os << to_string(c.kind) << ',' << c.params.mu << ',' << c.params.A << ',' << c.params.nu << '\n';
    }
}

std::vector<RegimeCell> regime_chart(const RegimeChartSpec& s)
{
    if (s.n_mu == 0 || s.n_s == 0) {
        throw DomainError("regime_chart: grid needs at least one cell per axis");
    }
    auto at = [](double lo, double hi, std::size_t i, std::size_t n) {
        return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::vector<RegimeCell> cells;
    cells.reserve(s.n_mu * s.n_s);
    for (std::size_t j = 0; j < s.n_s; ++j) {
        const double sv = at(s.s_lo, s.s_hi, j, s.n_s);
        for (std::size_t i = 0; i < s.n_mu; ++i) {
            const double mu = at(s.mu_lo, s.mu_hi, i, s.n_mu);
            const ModelParams p = s.axis == ChartAxis::A ? ModelParams{mu, sv, s.fixed} : ModelParams{mu, s.fixed, sv};
            cells.push_back({mu, sv, classify_regime(p, s.n_transient, s.n_probe).regime});
        }
    }
    return cells;
}

void write_regime_csv(std::ostream& os, const std::vector<RegimeCell>& cells, bool header)
{
    if (header) {
        os << "mu,A_or_nu,regime\n";
    }
    os << std::setprecision(17);
    for (const auto& c : cells) {
        os << c.mu << ',' << c.s << ',' << to_string(c.regime) << '\n';
    }
}

} // namespace smla
