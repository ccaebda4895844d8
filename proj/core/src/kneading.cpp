#include "smla/kneading.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace smla {

const char* to_string(KneadingEnd e)
{
    switch (e) {
    case KneadingEnd::Completed: return "completed";
    case KneadingEnd::Escape: return "escape";
    case KneadingEnd::EquilibriumCapture: return "equilibrium_capture";
    case KneadingEnd::TimeLimit: return "time_limit";
    }
    return "unknown";
}

void KneadingConfig::validate() const
{
    if (N == 0) {
        throw DomainError("kneading: N must be at least 1");
    }
    if (!(capture_radius > 0.0) || !(t_max > 0.0)) {
        throw DomainError("kneading: capture_radius and t_max must be positive");
    }
    integrator.validate();
}

KneadingSequence kneading_sequence(const SystemParams& p, const KneadingConfig& cfg)
{
    p.validate();
    cfg.validate();
    const auto eqs = equilibria(p);
    if (!(eqs[0].gamma > 0.0)) {
        throw DomainError("kneading_sequence: O is not a saddle");
    }
    const std::vector<State> sinks = stable_equilibria(p);

    KneadingSequence out;
    out.params = p;
    out.skip = cfg.skip;
    const std::size_t want = cfg.skip + cfg.N;
    std::size_t raw = 0;

    auto rhs = [p](const Vec3& y) -> Vec3 { return vector_field_unchecked(p, y); };
    auto xdot = [&](const Vec3& y) { return vector_field_unchecked(p, y).x(); };
    const State s0 = separatrix_seed(p, cfg.branch, cfg.eps);
    auto st = make_dopri5<3>(rhs, cfg.integrator, 0.0, Vec3(s0));
    double g_prev = xdot(s0);
    try {
        while (st.t() < cfg.t_max) {
            const auto ds = st.step(cfg.t_max);
            const double g_next = xdot(ds.y1);
            const double g0 = g_prev;
            const bool max_x = g0 > 0.0 && g_next <= 0.0;
            const bool min_x = g0 < 0.0 && g_next >= 0.0;
            g_prev = g_next;
            if (max_x || min_x) {
                const auto [te, ye] = refine_event<3>(ds, g0, g_next, xdot, 1e-12);
                char sym = 0;
                if (max_x && ye.x() > 0.0) {
                    sym = '1';
                } else if (min_x && ye.x() < 0.0) {
                    sym = '0';
                }
                if (sym != 0) {
                    if (raw >= cfg.skip) {
                        out.symbols.push_back(sym);
                    }
                    ++raw;
                    out.t_end = te;
                    if (raw == want) {
                        out.termination = KneadingEnd::Completed;
                        return out;
                    }
                }
            }
            for (const auto& c : sinks) {
                if ((State(ds.y1) - c).norm() < cfg.capture_radius) {
                    out.termination = KneadingEnd::EquilibriumCapture;
                    out.t_end = ds.t1();
                    return out;
                }
            }
        }
        out.termination = KneadingEnd::TimeLimit;
        out.t_end = st.t();
    } catch (const IntegrationError& e) {
        if (e.status() != IntegrationStatus::Escaped) {
            throw;
        }
        out.termination = KneadingEnd::Escape;
        out.t_end = e.time();
    }
    return out;
}

double kneading_code(const KneadingSequence& seq, std::size_t K_N, std::size_t skip)
{
    if (seq.symbols.size() < skip + K_N) {
        std::ostringstream os;
        os << "kneading_code: need " << skip + K_N << " symbols, sequence has " << seq.symbols.size() << " ("
           << to_string(seq.termination) << ")";
        throw DomainError(os.str());
    }
    double code = 0.0, w = 0.5;
    for (std::size_t i = 0; i < K_N; ++i, w *= 0.5) {
        if (seq.symbols[skip + i] == '1') {
            code += w;
        }
    }
    return code;
}

void write_kneading_line(std::ostream& os, const KneadingSequence& seq, bool header)
{
    if (header) {
        os << "alpha,lambda,symbols\n";
    }
    os << std::setprecision(17) << seq.params.alpha << ',' << seq.params.lambda << ',' << seq.symbols << '\n';
}

SystemParams lerp_params(const SystemParams& a, const SystemParams& b, double s)
{
    if (a.system != b.system) {
        throw DomainError("lerp_params: endpoints belong to different systems");
    }
    auto mix = [s](double u, double v) { return (1.0 - s) * u + s * v; };
    SystemParams p = a;
    p.alpha = mix(a.alpha, b.alpha);
    p.lambda = mix(a.lambda, b.lambda);
    p.B = mix(a.B, b.B);
    p.b = mix(a.b, b.b);
    p.sigma = mix(a.sigma, b.sigma);
    p.r = mix(a.r, b.r);
    return p;
}

double param_distance(const SystemParams& a, const SystemParams& b)
{
    const double d[] = {a.alpha - b.alpha, a.lambda - b.lambda, a.B - b.B, a.b - b.b, a.sigma - b.sigma, a.r - b.r};
    double s = 0.0;
    for (double v : d) {
        s += v * v;
    }
    return std::sqrt(s);
}

HomoclinicPoint homoclinic_bisect(const SystemParams& p_a, const SystemParams& p_b, std::size_t symbol_index,
                                  double tol, const KneadingConfig& cfg)
{
    if (!(tol > 0.0)) {
        throw DomainError("homoclinic_bisect: tolerance must be positive");
    }
    KneadingConfig probe = cfg;
    probe.N = symbol_index + 1;

    // '\0' marks a sequence that ended before reaching the symbol.
    auto symbol_at = [&](const SystemParams& p) {
        const auto s = kneading_sequence(p, probe);
        return symbol_index < s.symbols.size() ? s.symbols[symbol_index] : '\0';
    };
    const char sa = symbol_at(p_a);
    const char sb = symbol_at(p_b);
    if (sa == '\0' || sb == '\0') {
        throw DomainError("homoclinic_bisect: an endpoint sequence ends before the requested symbol");
    }
    if (sa == sb) {
        throw DomainError("homoclinic_bisect: endpoint symbols agree");
    }

    HomoclinicPoint out;
    double lo = 0.0, hi = 1.0;
    const double length = param_distance(p_a, p_b);
    std::ostringstream diag;
    while ((hi - lo) * length >= tol) {
        const double mid = 0.5 * (lo + hi);
        const char sm = symbol_at(lerp_params(p_a, p_b, mid));
        if (sm == '\0') {
            diag << "sequence truncated before symbol " << symbol_index << " at s=" << mid << "; ";
        }
        if (sm == sa) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++out.iterations;
        out.widths.push_back((hi - lo) * length);
    }
    out.lo = lerp_params(p_a, p_b, lo);
    out.hi = lerp_params(p_a, p_b, hi);
    out.params = lerp_params(p_a, p_b, 0.5 * (lo + hi));
    KneadingConfig flank = cfg;
    flank.N = std::max(cfg.N, symbol_index + 1);
    out.seq_lo = kneading_sequence(out.lo, flank);
    out.seq_hi = kneading_sequence(out.hi, flank);
    out.diagnostic = diag.str();
    return out;
}

} // namespace smla
