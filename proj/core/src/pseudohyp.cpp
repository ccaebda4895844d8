#include "smla/pseudohyp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace smla {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

const char* to_string(SubspacePair p)
{
    return p == SubspacePair::SsVsCu ? "ss_vs_cu" : "u_vs_cs";
}

const char* to_string(Subspace s)
{
    switch (s) {
    case Subspace::Ess: return "E_ss";
    case Subspace::Ecu: return "E_cu";
    case Subspace::Eu: return "E_u";
    case Subspace::Ecs: return "E_cs";
    }
    return "unknown";
}

const char* to_string(Orientability o)
{
    switch (o) {
    case Orientability::Orientable: return "orientable";
    case Orientability::NonOrientable: return "non_orientable";
    case Orientability::Undetermined: return "undetermined";
    }
    return "unknown";
}

const char* to_string(VerdictKind v)
{
    switch (v) {
    case VerdictKind::LorenzAttractor: return "LorenzAttractor";
    case VerdictKind::TangencyDetected: return "TangencyDetected";
    case VerdictKind::NotChaotic: return "NotChaotic";
    }
    return "unknown";
}

namespace {

Vec3 cu_normal(const ClvFrame& f)
{
    if (f.n_cu.squaredNorm() > 0.25) {
        return f.n_cu.normalized();
    }
    const Vec3 n = f.v1.cross(f.v2);
    const double nn = n.norm();
    if (!(nn > 1e-14)) {
        throw DomainError("frame_angle: V1 and V2 are parallel");
    }
    return n / nn;
}

} // namespace

double frame_angle_signed_sine(const ClvFrame& f, SubspacePair pair)
{
    if (pair == SubspacePair::SsVsCu) {
        return f.v3.dot(cu_normal(f)) / f.v3.norm();
    }
    const Vec3 n = f.v2.cross(f.v3);
    const double nn = n.norm();
    if (!(nn > 1e-14)) {
        throw DomainError("frame_angle: V2 and V3 are parallel");
    }
    return f.v1.dot(n) / (nn * f.v1.norm());
}

double frame_angle(const ClvFrame& f, SubspacePair pair)
{
    return std::asin(std::min(1.0, std::abs(frame_angle_signed_sine(f, pair))));
}

double AngleStats::bin_width() const
{
    return histogram.empty() ? 0.0 : (kPi / 2) / static_cast<double>(histogram.size());
}

AngleAccumulator::AngleAccumulator(SubspacePair pair, std::size_t bins)
{
    if (bins == 0) {
        throw DomainError("angle histogram needs at least one bin");
    }
    stats_.pair = pair;
    stats_.histogram.assign(bins, 0);
    stats_.beta_min = kPi / 2;
}

void AngleAccumulator::add(const ClvFrame& f)
{
    const double s = frame_angle_signed_sine(f, stats_.pair);
    const double beta = std::asin(std::min(1.0, std::abs(s)));
    const std::size_t bins = stats_.histogram.size();
    const auto b = std::min(bins - 1, static_cast<std::size_t>(beta / (kPi / 2) * static_cast<double>(bins)));
    ++stats_.histogram[b];
    if (stats_.sample_count == 0 || beta < stats_.beta_min) {
        stats_.beta_min = beta;
        stats_.t_at_min = f.t;
        stats_.point_at_min = f.point;
    }
    ++stats_.sample_count;
    if (has_last_ && ((s < 0.0) != (last_sine_ < 0.0))) {
        ++stats_.sign_changes;
    }
    last_sine_ = s;
    has_last_ = true;
}

AngleStats AngleAccumulator::result() const
{
    if (stats_.sample_count == 0) {
        throw DomainError("angle statistics of an empty frame stream");
    }
    return stats_;
}

AngleStats angle_statistics(const std::vector<ClvFrame>& frames, SubspacePair pair, std::size_t bins)
{
    AngleAccumulator acc(pair, bins);
    for (const auto& f : frames) {
        acc.add(f);
    }
    return acc.result();
}

void write_histogram_csv(std::ostream& os, const AngleStats& st)
{
    os << "bin_lo,bin_hi,count\n" << std::setprecision(17);
    const double w = st.bin_width();
    for (std::size_t i = 0; i < st.histogram.size(); ++i) {
        os << i * w << ',' << (i + 1) * w << ',' << st.histogram[i] << '\n';
    }
}

Vec3 subspace_direction(const ClvFrame& f, Subspace s)
{
    switch (s) {
    case Subspace::Ess: return f.v3;
    case Subspace::Eu: return f.v1;
    case Subspace::Ecu: return cu_normal(f);
    case Subspace::Ecs: return f.v2.cross(f.v3).normalized();
    }
    return f.v3;
}

ContinuityCloud continuity_diagram(const std::vector<ClvFrame>& frames, Subspace s, std::size_t pair_budget,
                                   std::uint64_t seed)
{
    if (pair_budget == 0) {
        throw DomainError("continuity_diagram: pair budget must be positive");
    }
    if (frames.size() < 2) {
        throw DomainError("continuity_diagram: need at least two frames");
    }
    ContinuityCloud c;
    c.subspace = s;
    std::vector<Vec3> dirs;
    dirs.reserve(frames.size());
    State lo = frames.front().point, hi = lo;
    for (const auto& f : frames) {
        dirs.push_back(subspace_direction(f, s));
        lo = lo.cwiseMin(f.point);
        hi = hi.cwiseMax(f.point);
    }
    c.diameter = (hi - lo).norm();

    auto add = [&](std::size_t i, std::size_t j) {
        const double rho = (frames[i].point - frames[j].point).norm();
        const double phi = std::atan2(dirs[i].cross(dirs[j]).norm(), dirs[i].dot(dirs[j]));
        c.pairs.push_back({rho, phi});
    };

    const std::size_t n = frames.size();
    const double all = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    if (all <= static_cast<double>(pair_budget)) {
        c.pairs.reserve(static_cast<std::size_t>(all));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                add(i, j);
            }
        }
        return c;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    c.pairs.reserve(pair_budget);
    while (c.pairs.size() < pair_budget) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (i != j) {
            add(i, j);
        }
    }
    return c;
}

void write_cloud_csv(std::ostream& os, const ContinuityCloud& c)
{
    os << "rho,phi\n" << std::setprecision(17);
    for (const auto& p : c.pairs) {
        os << p.rho << ',' << p.phi << '\n';
    }
}

Orientability classify_orientability(const ContinuityCloud& c, double rho_frac, double delta_phi)
{
    const double rho_max = rho_frac * c.diameter;
    bool flip = false, band = false;
    for (const auto& p : c.pairs) {
        if (p.rho >= rho_max) {
            continue;
        }
        flip = flip || p.phi > kPi - delta_phi;
        band = band || (p.phi > kPi / 4 && p.phi < 3 * kPi / 4);
    }
    if (flip) {
        return Orientability::NonOrientable;
    }
    return band ? Orientability::Undetermined : Orientability::Orientable;
}

ClvConfig VerdictConfig::default_clv()
{
    ClvConfig c;
    c.T = 1e5;
    c.renorm_interval = 0.5;
    c.transient_fwd = 1e3;
    c.transient_bwd = 1e3;
    return c;
}

PseudohypVerdict verdict(const SystemParams& p, const VerdictConfig& cfg)
{
    PseudohypVerdict v;
    v.params = p;
    v.beta_threshold = cfg.beta_threshold;

    std::vector<ClvFrame> frames;
    ClvRunInfo info;
    try {
        frames = covariant_vectors(p, separatrix_seed(p, Branch::Plus, cfg.seed_eps), cfg.clv, &info);
    } catch (const IntegrationError& e) {
        v.verdict = VerdictKind::NotChaotic;
        v.diagnostic = std::string("integration failed: ") + e.what() + " (" + to_string(e.status()) + ")";
        return v;
    }
    v.exponents = info.exponents;
    v.P2_gap = v.exponents[1] - v.exponents[2];
    v.P3_sum = v.exponents[0] + v.exponents[1];
    if (!(v.exponents[0] > cfg.chaos_threshold)) {
        v.verdict = VerdictKind::NotChaotic;
        std::ostringstream os;
        os << "leading exponent " << v.exponents[0] << " <= " << cfg.chaos_threshold;
        v.diagnostic = os.str();
        return v;
    }
    if (frames.size() < 2) {
        v.verdict = VerdictKind::NotChaotic;
        v.diagnostic = "no usable frames";
        return v;
    }

    const auto ss = angle_statistics(frames, SubspacePair::SsVsCu, cfg.bins);
    const auto u = angle_statistics(frames, SubspacePair::UVsCs, cfg.bins);
    v.beta_min = ss.beta_min;
    v.beta_u_min = u.beta_min;
    v.sign_changes = ss.sign_changes;
    v.orientability = classify_orientability(continuity_diagram(frames, Subspace::Ess, cfg.pair_budget, cfg.seed),
                                             cfg.rho_frac, cfg.delta_phi);

    std::ostringstream diag;
    bool ok = true;
    if (!(v.P2_gap > 0.0)) {
        ok = false;
        diag << "L2-L3 <= 0; ";
    }
    if (!(v.P3_sum > 0.0)) {
        ok = false;
        diag << "L1+L2 <= 0; ";
    }
    if (v.beta_min < cfg.beta_threshold) {
        ok = false;
        diag << "beta_min below threshold; ";
    }
    if (cfg.use_sign_changes && v.sign_changes > 0) {
        ok = false;
        diag << v.sign_changes << " sign changes of <V3,n_cu>; ";
    }
    if (info.dropped > 0) {
        diag << info.dropped << " degenerate frames dropped; ";
    }
    v.verdict = ok ? VerdictKind::LorenzAttractor : VerdictKind::TangencyDetected;
    v.diagnostic = diag.str();
    return v;
}

void write_verdict_csv(std::ostream& os, const PseudohypVerdict& v, bool header)
{
    if (header) {
        os << "alpha,lambda,L1,L2,L3,beta_min,verdict,orientability\n";
    }
    os << std::setprecision(17) << v.params.alpha << ',' << v.params.lambda << ',' << v.exponents[0] << ','
       << v.exponents[1] << ',' << v.exponents[2] << ',' << v.beta_min << ',' << to_string(v.verdict) << ','
       << to_string(v.orientability) << '\n';
}

ShortSegmentResult short_segment(const SystemParams& p, const ShortSegmentConfig& cfg)
{
    if (!(cfg.skip_arc > 0.0) || !(cfg.window > 0.0) || !(cfg.renorm_interval > 0.0)) {
        throw DomainError("short_segment: skip_arc, window and renorm_interval must be positive");
    }
    const State s0 = separatrix_seed(p, Branch::Plus, cfg.eps);

    // Arc length rides along as a fourth coordinate.
    using Vec4 = Eigen::Matrix<double, 4, 1>;
    auto rhs = [p](const Vec4& y) -> Vec4 {
        const Vec3 f = vector_field_unchecked(p, y.head<3>());
        Vec4 out;
        out << f, f.norm();
        return out;
    };
    Vec4 y0;
    y0 << s0, 0.0;
    auto st = make_dopri5<4>(rhs, cfg.integrator, 0.0, y0);
    const double t_cap = 1e4;
    State start = s0;
    bool found = false;
    while (st.t() < t_cap) {
        const auto ds = st.step(t_cap);
        const double g0 = ds.y0[3] - cfg.skip_arc, g1 = ds.y1[3] - cfg.skip_arc;
        if (g0 < 0.0 && g1 >= 0.0) {
            const auto [tc, yc] = refine_event<4>(ds, g0, g1, [&](const Vec4& y) { return y[3] - cfg.skip_arc; }, 1e-12);
            (void)tc;
            start = yc.head<3>();
            found = true;
            break;
        }
    }
    if (!found) {
        throw NumericFailure("short_segment: separatrix never reached the skipped arc length");
    }

    ClvConfig c;
    c.T = cfg.window;
    c.renorm_interval = cfg.renorm_interval;
    c.transient_fwd = 0.0;
    c.transient_bwd = cfg.transient_bwd;
    c.frame_stride = 1;
    c.initial_frame = origin_eigenbasis(p);
    c.integrator = cfg.integrator;
    ShortSegmentResult r;
    r.beta_min = kPi / 2;
    covariant_vectors(p, start, c, [&](const ClvFrame& f) {
        const double b = frame_angle(f, SubspacePair::SsVsCu);
        if (b <= r.beta_min) {
            r.beta_min = b;
            r.t_at_min = f.t;
            r.point_at_min = f.point;
            // The backward sweep fixes the sign of V3 only up to the far
            // future; pin it to V1 so the value is comparable across parameters.
            const double s = frame_angle_signed_sine(f, SubspacePair::SsVsCu);
            r.oriented_sine = f.v3.dot(f.v1) < 0.0 ? -s : s;
        }
    });
    return r;
}

double short_segment_beta_min(const SystemParams& p, const ShortSegmentConfig& cfg)
{
    return short_segment(p, cfg).beta_min;
}

namespace {

bool bisect_on(const std::function<double(double)>& g, double lo, double hi, double glo, double ghi, double tol,
               double& root)
{
    if ((glo < 0.0) == (ghi < 0.0)) {
        return false;
    }
    while (std::abs(hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
    }
    root = 0.5 * (lo + hi);
    return true;
}

} // namespace

bool bisect_tangency(const std::function<SystemParams(double)>& line, double lo, double hi, double beta_threshold,
                     double tol, const ShortSegmentConfig& seg, TracePoint& out)
{
    if (!(tol > 0.0)) {
        throw DomainError("bisect_tangency: tolerance must be positive");
    }
    auto g = [&](double x) { return short_segment_beta_min(line(x), seg) - beta_threshold; };
    double root = 0.0;
    if (!bisect_on(g, lo, hi, g(lo), g(hi), tol, root)) {
        return false;
    }
    const double x_lo = root - 0.5 * tol, x_hi = root + 0.5 * tol;
    out.a = root;
    out.beta = short_segment_beta_min(line(root), seg);
    out.beta_spread = std::abs(g(x_hi) - g(x_lo));
    return true;
}

TangencyTrace trace_tangency_curve(const ParamMap& map, const TangencyTraceConfig& cfg)
{
    if (cfg.lines == 0 || (cfg.axis != 0 && cfg.axis != 1) || cfg.samples < 2 || !(cfg.tol > 0.0)) {
        throw DomainError("trace_tangency_curve: need lines >= 1, samples >= 2, tol > 0 and axis 0 or 1");
    }
    TangencyTrace out;
    const double f_lo = cfg.axis == 0 ? cfg.b_lo : cfg.a_lo;
    const double f_hi = cfg.axis == 0 ? cfg.b_hi : cfg.a_hi;
    const double s_lo = cfg.axis == 0 ? cfg.a_lo : cfg.b_lo;
    const double s_hi = cfg.axis == 0 ? cfg.a_hi : cfg.b_hi;
    const double bstar = cfg.beta_threshold;
    for (std::size_t i = 0; i < cfg.lines; ++i) {
        const double fixed = cfg.lines == 1 ? f_lo : f_lo + (f_hi - f_lo) * static_cast<double>(i) /
                                                                static_cast<double>(cfg.lines - 1);
        auto line = [&](double x) { return cfg.axis == 0 ? map(x, fixed) : map(fixed, x); };
        auto g = [&](double x) { return short_segment_beta_min(line(x), cfg.segment) - bstar; };
        auto sigma = [&](double x) { return short_segment(line(x), cfg.segment).oriented_sine; };
        std::ostringstream note;
        note << "line " << fixed << ": ";
        try {
            std::vector<double> xs(cfg.samples);
            std::vector<ShortSegmentResult> rs(cfg.samples);
            for (std::size_t k = 0; k < cfg.samples; ++k) {
                xs[k] = s_lo + (s_hi - s_lo) * static_cast<double>(k) / static_cast<double>(cfg.samples - 1);
                rs[k] = short_segment(line(xs[k]), cfg.segment);
            }
            std::vector<double> roots;
            for (std::size_t k = 0; k + 1 < cfg.samples; ++k) {
                const double g0 = rs[k].beta_min - bstar, g1 = rs[k + 1].beta_min - bstar;
                double root = 0.0;
                if (bisect_on(g, xs[k], xs[k + 1], g0, g1, cfg.tol, root)) {
                    roots.push_back(root);
                    continue;
                }
                // Both ends above the threshold but the oriented sine flips:
                // the tangency sits between samples. Find it, then the
                // threshold crossings on either side.
                double vertex = 0.0;
                if (g0 >= 0.0 && bisect_on(sigma, xs[k], xs[k + 1], rs[k].oriented_sine, rs[k + 1].oriented_sine,
                                           cfg.tol, vertex)) {
                    const double gv = g(vertex);
                    if (gv < 0.0) {
                        if (bisect_on(g, xs[k], vertex, g0, gv, cfg.tol, root)) {
                            roots.push_back(root);
                        }
                        if (bisect_on(g, vertex, xs[k + 1], gv, g1, cfg.tol, root)) {
                            roots.push_back(root);
                        }
                    }
                }
            }
            if (roots.empty()) {
                note << "no sign change of beta_min - beta*";
                out.notes.push_back(note.str());
                continue;
            }
            if (cfg.upper_dip_only && roots.size() > 1) {
                const std::size_t n = roots.size();
                const bool dip = g(0.5 * (roots[n - 2] + roots[n - 1])) < 0.0;
                roots.erase(roots.begin(), roots.end() - (dip ? 2 : 1));
            }
            for (double x : roots) {
                TracePoint tp;
                tp.beta = short_segment_beta_min(line(x), cfg.segment);
                tp.beta_spread = std::abs(g(x + 0.5 * cfg.tol) - g(x - 0.5 * cfg.tol));
                tp.a = cfg.axis == 0 ? x : fixed;
                tp.b = cfg.axis == 0 ? fixed : x;
                out.points.push_back(tp);
            }
        } catch (const NumericFailure& e) {
            note << e.what();
            out.notes.push_back(note.str());
        }
    }
    return out;
}

} // namespace smla
