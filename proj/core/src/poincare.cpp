#include "smla/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace smla {

namespace {

// Runs the separatrix through the section, handing post-transient events to
// `take` until it returns false.
template <class Take>
FlowEnd run_crossings(const SystemParams& p, const SectionSpec& section, const PoincareConfig& cfg, Take&& take)
{
    CaptureSpec cap;
    cap.points = stable_equilibria(p);
    std::size_t seen = 0;
    const auto run = for_each_crossing(
        p, separatrix_seed(p, cfg.branch, cfg.eps), section, cfg.integrator, cfg.t_max,
        [&](const CrossingEvent& e) { return ++seen <= cfg.transient_events || take(e); },
        cfg.capture && !cap.points.empty() ? &cap : nullptr);
    return run.end;
}

} // namespace

SectionPortrait section_portrait(const SystemParams& p, const SectionSpec& section, std::size_t n_events,
                                 const PoincareConfig& cfg)
{
    if (n_events == 0) {
        throw DomainError("section_portrait: n_events must be at least 1");
    }
    SectionPortrait out;
    out.section = section;
    out.requested = n_events;
    out.points.reserve(n_events);
    out.end = run_crossings(p, section, cfg, [&](const CrossingEvent& e) {
        const auto [u, v] = section.coords(e.state);
        out.points.push_back({u, v, e.direction_sign, e.state});
        return out.points.size() < n_events;
    });
    return out;
}

void write_portrait_csv(std::ostream& os, const SectionPortrait& sp)
{
    os << "x,y,dir\n" << std::setprecision(17);
    for (const auto& q : sp.points) {
        os << q.u << ',' << q.v << ',' << q.dir << '\n';
    }
}

bool MapFilter::accepts(double x) const
{
    if (side == Side::Positive && !(x > 0.0)) {
        return false;
    }
    if (side == Side::Negative && !(x < 0.0)) {
        return false;
    }
    return x >= x_lo && x <= x_hi;
}

OneDMapData one_d_map(const SystemParams& p, const SectionSpec& section, std::size_t stride, Folding folding,
                      std::size_t n_pairs, const PoincareConfig& cfg, const MapFilter& filter)
{
    if (stride == 0 || n_pairs == 0) {
        throw DomainError("one_d_map: stride and n_pairs must be at least 1");
    }
    OneDMapData out;
    out.stride = stride;
    out.folding = folding;
    out.filter = filter;
    out.requested = n_pairs;
    std::vector<double> xs;
    out.end = run_crossings(p, section, cfg, [&](const CrossingEvent& e) {
        xs.push_back(section.coords(e.state).first);
        if (xs.size() > stride) {
            const std::size_t k = xs.size() - 1 - stride;
            if (filter.accepts(xs[k])) {
                const double img = xs.back();
                out.pairs.push_back({xs[k], folding == Folding::AbsFold ? std::abs(img) : img, k});
            }
        }
        return out.pairs.size() < n_pairs;
    });
    return out;
}

void write_map_csv(std::ostream& os, const OneDMapData& d)
{
    os << "xn,xim\n" << std::setprecision(17);
    for (const auto& q : d.pairs) {
        os << q.xn << ',' << q.xim << '\n';
    }
}

std::size_t component_count(const OneDMapData& d, double gap_frac)
{
    if (d.pairs.size() < 100) {
        throw DomainError("component_count: need at least 100 pairs");
    }
    std::vector<double> x;
    x.reserve(d.pairs.size());
    for (const auto& q : d.pairs) {
        x.push_back(q.xn);
    }
    std::sort(x.begin(), x.end());
    const double gap = gap_frac * (x.back() - x.front());
    std::size_t n = 1;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] - x[i - 1] > gap) {
            ++n;
        }
    }
    return n;
}

namespace {

struct Binned {
    double lo = 0.0, width = 0.0;
    std::vector<std::vector<const MapPair*>> members;
};

Binned bin_pairs(const OneDMapData& d, std::size_t bins)
{
    if (bins == 0 || d.pairs.size() < 2) {
        throw DomainError("1D map statistics need bins > 0 and at least two pairs");
    }
    Binned b;
    auto [mn, mx] = std::minmax_element(d.pairs.begin(), d.pairs.end(),
                                        [](const MapPair& a, const MapPair& c) { return a.xn < c.xn; });
    b.lo = mn->xn;
    b.width = (mx->xn - mn->xn) / static_cast<double>(bins);
    b.members.resize(bins);
    for (const auto& q : d.pairs) {
        const auto k = b.width > 0.0 ? std::min(bins - 1, static_cast<std::size_t>((q.xn - b.lo) / b.width)) : 0;
        b.members[k].push_back(&q);
    }
    return b;
}

} // namespace

double fiber_spread(const OneDMapData& d, std::size_t bins)
{
    const Binned b = bin_pairs(d, bins);
    const double range = b.width * static_cast<double>(bins);
    if (!(range > 0.0)) {
        return 0.0;
    }
    double worst = 0.0;
    for (const auto& m : b.members) {
        if (m.size() < 3) {
            continue;
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto* q : m) {
            sx += q->xn;
            sy += q->xim;
            sxx += q->xn * q->xn;
            sxy += q->xn * q->xim;
        }
        const double n = static_cast<double>(m.size());
        const double den = n * sxx - sx * sx;
        const double slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
        const double icpt = (sy - slope * sx) / n;
        double rmin = INFINITY, rmax = -INFINITY;
        for (const auto* q : m) {
            const double r = q->xim - (icpt + slope * q->xn);
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
        worst = std::max(worst, rmax - rmin);
    }
    return worst / range;
}

HookReport detect_hook(const OneDMapData& d, std::size_t bins, double tol)
{
    const Binned b = bin_pairs(d, bins);
    HookReport rep;
    rep.fiber_spread = fiber_spread(d, bins);

    std::vector<double> xc, med;
    for (std::size_t k = 0; k < bins; ++k) {
        const auto& m = b.members[k];
        if (m.size() < 5) {
            continue;
        }
        std::vector<double> v;
        v.reserve(m.size());
        for (const auto* q : m) {
            v.push_back(q->xim);
        }
        auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        xc.push_back(b.lo + (static_cast<double>(k) + 0.5) * b.width);
        med.push_back(*mid);
    }
    if (med.size() < 3) {
        return rep;
    }
    const auto [lo_it, hi_it] = std::minmax_element(med.begin(), med.end());
    const double range = *hi_it - *lo_it;
    if (!(range > 0.0)) {
        return rep;
    }
    const auto peak = static_cast<std::size_t>(hi_it - med.begin());
    auto note = [&](std::size_t k, double drop) {
        if (drop / range > rep.depth) {
            rep.depth = drop / range;
            rep.x_at = xc[k];
        }
    };
    double run = med[0];
    for (std::size_t k = 1; k <= peak; ++k) {
        run = std::max(run, med[k]);
        note(k, run - med[k]);
    }
    run = med[peak];
    for (std::size_t k = peak + 1; k < med.size(); ++k) {
        run = std::min(run, med[k]);
        note(k, med[k] - run);
    }
    rep.hook = rep.depth > tol;
    return rep;
}

} // namespace smla
