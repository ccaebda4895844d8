#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

#include "smla/integrate.hpp"

namespace smla {

struct PoincareConfig {
    /// Crossings discarded before collecting.
    std::size_t transient_events = 100;
    double t_max = 1e6;
    double eps = 1e-6;
    Branch branch = Branch::Plus;
    /// Stop at a stable O+- (ball of radius 1e-4).
    bool capture = true;
    IntegratorConfig integrator;
};

struct PortraitPoint {
    double u = 0.0;
    double v = 0.0;
    /// +1 upward, -1 downward through the section.
    int dir = 0;
    State point = State::Zero();
};

struct SectionPortrait {
    SectionSpec section;
    std::vector<PortraitPoint> points;
    std::size_t requested = 0;
    FlowEnd end = FlowEnd::TimeLimit;
    bool truncated() const { return points.size() < requested; }
};

/// First n_events crossings of the separatrix after the transient, in the
/// section's own coordinates.
SectionPortrait section_portrait(const SystemParams& p, const SectionSpec& section, std::size_t n_events,
                                 const PoincareConfig& cfg = {});

/// CSV `x,y,dir`.
void write_portrait_csv(std::ostream& os, const SectionPortrait& sp);

enum class Folding { AbsFold, None };
enum class Side { Positive, Negative, Both };

/// Which pre-images enter the map: sign of x_n and an optional window, used
/// to pick one cloud when the section cuts the attractor in several.
struct MapFilter {
    Side side = Side::Positive;
    double x_lo = -std::numeric_limits<double>::infinity();
    double x_hi = std::numeric_limits<double>::infinity();

    bool accepts(double x) const;
};

struct MapPair {
    double xn = 0.0;
    double xim = 0.0;
    /// Index of the pre-image among the collected crossings.
    std::size_t index = 0;
};

struct OneDMapData {
    std::vector<MapPair> pairs;
    std::size_t stride = 1;
    Folding folding = Folding::AbsFold;
    MapFilter filter;
    std::size_t requested = 0;
    FlowEnd end = FlowEnd::TimeLimit;
};

/// Pairs (x_k, x_{k+stride}) of the first section coordinate over consecutive
/// crossings of one orbit, the image folded by |.| when requested.
OneDMapData one_d_map(const SystemParams& p, const SectionSpec& section, std::size_t stride, Folding folding,
                      std::size_t n_pairs, const PoincareConfig& cfg = {}, const MapFilter& filter = {});

/// CSV `xn,xim`.
void write_map_csv(std::ostream& os, const OneDMapData& d);

/// Clusters of the x_n values separated by gaps wider than gap_frac of their
/// range. Needs at least 100 pairs.
std::size_t component_count(const OneDMapData& d, double gap_frac = 0.05);

/// Largest vertical spread of the images inside one x_n bin after removing
/// the bin's least-squares line, relative to the x_n range.
double fiber_spread(const OneDMapData& d, std::size_t bins = 50);

struct HookReport {
    bool hook = false;
    /// x_n of the bin where the branch turns back.
    double x_at = 0.0;
    /// Size of the reversal relative to the image range.
    double depth = 0.0;
    double fiber_spread = 0.0;
};

/// The binned median graph rises to its peak and falls after it. A bin
/// moving against its branch by more than tol of the image range marks a
/// hook.
HookReport detect_hook(const OneDMapData& d, std::size_t bins = 50, double tol = 0.02);

} // namespace smla
