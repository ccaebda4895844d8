#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "smla/dopri5.hpp"
#include "smla/dynsys.hpp"

namespace smla {

struct TrajectorySample {
    double t = 0.0;
    State s = State::Zero();
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    IntegrationStatus status = IntegrationStatus::Completed;
    std::string message;
};

/// Integrate the flow on [0, T]. With sample_dt > 0 the dense output is
/// resampled on a uniform grid; otherwise every accepted step is recorded.
/// Failures (escape, underflow, timeout) end the run and are reported in the
/// status; the samples up to the last valid state are kept.
Trajectory integrate(const SystemParams& p, const State& s0, const IntegratorConfig& cfg, double T,
                     double sample_dt = 0.0);

/// CSV `t,x,y,z`.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

enum class SectionKind { PlaneZ, PlaneY0, ZLocalMax };

/// Upward: the event function increases through zero.
enum class Direction { Upward, Downward, Both };

enum class SectionFilter { None, ZDotPositive, ZDotNegative, XPositive, XNegative };

/// Cross-section given by a scalar event function g(s) with an orientation.
///   PlaneZ:    g = z - level
///   PlaneY0:   g = y
///   ZLocalMax: g = dz/dt, taken downward
struct SectionSpec {
    SectionKind kind = SectionKind::PlaneZ;
    double level = 1.0;
    Direction direction = Direction::Both;
    SectionFilter filter = SectionFilter::None;

    static SectionSpec plane_z(double level, Direction d = Direction::Both);
    static SectionSpec plane_y0(Direction d = Direction::Both, SectionFilter f = SectionFilter::None);
    static SectionSpec z_local_max();

    double event(const SystemParams& p, const State& s) const;
    bool accepts(const SystemParams& p, const State& s, int direction_sign) const;
    /// Two in-section coordinates: (x, y) on z-planes, (x, z) otherwise.
    std::pair<double, double> coords(const State& s) const;
    std::string describe() const;
};

struct CrossingEvent {
    double time = 0.0;
    State state = State::Zero();
    int direction_sign = 0;
};

/// Points near which the run stops (e.g. stable equilibria).
struct CaptureSpec {
    std::vector<State> points;
    double radius = 1e-4;
};

enum class FlowEnd { TimeLimit, Stopped, Captured, Escaped, StepUnderflow, Timeout };

const char* to_string(FlowEnd e);

struct CrossingRun {
    FlowEnd end = FlowEnd::TimeLimit;
    double t_end = 0.0;
    State last = State::Zero();
    long events = 0;
};

/// Integrate from s0 for at most T time units and call `on_event` for every
/// accepted crossing (time-ordered). Returning false from the callback stops
/// the run. Crossings are bracketed on each accepted step and refined by
/// bisection on the dense output until |g| < event_tol.
CrossingRun for_each_crossing(const SystemParams& p, const State& s0, const SectionSpec& section,
                              const IntegratorConfig& cfg, double T,
                              const std::function<bool(const CrossingEvent&)>& on_event,
                              const CaptureSpec* capture = nullptr, double event_tol = 1e-12);

std::vector<CrossingEvent> detect_crossings(const SystemParams& p, const State& s0, const SectionSpec& section,
                                            const IntegratorConfig& cfg, double T);

/// Bisection for a sign change of g across one dense step, where g0 and g1
/// are the values at the step ends. Stops once |g| < tol. Returns the best
/// (time, state) pair found.
template <int N, class G>
std::pair<double, Eigen::Matrix<double, N, 1>> refine_event(const DenseStep<N>& ds, double g0, double g1, G&& g,
                                                           double tol)
{
    double lo = ds.t0, hi = ds.t1();
    double glo = g0;
    Eigen::Matrix<double, N, 1> best = ds.y1;
    double tbest = hi;
    double gbest = std::abs(g1);
    for (int it = 0; it < 200 && gbest >= tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const Eigen::Matrix<double, N, 1> ym = ds(mid);
        const double gm = g(ym);
        if (std::abs(gm) < gbest) {
            gbest = std::abs(gm);
            best = ym;
            tbest = mid;
        }
        if ((gm < 0.0) == (glo < 0.0) && gm != 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return {tbest, best};
}

enum class Branch { Plus, Minus };

/// O + eps * e_u for Gamma+ (x > 0) and O - eps * e_u for Gamma-.
State separatrix_seed(const SystemParams& p, Branch branch, double eps = 1e-6);

} // namespace smla
