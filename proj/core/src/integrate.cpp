#include "smla/integrate.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace smla {

void IntegratorConfig::validate() const
{
    auto tol_ok = [](double v) { return v > 0.0 && v <= 1e-2; };
    if (!tol_ok(abs_tol) || !tol_ok(rel_tol)) {
        throw DomainError("integrator tolerances must lie in (0, 1e-2]");
    }
    if (!(max_step > 0.0)) {
        throw DomainError("integrator max_step must be positive");
    }
    if (!(max_time > 0.0)) {
        throw DomainError("integrator max_time must be positive");
    }
    if (!(escape_radius > 0.0)) {
        throw DomainError("integrator escape_radius must be positive");
    }
}

const char* to_string(IntegrationStatus s)
{
    switch (s) {
    case IntegrationStatus::Completed: return "completed";
    case IntegrationStatus::Escaped: return "escaped";
    case IntegrationStatus::StepUnderflow: return "step_underflow";
    case IntegrationStatus::Timeout: return "timeout";
    }
    return "unknown";
}

const char* to_string(FlowEnd e)
{
    switch (e) {
    case FlowEnd::TimeLimit: return "time_limit";
    case FlowEnd::Stopped: return "stopped";
    case FlowEnd::Captured: return "captured";
    case FlowEnd::Escaped: return "escaped";
    case FlowEnd::StepUnderflow: return "step_underflow";
    case FlowEnd::Timeout: return "timeout";
    }
    return "unknown";
}

namespace {

auto flow_rhs(const SystemParams& p)
{
    return [p](const Vec3& y) -> Vec3 { return vector_field_unchecked(p, y); };
}

void check_inputs(const SystemParams& p, const State& s0, const IntegratorConfig& cfg, double T)
{
    p.validate();
    cfg.validate();
    if (!is_finite(s0)) {
        throw DomainError("initial state must be finite");
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw DomainError("integration time must be positive");
    }
    if (T > cfg.max_time) {
        throw DomainError("integration time exceeds max_time");
    }
}

FlowEnd end_of(IntegrationStatus s)
{
    switch (s) {
    case IntegrationStatus::Escaped: return FlowEnd::Escaped;
    case IntegrationStatus::StepUnderflow: return FlowEnd::StepUnderflow;
    case IntegrationStatus::Timeout: return FlowEnd::Timeout;
    case IntegrationStatus::Completed: break;
    }
    return FlowEnd::TimeLimit;
}

} // namespace

Trajectory integrate(const SystemParams& p, const State& s0, const IntegratorConfig& cfg, double T, double sample_dt)
{
    check_inputs(p, s0, cfg, T);
    Trajectory out;
    out.samples.push_back({0.0, s0});
    auto stepper = make_dopri5<3>(flow_rhs(p), cfg, 0.0, Vec3(s0));
    double next_sample = sample_dt;
    try {
        while (stepper.t() < T) {
            const auto ds = stepper.step(T);
            if (sample_dt > 0.0) {
                while (next_sample <= ds.t1() + 1e-12 * std::max(1.0, ds.t1())) {
                    const double ts = std::min(next_sample, ds.t1());
                    out.samples.push_back({ts, ts == ds.t1() ? State(ds.y1) : State(ds(ts))});
                    next_sample += sample_dt;
                }
            } else {
                out.samples.push_back({ds.t1(), ds.y1});
            }
        }
    } catch (const IntegrationError& e) {
        out.status = e.status();
        out.message = e.what();
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t,x,y,z\n";
    os << std::setprecision(17);
    for (const auto& s : traj.samples) {
        os << s.t << ',' << s.s.x() << ',' << s.s.y() << ',' << s.s.z() << '\n';
    }
}

SectionSpec SectionSpec::plane_z(double level, Direction d)
{
    SectionSpec s;
    s.kind = SectionKind::PlaneZ;
    s.level = level;
    s.direction = d;
    return s;
}

SectionSpec SectionSpec::plane_y0(Direction d, SectionFilter f)
{
    SectionSpec s;
    s.kind = SectionKind::PlaneY0;
    s.level = 0.0;
    s.direction = d;
    s.filter = f;
    return s;
}

SectionSpec SectionSpec::z_local_max()
{
    SectionSpec s;
    s.kind = SectionKind::ZLocalMax;
    s.level = 0.0;
    s.direction = Direction::Downward;
    return s;
}

double SectionSpec::event(const SystemParams& p, const State& s) const
{
    switch (kind) {
    case SectionKind::PlaneZ: return s.z() - level;
    case SectionKind::PlaneY0: return s.y();
    case SectionKind::ZLocalMax: return vector_field_unchecked(p, s).z();
    }
    return 0.0;
}

bool SectionSpec::accepts(const SystemParams& p, const State& s, int direction_sign) const
{
    if (direction == Direction::Upward && direction_sign < 0) {
        return false;
    }
    if (direction == Direction::Downward && direction_sign > 0) {
        return false;
    }
    switch (filter) {
    case SectionFilter::None: return true;
    case SectionFilter::ZDotPositive: return vector_field_unchecked(p, s).z() > 0.0;
    case SectionFilter::ZDotNegative: return vector_field_unchecked(p, s).z() < 0.0;
    case SectionFilter::XPositive: return s.x() > 0.0;
    case SectionFilter::XNegative: return s.x() < 0.0;
    }
    return true;
}

std::pair<double, double> SectionSpec::coords(const State& s) const
{
    if (kind == SectionKind::PlaneZ) {
        return {s.x(), s.y()};
    }
    return {s.x(), s.z()};
}

std::string SectionSpec::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case SectionKind::PlaneZ: os << "plane_z(" << level << ")"; break;
    case SectionKind::PlaneY0: os << "plane_y0"; break;
    case SectionKind::ZLocalMax: os << "z_local_max"; break;
    }
    switch (direction) {
    case Direction::Upward: os << ",upward"; break;
    case Direction::Downward: os << ",downward"; break;
    case Direction::Both: os << ",both"; break;
    }
    switch (filter) {
    case SectionFilter::None: break;
    case SectionFilter::ZDotPositive: os << ",zdot>0"; break;
    case SectionFilter::ZDotNegative: os << ",zdot<0"; break;
    case SectionFilter::XPositive: os << ",x>0"; break;
    case SectionFilter::XNegative: os << ",x<0"; break;
    }
    return os.str();
}

CrossingRun for_each_crossing(const SystemParams& p, const State& s0, const SectionSpec& section,
                              const IntegratorConfig& cfg, double T,
                              const std::function<bool(const CrossingEvent&)>& on_event, const CaptureSpec* capture,
                              double event_tol)
{
    check_inputs(p, s0, cfg, T);
    CrossingRun run;
    auto stepper = make_dopri5<3>(flow_rhs(p), cfg, 0.0, Vec3(s0));
    double g_prev = section.event(p, s0);
    try {
        while (stepper.t() < T) {
            const auto ds = stepper.step(T);
            const double g_next = section.event(p, ds.y1);
            const bool up = g_prev < 0.0 && g_next >= 0.0;
            const bool down = g_prev > 0.0 && g_next <= 0.0;
            if (up || down) {
                const int sign = up ? 1 : -1;
                const auto [tbest, y] = refine_event<3>(
                    ds, g_prev, g_next, [&](const Vec3& v) { return section.event(p, v); }, event_tol);
                const State best = y;
                if (section.accepts(p, best, sign)) {
                    ++run.events;
                    if (!on_event(CrossingEvent{tbest, best, sign})) {
                        run.end = FlowEnd::Stopped;
                        run.t_end = ds.t1();
                        run.last = ds.y1;
                        return run;
                    }
                }
            }
            g_prev = g_next;
            if (capture != nullptr) {
                for (const auto& c : capture->points) {
                    if ((State(ds.y1) - c).norm() < capture->radius) {
                        run.end = FlowEnd::Captured;
                        run.t_end = ds.t1();
                        run.last = ds.y1;
                        return run;
                    }
                }
            }
        }
        run.end = FlowEnd::TimeLimit;
        run.t_end = stepper.t();
        run.last = stepper.y();
    } catch (const IntegrationError& e) {
        run.end = end_of(e.status());
        run.t_end = e.time();
        run.last = e.last_state();
    }
    return run;
}

std::vector<CrossingEvent> detect_crossings(const SystemParams& p, const State& s0, const SectionSpec& section,
                                            const IntegratorConfig& cfg, double T)
{
    std::vector<CrossingEvent> out;
    for_each_crossing(p, s0, section, cfg, T, [&](const CrossingEvent& e) {
        out.push_back(e);
        return true;
    });
    return out;
}

State separatrix_seed(const SystemParams& p, Branch branch, double eps)
{
    if (!(eps >= 1e-9 && eps <= 1e-3)) {
        throw DomainError("separatrix_seed: eps must lie in [1e-9, 1e-3]");
    }
    const Vec3 eu = unstable_direction(p);
    return branch == Branch::Plus ? State(eps * eu) : State(-eps * eu);
}

} // namespace smla
