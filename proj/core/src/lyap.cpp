#include "smla/lyap.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace smla {

Vec12 VariationalRhs::operator()(const Vec12& y) const
{
    const State s = y.head<3>();
    const Mat3 j = jacobian_unchecked(p, s);
    Vec12 out;
    out.head<3>() = vector_field_unchecked(p, s);
    out.segment<3>(3) = j * y.segment<3>(3);
    out.segment<3>(6) = j * y.segment<3>(6);
    out.segment<3>(9) = j * y.segment<3>(9);
    return out;
}

Vec12 pack_tangent(const State& s, const Mat3& v)
{
    Vec12 y;
    y.head<3>() = s;
    y.segment<3>(3) = v.col(0);
    y.segment<3>(6) = v.col(1);
    y.segment<3>(9) = v.col(2);
    return y;
}

State unpack_state(const Vec12& y) { return y.head<3>(); }

Mat3 unpack_frame(const Vec12& y)
{
    Mat3 v;
    v.col(0) = y.segment<3>(3);
    v.col(1) = y.segment<3>(6);
    v.col(2) = y.segment<3>(9);
    return v;
}

void mgs_qr(const Mat3& m, Mat3& q, Mat3& r)
{
    q = m;
    r.setZero();
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < j; ++i) {
            r(i, j) = q.col(i).dot(q.col(j));
            q.col(j) -= r(i, j) * q.col(i);
        }
        r(j, j) = q.col(j).norm();
        if (!(r(j, j) > 0.0) || !std::isfinite(r(j, j))) {
            throw NumericFailure("tangent frame collapsed during orthonormalization");
        }
        q.col(j) /= r(j, j);
    }
}

double line_angle(const Vec3& a, const Vec3& b)
{
    return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

namespace {

/// Variational integration with Gram-Schmidt at caller-chosen times.
class TangentRunner {
public:
    TangentRunner(const SystemParams& p, const Vec12& y0, double t0, const IntegratorConfig& cfg, double h0 = 0.0)
        : stepper_(VariationalRhs{p}, cfg, t0, y0, h0)
    {
    }

    double t() const { return stepper_.t(); }
    const Vec12& y() const { return stepper_.y(); }
    double proposed_step() const { return stepper_.proposed_step(); }

    template <class OnStep>
    Mat3 advance(double t_next, OnStep&& on_step)
    {
        while (stepper_.t() < t_next) {
            on_step(stepper_.step(t_next));
        }
        Mat3 q, r;
        mgs_qr(unpack_frame(stepper_.y()), q, r);
        stepper_.reset_state(pack_tangent(unpack_state(stepper_.y()), q));
        return r;
    }

    Mat3 advance(double t_next)
    {
        return advance(t_next, [](const DenseStep<12>&) {});
    }

private:
    Dopri5<12, VariationalRhs> stepper_;
};

long steps_for(double span, double dt) { return std::lround(span / dt); }

void check_start(const SystemParams& p, const State& s0)
{
    p.validate();
    if (!is_finite(s0)) {
        throw DomainError("initial state must be finite");
    }
}

} // namespace

std::pair<State, Mat3> propagate_tangent(const SystemParams& p, const State& s, const Mat3& v, double dt,
                                         const IntegratorConfig& cfg)
{
    check_start(p, s);
    if (!(dt > 0.0)) {
        throw DomainError("propagate_tangent: dt must be positive");
    }
    Dopri5<12, VariationalRhs> st(VariationalRhs{p}, cfg, 0.0, pack_tangent(s, v));
    while (st.t() < dt) {
        st.step(dt);
    }
    return {unpack_state(st.y()), unpack_frame(st.y())};
}

void LyapunovConfig::validate() const
{
    if (!(T > 0.0) || !(renorm_interval > 0.0) || !(transient >= 0.0)) {
        throw DomainError("lyapunov: T and renorm_interval must be positive, transient non-negative");
    }
    if (renorm_interval > T) {
        throw DomainError("lyapunov: renorm_interval exceeds T");
    }
    if (batches < 2) {
        throw DomainError("lyapunov: need at least two batches for the error bar");
    }
    integrator.validate();
}

LyapunovSpectrum lyapunov_spectrum(const SystemParams& p, const State& s0, const LyapunovConfig& cfg)
{
    check_start(p, s0);
    cfg.validate();
    const double dt = cfg.renorm_interval;
    TangentRunner run(p, pack_tangent(s0, Mat3::Identity()), 0.0, cfg.integrator);

    const long n_tr = steps_for(cfg.transient, dt);
    for (long k = 1; k <= n_tr; ++k) {
        run.advance(k * dt);
    }

    const long n = std::max(1L, steps_for(cfg.T, dt));
    const double base = n_tr * dt;
    const std::size_t nb = std::min<std::size_t>(cfg.batches, static_cast<std::size_t>(n));
    std::vector<std::array<double, 3>> batch(nb, {0.0, 0.0, 0.0});
    std::vector<long> batch_len(nb, 0);

    LyapunovSpectrum out;
    out.renorm_interval = dt;
    std::array<double, 3> sums{};
    for (long k = 1; k <= n; ++k) {
        const Mat3 r = run.advance(base + k * dt);
        const std::size_t b = static_cast<std::size_t>((k - 1) * static_cast<long>(nb) / n);
        for (int i = 0; i < 3; ++i) {
            const double l = std::log(r(i, i));
            sums[i] += l;
            batch[b][i] += l;
        }
        ++batch_len[b];
        if (cfg.history_stride > 0 && k % static_cast<long>(cfg.history_stride) == 0) {
            const double t = k * dt;
            out.convergence_history.push_back({t, sums[0] / t, sums[1] / t, sums[2] / t});
        }
    }
    out.T_total = n * dt;
    for (int i = 0; i < 3; ++i) {
        out.exponents[i] = sums[i] / out.T_total;
        double mean = 0.0, var = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            mean += batch[b][i] / (batch_len[b] * dt);
        }
        mean /= nb;
        for (std::size_t b = 0; b < nb; ++b) {
            const double d = batch[b][i] / (batch_len[b] * dt) - mean;
            var += d * d;
        }
        var /= (nb - 1);
        out.error_bar[i] = std::sqrt(var / nb);
    }
    out.converged = std::max({out.error_bar[0], out.error_bar[1], out.error_bar[2]}) <= cfg.convergence_tol;
    out.final_state = unpack_state(run.y());
    out.final_frame = unpack_frame(run.y());
    return out;
}

void write_spectrum_csv(std::ostream& os, const SystemParams& p, const LyapunovSpectrum& sp, bool header)
{
    if (header) {
        os << "alpha,lambda,L1,L2,L3,T\n";
    }
    os << std::setprecision(17) << p.alpha << ',' << p.lambda << ',' << sp.exponents[0] << ',' << sp.exponents[1]
       << ',' << sp.exponents[2] << ',' << sp.T_total << '\n';
}

void ClvConfig::validate() const
{
    if (!(T > 0.0) || !(renorm_interval > 0.0) || !(transient_fwd >= 0.0) || !(transient_bwd >= 0.0)) {
        throw DomainError("clv: T and renorm_interval must be positive, transients non-negative");
    }
    if (block_size == 0) {
        throw DomainError("clv: block_size must be positive");
    }
    if (frame_stride == 0 && !section) {
        throw DomainError("clv: no frame source (stride 0 and no section)");
    }
    integrator.validate();
}

namespace {

struct Checkpoint {
    double t;
    Vec12 y;
    double h;
};

struct PendingCrossing {
    long k;
    double t;
    State point;
    Mat3 frame;
};

Mat3 unit_upper_ones()
{
    Mat3 c = Mat3::Zero();
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i <= j; ++i) {
            c(i, j) = 1.0;
        }
        c.col(j).normalize();
    }
    return c;
}

} // namespace

ClvRunInfo covariant_vectors(const SystemParams& p, const State& s0, const ClvConfig& cfg,
                             const std::function<void(const ClvFrame&)>& sink)
{
    check_start(p, s0);
    cfg.validate();
    const double dt = cfg.renorm_interval;

    Mat3 q0 = Mat3::Identity();
    if (cfg.initial_frame) {
        Mat3 r;
        mgs_qr(*cfg.initial_frame, q0, r);
    }
    TangentRunner fwd(p, pack_tangent(s0, q0), 0.0, cfg.integrator);

    const long n_tf = steps_for(cfg.transient_fwd, dt);
    const long n_main = std::max(1L, steps_for(cfg.T, dt));
    const long n_tb = steps_for(cfg.transient_bwd, dt);
    const long total = n_main + n_tb;
    const long block = static_cast<long>(cfg.block_size);

    for (long k = 1; k <= n_tf; ++k) {
        fwd.advance(k * dt);
    }
    const double base = n_tf * dt;
    auto t_at = [&](long k) { return base + k * dt; };

    ClvRunInfo info;
    std::vector<Checkpoint> checkpoints;
    std::array<double, 3> sums{};
    for (long k = 0; k < total; ++k) {
        if (k % block == 0) {
            checkpoints.push_back({fwd.t(), fwd.y(), fwd.proposed_step()});
        }
        const Mat3 r = fwd.advance(t_at(k + 1));
        if (k < n_main) {
            for (int i = 0; i < 3; ++i) {
                sums[i] += std::log(r(i, i));
            }
        }
    }
    for (int i = 0; i < 3; ++i) {
        info.exponents[i] = sums[i] / (n_main * dt);
    }

    // span(V1, V2) equals span of the first two Gram-Schmidt vectors, so
    // its normal is the third one. This stays well conditioned when V1 and
    // V2 are nearly parallel (e.g. along a separatrix leaving O).
    auto emit = [&](double t, const State& pt, const Mat3& frame, const Mat3& coeff,
                    const std::array<double, 3>& growth) {
        Mat3 q, r;
        mgs_qr(frame, q, r);
        const Mat3 v = frame * coeff;
        ClvFrame f;
        f.t = t;
        f.point = pt;
        f.v1 = v.col(0).normalized();
        f.v2 = v.col(1).normalized();
        f.v3 = v.col(2).normalized();
        f.n_cu = q.col(2);
        if (!is_finite(f.v1) || !is_finite(f.v2) || !is_finite(f.v3)) {
            ++info.dropped;
            return;
        }
        f.growth = growth;
        ++info.frames;
        sink(f);
    };

    Mat3 c = unit_upper_ones();
    std::vector<Mat3> qs, rs;
    std::vector<State> pts;
    std::vector<PendingCrossing> crossings;
    for (long b = static_cast<long>(checkpoints.size()) - 1; b >= 0; --b) {
        const long k0 = b * block;
        const long k1 = std::min(total, k0 + block);
        const auto& cp = checkpoints[static_cast<std::size_t>(b)];
        TangentRunner replay(p, cp.y, cp.t, cfg.integrator, cp.h);
        qs.clear();
        rs.clear();
        pts.clear();
        crossings.clear();
        for (long k = k0; k < k1; ++k) {
            qs.push_back(unpack_frame(replay.y()));
            pts.push_back(unpack_state(replay.y()));
            const bool want_cross = cfg.section && k < n_main;
            rs.push_back(replay.advance(t_at(k + 1), [&](const DenseStep<12>& ds) {
                if (!want_cross) {
                    return;
                }
                const auto g = [&](const Vec12& y) { return cfg.section->event(p, unpack_state(y)); };
                const double g0 = g(ds.y0), g1 = g(ds.y1);
                const bool up = g0 < 0.0 && g1 >= 0.0;
                const bool down = g0 > 0.0 && g1 <= 0.0;
                if (!up && !down) {
                    return;
                }
                const auto [tc, yc] = refine_event<12>(ds, g0, g1, g, 1e-12);
                if (cfg.section->accepts(p, unpack_state(yc), up ? 1 : -1)) {
                    crossings.push_back({k, tc, unpack_state(yc), unpack_frame(yc)});
                }
            }));
        }

        auto cross_it = crossings.rbegin();
        for (long k = k1 - 1; k >= k0; --k) {
            const std::size_t i = static_cast<std::size_t>(k - k0);
            const Mat3& r = rs[i];
            const double dmin = std::min({std::abs(r(0, 0)), std::abs(r(1, 1)), std::abs(r(2, 2))});
            std::array<double, 3> growth{};
            if (dmin > cfg.degenerate_tol) {
                Mat3 ck = r.triangularView<Eigen::Upper>().solve(c);
                for (int j = 0; j < 3; ++j) {
                    const double nrm = ck.col(j).norm();
                    growth[static_cast<std::size_t>(j)] = -std::log(nrm);
                    ck.col(j) /= nrm;
                }
                c = ck;
            } else {
                ++info.dropped;
            }
            for (; cross_it != crossings.rend() && cross_it->k == k; ++cross_it) {
                emit(cross_it->t, cross_it->point, cross_it->frame, c, {0.0, 0.0, 0.0});
            }
            if (k < n_main && cfg.frame_stride > 0 && k % static_cast<long>(cfg.frame_stride) == 0) {
                emit(t_at(k), pts[i], qs[i], c, growth);
            }
        }
    }
    return info;
}

std::vector<ClvFrame> covariant_vectors(const SystemParams& p, const State& s0, const ClvConfig& cfg,
                                        ClvRunInfo* info)
{
    std::vector<ClvFrame> frames;
    const auto i = covariant_vectors(p, s0, cfg, [&](const ClvFrame& f) { frames.push_back(f); });
    std::reverse(frames.begin(), frames.end());
    if (info != nullptr) {
        *info = i;
    }
    return frames;
}

void write_clv_csv(std::ostream& os, const std::vector<ClvFrame>& frames)
{
    os << "t,x,y,z,v1x,v1y,v1z,v2x,v2y,v2z,v3x,v3y,v3z\n";
    os << std::setprecision(17);
    for (const auto& f : frames) {
        os << f.t << ',' << f.point.x() << ',' << f.point.y() << ',' << f.point.z();
        for (const Vec3* v : {&f.v1, &f.v2, &f.v3}) {
            os << ',' << v->x() << ',' << v->y() << ',' << v->z();
        }
        os << '\n';
    }
}

} // namespace smla
