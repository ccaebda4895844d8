#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "smla/dopri5.hpp"
#include "smla/dynsys.hpp"
#include "smla/integrate.hpp"

namespace smla {

using Vec12 = Eigen::Matrix<double, 12, 1>;

/// State plus three tangent vectors, dY/dt = (f(s), J(s) v1, J(s) v2, J(s) v3).
struct VariationalRhs {
    SystemParams p;
    Vec12 operator()(const Vec12& y) const;
};

Vec12 pack_tangent(const State& s, const Mat3& v);
State unpack_state(const Vec12& y);
Mat3 unpack_frame(const Vec12& y);

/// Modified Gram-Schmidt: m = q r with q orthonormal and r upper triangular
/// with positive diagonal.
void mgs_qr(const Mat3& m, Mat3& q, Mat3& r);

/// Push the columns of v along the orbit of s for dt time units (no
/// renormalization). Returns the end point and the pushed vectors.
std::pair<State, Mat3> propagate_tangent(const SystemParams& p, const State& s, const Mat3& v, double dt,
                                         const IntegratorConfig& cfg = {});

struct LyapunovConfig {
    double T = 1e4;
    double renorm_interval = 0.5;
    double transient = 1e3;
    /// Record a partial estimate every this many renormalizations (0: none).
    std::size_t history_stride = 200;
    /// Batch-means error bar above which the result is flagged unconverged.
    double convergence_tol = 0.01;
    std::size_t batches = 10;
    IntegratorConfig integrator;

    void validate() const;
};

struct LyapunovSpectrum {
    std::array<double, 3> exponents{};
    double T_total = 0.0;
    double renorm_interval = 0.0;
    /// (t, L1, L2, L3) partial estimates.
    std::vector<std::array<double, 4>> convergence_history;
    /// Batch-means standard error per exponent.
    std::array<double, 3> error_bar{};
    bool converged = false;
    State final_state = State::Zero();
    /// Orthonormal Gram-Schmidt frame at the end of the run.
    Mat3 final_frame = Mat3::Identity();
};

/// Benettin scheme. Throws IntegrationError when the orbit escapes.
LyapunovSpectrum lyapunov_spectrum(const SystemParams& p, const State& s0, const LyapunovConfig& cfg);

/// CSV header `alpha,lambda,L1,L2,L3,T` and one row.
void write_spectrum_csv(std::ostream& os, const SystemParams& p, const LyapunovSpectrum& sp, bool header = true);

struct ClvFrame {
    double t = 0.0;
    State point = State::Zero();
    Vec3 v1 = Vec3::Zero();
    Vec3 v2 = Vec3::Zero();
    Vec3 v3 = Vec3::Zero();
    /// Unit normal of span(v1, v2), taken from the Gram-Schmidt frame.
    Vec3 n_cu = Vec3::Zero();
    /// Log-stretch of each vector over the following renormalization
    /// interval; zero for frames taken at section crossings.
    std::array<double, 3> growth{};
};

struct ClvConfig {
    double T = 1e4;
    double renorm_interval = 0.5;
    double transient_fwd = 1e3;
    double transient_bwd = 1e3;
    /// Emit every frame_stride-th renormalization point (0: none; use a section).
    std::size_t frame_stride = 1;
    /// Emit frames where the orbit crosses this section instead of / besides the stride.
    std::optional<SectionSpec> section;
    /// Renormalization steps per replay block.
    std::size_t block_size = 4096;
    /// Initial tangent frame (orthonormalized); identity when unset.
    std::optional<Mat3> initial_frame;
    double degenerate_tol = 1e-300;
    IntegratorConfig integrator;

    void validate() const;
};

struct ClvRunInfo {
    std::size_t frames = 0;
    std::size_t dropped = 0;
    /// Exponents accumulated over the emitted window during the forward pass.
    std::array<double, 3> exponents{};
};

/// Covariant Lyapunov vectors (forward Gram-Schmidt, backward iteration of
/// the triangular factors). The forward pass keeps only block checkpoints;
/// each block is replayed to regenerate its factors before the backward
/// sweep. Frames are handed to `sink` in decreasing time. t is measured from
/// s0, frames cover [transient_fwd, transient_fwd + T].
ClvRunInfo covariant_vectors(const SystemParams& p, const State& s0, const ClvConfig& cfg,
                             const std::function<void(const ClvFrame&)>& sink);

/// Collecting variant, frames in increasing time.
std::vector<ClvFrame> covariant_vectors(const SystemParams& p, const State& s0, const ClvConfig& cfg,
                                        ClvRunInfo* info = nullptr);

/// CSV `t,x,y,z,v1x,v1y,v1z,v2x,v2y,v2z,v3x,v3y,v3z`.
void write_clv_csv(std::ostream& os, const std::vector<ClvFrame>& frames);

/// Angle between two unit-length lines, in [0, pi/2].
double line_angle(const Vec3& a, const Vec3& b);

} // namespace smla
