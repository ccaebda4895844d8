#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "smla/lyap.hpp"

namespace smla {

enum class SubspacePair { SsVsCu, UVsCs };
enum class Subspace { Ess, Ecu, Eu, Ecs };

const char* to_string(SubspacePair p);
const char* to_string(Subspace s);

/// Signed sine of the line-vs-plane angle: <V3, n_cu> for SsVsCu,
/// <V1, n_cs> for UVsCs with n_cs = V2 x V3 normalized.
double frame_angle_signed_sine(const ClvFrame& f, SubspacePair pair);

/// Angle in [0, pi/2] between the line and the plane of `pair`. Throws
/// DomainError when the plane is degenerate.
double frame_angle(const ClvFrame& f, SubspacePair pair);

struct AngleStats {
    SubspacePair pair = SubspacePair::SsVsCu;
    double beta_min = 0.0;
    std::vector<std::size_t> histogram;
    std::size_t sample_count = 0;
    /// Sign changes of the signed sine between consecutive frames. The
    /// CLVs vary continuously along the orbit, so each change brackets a
    /// zero of the angle.
    std::size_t sign_changes = 0;
    double t_at_min = 0.0;
    State point_at_min = State::Zero();

    double bin_width() const;
};

class AngleAccumulator {
public:
    explicit AngleAccumulator(SubspacePair pair, std::size_t bins = 90);
    void add(const ClvFrame& f);
    /// Throws DomainError when no frame was added.
    AngleStats result() const;

private:
    AngleStats stats_;
    double last_sine_ = 0.0;
    bool has_last_ = false;
};

/// Frames must be in time order (either direction) for the sign-change count.
AngleStats angle_statistics(const std::vector<ClvFrame>& frames, SubspacePair pair, std::size_t bins = 90);

/// CSV `bin_lo,bin_hi,count`.
void write_histogram_csv(std::ostream& os, const AngleStats& st);

struct ContinuityPair {
    double rho = 0.0;
    double phi = 0.0;
};

struct ContinuityCloud {
    Subspace subspace = Subspace::Ess;
    std::vector<ContinuityPair> pairs;
    /// Bounding-box diagonal of the frame points.
    double diameter = 0.0;
};

/// Direction representing `s` at a frame: V3, V1 or the plane normals.
Vec3 subspace_direction(const ClvFrame& f, Subspace s);

/// All pairs when they fit the budget, otherwise `pair_budget` seeded random
/// pairs i != j. rho = |X_i - X_j|, phi = angle between the directions in [0, pi].
ContinuityCloud continuity_diagram(const std::vector<ClvFrame>& frames, Subspace s, std::size_t pair_budget = 500000,
                                   std::uint64_t seed = 1);

/// CSV `rho,phi`.
void write_cloud_csv(std::ostream& os, const ContinuityCloud& c);

enum class Orientability { Orientable, NonOrientable, Undetermined };

const char* to_string(Orientability o);

/// NonOrientable iff a pair has rho < rho_frac * diameter and phi > pi - delta_phi;
/// Orientable iff additionally no small-rho pair falls in pi/4 < phi < 3pi/4.
Orientability classify_orientability(const ContinuityCloud& c, double rho_frac = 0.05, double delta_phi = 0.2);

enum class VerdictKind { LorenzAttractor, TangencyDetected, NotChaotic };

const char* to_string(VerdictKind v);

struct VerdictConfig {
    ClvConfig clv = default_clv();
    double beta_threshold = 0.005;
    /// Leading exponent at or below this is treated as non-chaotic.
    double chaos_threshold = 0.005;
    /// Count sign changes of the signed sine as tangencies.
    bool use_sign_changes = true;
    std::size_t bins = 90;
    std::size_t pair_budget = 500000;
    std::uint64_t seed = 1;
    double rho_frac = 0.05;
    double delta_phi = 0.2;
    double seed_eps = 1e-6;

    static ClvConfig default_clv();
};

struct PseudohypVerdict {
    SystemParams params;
    std::array<double, 3> exponents{};
    double P2_gap = 0.0;
    double P3_sum = 0.0;
    double beta_min = 0.0;
    double beta_u_min = 0.0;
    double beta_threshold = 0.0;
    std::size_t sign_changes = 0;
    VerdictKind verdict = VerdictKind::NotChaotic;
    Orientability orientability = Orientability::Undetermined;
    std::string diagnostic;
};

/// Lyapunov exponents and CLVs along Gamma+, angle statistics and the E^ss
/// continuity test. Escapes and stable regimes come back as NotChaotic with
/// a diagnostic.
PseudohypVerdict verdict(const SystemParams& p, const VerdictConfig& cfg = {});

/// CSV `alpha,lambda,L1,L2,L3,beta_min,verdict,orientability`.
void write_verdict_csv(std::ostream& os, const PseudohypVerdict& v, bool header = true);

struct ShortSegmentConfig {
    double eps = 1e-6;
    /// Arc length of the separatrix skipped before the window starts.
    double skip_arc = 0.1;
    double window = 300.0;
    double renorm_interval = 0.01;
    double transient_bwd = 100.0;
    IntegratorConfig integrator;
};

struct ShortSegmentResult {
    double beta_min = 0.0;
    double t_at_min = 0.0;
    State point_at_min = State::Zero();
    /// Signed sine at the minimum with V3 oriented along V1. Changes sign
    /// where the window passes through a tangency as parameters vary.
    double oriented_sine = 0.0;
};

/// E^ss vs E^cu angle along Gamma+ over the window following the skipped
/// arc. The tangent frame starts from the eigenbasis of O. Throws
/// IntegrationError when the separatrix escapes.
ShortSegmentResult short_segment(const SystemParams& p, const ShortSegmentConfig& cfg = {});

double short_segment_beta_min(const SystemParams& p, const ShortSegmentConfig& cfg = {});

/// Parameters as a function of two chart coordinates.
using ParamMap = std::function<SystemParams(double, double)>;

struct TangencyTraceConfig {
    /// Chart rectangle [a_lo, a_hi] x [b_lo, b_hi].
    double a_lo = 0, a_hi = 1, b_lo = 0, b_hi = 1;
    /// 0: bisect along a with b fixed per line; 1: the reverse.
    int axis = 1;
    double beta_threshold = 0.005;
    std::size_t lines = 10;
    /// Coarse samples per line; every bracket between neighbours is bisected.
    std::size_t samples = 25;
    double tol = 1e-5;
    /// Keep only the dip nearest the upper end of each line: the top
    /// crossing and, when beta_min stays below beta* between them, the one
    /// just under it.
    bool upper_dip_only = false;
    ShortSegmentConfig segment;
};

struct TracePoint {
    double a = 0.0;
    double b = 0.0;
    double beta = 0.0;
    /// |beta(hi) - beta(lo)| over the final bracket.
    double beta_spread = 0.0;
};

struct TangencyTrace {
    std::vector<TracePoint> points;
    std::vector<std::string> notes;
};

/// Each scan line is sampled, then every sign change of
/// short_segment_beta_min - beta* between neighbours is bisected. When
/// neighbours both sit above beta* but the oriented sine flips, the tangency
/// is located first and the crossings on both sides are bisected. Lines
/// without a crossing are skipped with a note.
TangencyTrace trace_tangency_curve(const ParamMap& map, const TangencyTraceConfig& cfg);

/// Root of short_segment_beta_min - beta* on one line between lo and hi of
/// the scan coordinate; false when the ends do not bracket a sign change.
bool bisect_tangency(const std::function<SystemParams(double)>& line, double lo, double hi, double beta_threshold,
                     double tol, const ShortSegmentConfig& seg, TracePoint& out);

} // namespace smla
