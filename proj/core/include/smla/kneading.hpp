#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "smla/integrate.hpp"

namespace smla {

enum class KneadingEnd { Completed, Escape, EquilibriumCapture, TimeLimit };

const char* to_string(KneadingEnd e);

struct KneadingConfig {
    /// Retained symbols.
    std::size_t N = 15;
    /// Leading symbols dropped before retaining.
    std::size_t skip = 0;
    double eps = 1e-6;
    Branch branch = Branch::Plus;
    /// Ball around a stable O+- that ends the sequence.
    double capture_radius = 1e-4;
    double t_max = 1e4;
    IntegratorConfig integrator;

    void validate() const;
};

struct KneadingSequence {
    /// '0' / '1' characters, starting at raw index `skip`.
    std::string symbols;
    std::size_t skip = 0;
    SystemParams params;
    KneadingEnd termination = KneadingEnd::Completed;
    /// Integration time at which the last symbol (or the termination) occurred.
    double t_end = 0.0;
};

/// Symbol 1 at each local maximum of x with x > 0, symbol 0 at each local
/// minimum of x with x < 0, along the separatrix of O. Extrema are zeros of
/// dx/dt refined on the dense output. Escapes, captures and the time limit
/// truncate the sequence instead of throwing.
KneadingSequence kneading_sequence(const SystemParams& p, const KneadingConfig& cfg = {});

/// Binary fraction of symbols[skip .. skip+K_N). Throws DomainError when the
/// sequence is shorter than skip + K_N.
double kneading_code(const KneadingSequence& seq, std::size_t K_N, std::size_t skip = 0);

/// `alpha,lambda,symbols` (header optional).
void write_kneading_line(std::ostream& os, const KneadingSequence& seq, bool header = false);

struct HomoclinicPoint {
    SystemParams params;
    /// Final bracket; `lo` carries the symbol of p_a.
    SystemParams lo, hi;
    KneadingSequence seq_lo, seq_hi;
    std::size_t iterations = 0;
    /// Parameter distance between the bracket ends after each halving.
    std::vector<double> widths;
    std::string diagnostic;
};

/// Point of the segment p_a -> p_b where the retained symbol at
/// `symbol_index` flips, located by bisection until the bracket is shorter
/// than `tol` (Euclidean distance in the parameters of the system). Throws
/// DomainError when the endpoint symbols agree or are missing.
HomoclinicPoint homoclinic_bisect(const SystemParams& p_a, const SystemParams& p_b, std::size_t symbol_index,
                                  double tol, const KneadingConfig& cfg = {});

/// Linear interpolation of the parameters, (1-s) a + s b.
SystemParams lerp_params(const SystemParams& a, const SystemParams& b, double s);

double param_distance(const SystemParams& a, const SystemParams& b);

} // namespace smla
