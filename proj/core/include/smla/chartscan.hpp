#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "smla/kneading.hpp"
#include "smla/lyap.hpp"
#include "smla/pseudohyp.hpp"

namespace smla {

/// Affine change of parameters used for the charts near the deep inclination
/// flip points:
///   lambda = 0.48291 u - 0.87567 v + 0.5704
///   alpha  = 0.87567 u + 0.48291 v + 0.47746
/// Returns (alpha, lambda).
std::pair<double, double> rotate_params(double u, double v);

/// Exact inverse of rotate_params (the linear part is inverted, not
/// transposed). Returns (u, v).
std::pair<double, double> unrotate_params(double alpha, double lambda);

enum class Plane { AlphaLambda, RotatedUV };

struct GridAxis {
    std::string name;
    double lo = 0.0, hi = 1.0;
    std::size_t n = 1;

    /// lo + i (hi - lo) / (n - 1); lo when n == 1.
    double at(std::size_t i) const;
};

/// axis1 is alpha (or u), axis2 is lambda (or v). Cell index = j * n1 + i.
struct GridSpec {
    Plane plane = Plane::AlphaLambda;
    GridAxis axis1{"alpha", 0.3, 0.7, 10};
    GridAxis axis2{"lambda", 0.7, 1.1, 10};

    std::size_t size() const { return axis1.n * axis2.n; }
    /// (axis1, axis2) coordinates of a cell.
    std::pair<double, double> coords(std::size_t index) const;
    SystemParams params(std::size_t index) const;
    void validate() const;
};

enum class CellJob { Lyapunov, Kneading, Verdict, ShortBeta };

const char* to_string(CellJob j);
CellJob cell_job_from_string(const std::string& s);

/// Cell values: Lyapunov -> Lambda1; Kneading -> kneading code; Verdict ->
/// 2 Lorenz attractor, 1 tangency, 0 not chaotic; ShortBeta -> short-window
/// beta_min.
struct JobConfig {
    CellJob job = CellJob::Lyapunov;
    LyapunovConfig lyapunov = default_lyapunov();
    KneadingConfig kneading;
    std::size_t K_N = 15;
    std::size_t skip = 1;
    VerdictConfig verdict;
    ShortSegmentConfig short_segment;
    double beta_threshold = 0.005;
    /// Wall-clock budget per cell in seconds (<= 0: none).
    double cell_timeout = 30.0;

    static LyapunovConfig default_lyapunov();
};

enum class CellStatus { Pending, Ok, Truncated, Failed, Timeout };

const char* to_string(CellStatus s);
CellStatus cell_status_from_string(const std::string& s);

struct Cell {
    double a1 = 0.0, a2 = 0.0;
    double value = 0.0;
    CellStatus status = CellStatus::Pending;
    std::string note;
};

struct ScanSpec {
    GridSpec grid;
    JobConfig job;
    std::uint64_t seed = 1;
    std::string preset_id;
    /// Worker threads (0: hardware concurrency).
    std::size_t threads = 0;
    /// Cells per checkpointed batch.
    std::size_t batch = 32;
};

/// Text form of every setting that influences cell results, one key=value
/// per line. Thread count and batch size are not part of it.
std::string describe(const ScanSpec& spec);

/// FNV-1a 64 of describe(spec).
std::uint64_t config_hash(const ScanSpec& spec);

std::string hash_hex(std::uint64_t h);

/// Seed of a cell, from the global seed and the cell index only.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t index);

/// Runs one cell. Failures become a status, never an exception.
Cell compute_cell(const ScanSpec& spec, std::size_t index);

struct ChartGrid {
    ScanSpec spec;
    std::uint64_t hash = 0;
    std::vector<Cell> cells;

    std::size_t completed() const;
    const Cell& at(std::size_t i, std::size_t j) const { return cells[j * spec.grid.axis1.n + i]; }
};

/// Fresh grid with all cells pending.
ChartGrid make_grid(const ScanSpec& spec);

struct ScanControl {
    /// Checkpoint file rewritten after every batch (empty: none).
    std::string checkpoint;
    /// Load the checkpoint first and compute only the missing cells.
    bool resume = false;
    /// Stop after this many newly computed cells (0: no limit).
    std::size_t stop_after = 0;
    /// Polled between batches.
    const std::atomic<bool>* interrupt = nullptr;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Computes every pending cell with a bounded worker pool. Only the calling
/// thread touches the grid. Resuming against a checkpoint made for another
/// configuration throws DomainError.
ChartGrid scan(const ScanSpec& spec, const ScanControl& ctl = {});

/// Line-based checkpoint: magic/version line, `hash`, `cells`, then one
/// `index status value note` line per finished cell.
void write_checkpoint(std::ostream& os, const ChartGrid& g);
void save_checkpoint(const std::string& path, const ChartGrid& g);

/// Fills finished cells of g from the stream. Throws DomainError on a
/// malformed file or a hash mismatch.
void read_checkpoint(std::istream& is, ChartGrid& g);
void load_checkpoint(const std::string& path, ChartGrid& g);

/// CSV `axis1,axis2,value,status`.
void write_grid_csv(std::ostream& os, const ChartGrid& g);

struct ChartPreset {
    std::string id;
    std::string description;
    GridSpec grid;
    CellJob job = CellJob::Lyapunov;
    std::size_t K_N = 15;
    std::size_t skip = 1;
    double beta_threshold = 0.005;
    /// Windows are read off the published figures, not given numerically.
    bool approximate = true;
};

const std::vector<ChartPreset>& chart_presets();
const ChartPreset& chart_preset(const std::string& id);

/// Scan spec for a preset, optionally down-sampled to n x n (0: full).
ScanSpec preset_spec(const ChartPreset& preset, std::size_t n = 0);

} // namespace smla
