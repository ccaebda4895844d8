#include "smla/chartscan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace smla {

namespace {

constexpr double kLu = 0.48291, kLv = -0.87567, kL0 = 0.5704;
constexpr double kAu = 0.87567, kAv = 0.48291, kA0 = 0.47746;

constexpr const char* kMagic = "smla-chartscan-checkpoint";
constexpr int kVersion = 1;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

double parse_double(const std::string& tok)
{
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
        throw DomainError("checkpoint: bad number '" + tok + "'");
    }
    return v;
}

} // namespace

std::pair<double, double> rotate_params(double u, double v)
{
    return {kAu * u + kAv * v + kA0, kLu * u + kLv * v + kL0};
}

std::pair<double, double> unrotate_params(double alpha, double lambda)
{
    const double da = alpha - kA0, dl = lambda - kL0;
    const double det = kAu * kLv - kAv * kLu;
    return {(da * kLv - kAv * dl) / det, (kAu * dl - kLu * da) / det};
}

double GridAxis::at(std::size_t i) const
{
    if (n <= 1) {
        return lo;
    }
    if (i + 1 == n) {
        return hi;
    }
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

std::pair<double, double> GridSpec::coords(std::size_t index) const
{
    return {axis1.at(index % axis1.n), axis2.at(index / axis1.n)};
}

SystemParams GridSpec::params(std::size_t index) const
{
    const auto [a, b] = coords(index);
    if (plane == Plane::RotatedUV) {
        const auto [alpha, lambda] = rotate_params(a, b);
        return SystemParams::shimizu_morioka(alpha, lambda);
    }
    return SystemParams::shimizu_morioka(a, b);
}

void GridSpec::validate() const
{
    for (const auto* ax : {&axis1, &axis2}) {
        if (ax->n == 0 || !std::isfinite(ax->lo) || !std::isfinite(ax->hi) || ax->hi < ax->lo) {
            throw DomainError("grid axis " + ax->name + ": need n >= 1 and finite lo <= hi");
        }
    }
}

const char* to_string(CellJob j)
{
    switch (j) {
    case CellJob::Lyapunov: return "lyapunov";
    case CellJob::Kneading: return "kneading";
    case CellJob::Verdict: return "verdict";
    case CellJob::ShortBeta: return "short_beta";
    }
    return "unknown";
}

CellJob cell_job_from_string(const std::string& s)
{
    for (auto j : {CellJob::Lyapunov, CellJob::Kneading, CellJob::Verdict, CellJob::ShortBeta}) {
        if (s == to_string(j)) {
            return j;
        }
    }
    throw DomainError("unknown cell job '" + s + "'");
}

const char* to_string(CellStatus s)
{
    switch (s) {
    case CellStatus::Pending: return "pending";
    case CellStatus::Ok: return "ok";
    case CellStatus::Truncated: return "truncated";
    case CellStatus::Failed: return "failed";
    case CellStatus::Timeout: return "timeout";
    }
    return "unknown";
}

CellStatus cell_status_from_string(const std::string& s)
{
    for (auto c : {CellStatus::Pending, CellStatus::Ok, CellStatus::Truncated, CellStatus::Failed,
                   CellStatus::Timeout}) {
        if (s == to_string(c)) {
            return c;
        }
    }
    throw DomainError("unknown cell status '" + s + "'");
}

LyapunovConfig JobConfig::default_lyapunov()
{
    LyapunovConfig c;
    c.T = 2000.0;
    c.transient = 500.0;
    c.history_stride = 0;
    return c;
}

std::string describe(const ScanSpec& s)
{
    std::ostringstream os;
    os << std::setprecision(17);
    auto axis = [&](const char* key, const GridAxis& a) {
        os << key << '=' << a.name << ',' << a.lo << ',' << a.hi << ',' << a.n << '\n';
    };
    auto integ = [&](const char* key, const IntegratorConfig& c) {
        os << key << '=' << c.abs_tol << ',' << c.rel_tol << ',' << c.max_step << ',' << c.max_time << ','
           << c.escape_radius << ',' << c.min_step << '\n';
    };
    const JobConfig& j = s.job;
    os << "plane=" << (s.grid.plane == Plane::RotatedUV ? "uv" : "alpha_lambda") << '\n';
    axis("axis1", s.grid.axis1);
    axis("axis2", s.grid.axis2);
    os << "job=" << to_string(j.job) << '\n';
    os << "seed=" << s.seed << '\n';
    os << "preset=" << s.preset_id << '\n';
    os << "cell_timeout=" << j.cell_timeout << '\n';
    os << "beta_threshold=" << j.beta_threshold << '\n';
    switch (j.job) {
    case CellJob::Lyapunov:
        os << "lyapunov=" << j.lyapunov.T << ',' << j.lyapunov.renorm_interval << ',' << j.lyapunov.transient
           << '\n';
        integ("lyapunov.integrator", j.lyapunov.integrator);
        break;
    case CellJob::Kneading:
        os << "kneading=" << j.K_N << ',' << j.skip << ',' << j.kneading.eps << ','
           << (j.kneading.branch == Branch::Plus ? '+' : '-') << ',' << j.kneading.capture_radius << ','
           << j.kneading.t_max << '\n';
        integ("kneading.integrator", j.kneading.integrator);
        break;
    case CellJob::Verdict: {
        const auto& v = j.verdict;
        os << "verdict.clv=" << v.clv.T << ',' << v.clv.renorm_interval << ',' << v.clv.transient_fwd << ','
           << v.clv.transient_bwd << ',' << v.clv.frame_stride << '\n';
        os << "verdict=" << v.beta_threshold << ',' << v.chaos_threshold << ',' << v.use_sign_changes << ','
           << v.bins << ',' << v.pair_budget << ',' << v.rho_frac << ',' << v.delta_phi << ',' << v.seed_eps
           << '\n';
        integ("verdict.integrator", v.clv.integrator);
        break;
    }
    case CellJob::ShortBeta: {
        const auto& c = j.short_segment;
        os << "short_segment=" << c.eps << ',' << c.skip_arc << ',' << c.window << ',' << c.renorm_interval << ','
           << c.transient_bwd << '\n';
        integ("short_segment.integrator", c.integrator);
        break;
    }
    }
    return os.str();
}

std::uint64_t config_hash(const ScanSpec& spec)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : describe(spec)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t index)
{
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index));
}

Cell compute_cell(const ScanSpec& spec, std::size_t index)
{
    using Clock = std::chrono::steady_clock;
    Cell c;
    std::tie(c.a1, c.a2) = spec.grid.coords(index);
    c.value = NAN;
    const JobConfig& j = spec.job;
    std::optional<Clock::time_point> deadline;
    if (j.cell_timeout > 0.0) {
        deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(j.cell_timeout));
    }
    try {
        const SystemParams p = spec.grid.params(index);
        switch (j.job) {
        case CellJob::Lyapunov: {
            LyapunovConfig cfg = j.lyapunov;
            cfg.integrator.deadline = deadline;
            c.value = lyapunov_spectrum(p, separatrix_seed(p, Branch::Plus), cfg).exponents[0];
            c.status = CellStatus::Ok;
            break;
        }
        case CellJob::Kneading: {
            KneadingConfig cfg = j.kneading;
            cfg.N = j.K_N;
            cfg.skip = j.skip;
            cfg.integrator.deadline = deadline;
            const auto seq = kneading_sequence(p, cfg);
            if (seq.termination == KneadingEnd::Completed) {
                c.value = kneading_code(seq, j.K_N);
                c.status = CellStatus::Ok;
            } else {
                // Code of the symbols that exist, missing ones counted as 0.
                double code = 0.0, w = 0.5;
                for (char s : seq.symbols) {
                    code += s == '1' ? w : 0.0;
                    w *= 0.5;
                }
                c.value = code;
                c.status = CellStatus::Truncated;
                c.note = to_string(seq.termination);
            }
            break;
        }
        case CellJob::Verdict: {
            VerdictConfig cfg = j.verdict;
            cfg.clv.integrator.deadline = deadline;
            cfg.seed = cell_seed(spec.seed, index);
            const auto v = verdict(p, cfg);
            if (!v.diagnostic.empty() && deadline && Clock::now() > *deadline) {
                c.status = CellStatus::Timeout;
                c.note = one_line(v.diagnostic);
                break;
            }
            c.value = v.verdict == VerdictKind::LorenzAttractor ? 2.0
                      : v.verdict == VerdictKind::TangencyDetected ? 1.0
                                                                   : 0.0;
            c.status = CellStatus::Ok;
            c.note = std::string(to_string(v.verdict)) + ' ' + to_string(v.orientability);
            break;
        }
        case CellJob::ShortBeta: {
            ShortSegmentConfig cfg = j.short_segment;
            cfg.integrator.deadline = deadline;
            c.value = short_segment(p, cfg).beta_min;
            c.status = CellStatus::Ok;
            if (c.value < j.beta_threshold) {
                c.note = "tangency";
            }
            break;
        }
        }
    } catch (const IntegrationError& e) {
        c.status = e.status() == IntegrationStatus::Timeout ? CellStatus::Timeout : CellStatus::Failed;
        c.note = one_line(std::string(to_string(e.status())) + ": " + e.what());
        c.value = NAN;
    } catch (const std::exception& e) {
        c.status = CellStatus::Failed;
        c.note = one_line(e.what());
        c.value = NAN;
    }
    return c;
}

std::size_t ChartGrid::completed() const
{
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.status != CellStatus::Pending; }));
}

ChartGrid make_grid(const ScanSpec& spec)
{
    spec.grid.validate();
    ChartGrid g;
    g.spec = spec;
    g.hash = config_hash(spec);
    g.cells.resize(spec.grid.size());
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        std::tie(g.cells[k].a1, g.cells[k].a2) = spec.grid.coords(k);
        g.cells[k].value = NAN;
    }
    return g;
}

ChartGrid scan(const ScanSpec& spec, const ScanControl& ctl)
{
    ChartGrid g = make_grid(spec);
    if (ctl.resume && !ctl.checkpoint.empty() && std::filesystem::exists(ctl.checkpoint)) {
        load_checkpoint(ctl.checkpoint, g);
    }
    std::vector<std::size_t> pending;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        if (g.cells[k].status == CellStatus::Pending) {
            pending.push_back(k);
        }
    }
    std::size_t threads = spec.threads;
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    const std::size_t batch = std::max<std::size_t>(1, spec.batch);
    std::size_t fresh = 0;
    std::size_t pos = 0;
    while (pos < pending.size()) {
        if (ctl.interrupt && ctl.interrupt->load()) {
            break;
        }
        std::size_t len = std::min(batch, pending.size() - pos);
        if (ctl.stop_after > 0) {
            len = std::min(len, ctl.stop_after - fresh);
        }
        if (len == 0) {
            break;
        }
        std::vector<Cell> out(len);
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t k; (k = next.fetch_add(1)) < len;) {
                out[k] = compute_cell(spec, pending[pos + k]);
            }
        };
        if (threads == 1 || len == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < std::min(threads, len); ++t) {
                pool.emplace_back(work);
            }
        }
        for (std::size_t k = 0; k < len; ++k) {
            g.cells[pending[pos + k]] = std::move(out[k]);
        }
        pos += len;
        fresh += len;
        if (!ctl.checkpoint.empty()) {
            save_checkpoint(ctl.checkpoint, g);
        }
        if (ctl.progress) {
            ctl.progress(g.completed(), g.cells.size());
        }
    }
    return g;
}

void write_checkpoint(std::ostream& os, const ChartGrid& g)
{
    os << kMagic << ' ' << kVersion << '\n';
    os << "hash " << hash_hex(g.hash) << '\n';
    os << "cells " << g.cells.size() << '\n';
    std::istringstream desc(describe(g.spec));
    for (std::string line; std::getline(desc, line);) {
        os << "config " << line << '\n';
    }
    os << std::setprecision(17);
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        const Cell& c = g.cells[k];
        if (c.status == CellStatus::Pending) {
            continue;
        }
        os << k << ' ' << to_string(c.status) << ' ' << c.value;
        if (!c.note.empty()) {
            os << ' ' << c.note;
        }
        os << '\n';
    }
}

void save_checkpoint(const std::string& path, const ChartGrid& g)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw DomainError("cannot write checkpoint " + tmp);
        }
        write_checkpoint(f, g);
        if (!f.flush()) {
            throw DomainError("cannot write checkpoint " + tmp);
        }
    }
    std::filesystem::rename(tmp, path);
}

void read_checkpoint(std::istream& is, ChartGrid& g)
{
    std::string line;
    std::string magic;
    int version = 0;
    if (!std::getline(is, line) || !(std::istringstream(line) >> magic >> version) || magic != kMagic ||
        version != kVersion) {
        throw DomainError("checkpoint: missing or unsupported header");
    }
    std::string key, hex;
    if (!std::getline(is, line) || !(std::istringstream(line) >> key >> hex) || key != "hash") {
        throw DomainError("checkpoint: missing hash line");
    }
    if (hex != hash_hex(g.hash)) {
        throw DomainError("checkpoint: config hash " + hex + " does not match " + hash_hex(g.hash));
    }
    std::size_t n = 0;
    if (!std::getline(is, line) || !(std::istringstream(line) >> key >> n) || key != "cells" ||
        n != g.cells.size()) {
        throw DomainError("checkpoint: cell count mismatch");
    }
    while (std::getline(is, line)) {
        if (line.empty() || line.rfind("config ", 0) == 0) {
            continue;
        }
        std::istringstream ls(line);
        std::size_t k = 0;
        std::string status, value;
        if (!(ls >> k >> status >> value) || k >= g.cells.size()) {
            throw DomainError("checkpoint: bad cell line '" + line + "'");
        }
        Cell& c = g.cells[k];
        c.status = cell_status_from_string(status);
        c.value = parse_double(value);
        std::string note;
        std::getline(ls >> std::ws, note);
        c.note = note;
    }
}

void load_checkpoint(const std::string& path, ChartGrid& g)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw DomainError("cannot read checkpoint " + path);
    }
    read_checkpoint(f, g);
}

void write_grid_csv(std::ostream& os, const ChartGrid& g)
{
    os << "axis1,axis2,value,status\n" << std::setprecision(17);
    for (const auto& c : g.cells) {
        os << c.a1 << ',' << c.a2 << ',' << c.value << ',' << to_string(c.status) << '\n';
    }
}

namespace {

ChartPreset make_preset(std::string id, std::string desc, Plane plane, GridAxis a1, GridAxis a2, CellJob job,
                        std::size_t K_N, std::size_t skip, double beta)
{
    ChartPreset p;
    p.id = std::move(id);
    p.description = std::move(desc);
    p.grid.plane = plane;
    p.grid.axis1 = std::move(a1);
    p.grid.axis2 = std::move(a2);
    p.job = job;
    p.K_N = K_N;
    p.skip = skip;
    p.beta_threshold = beta;
    return p;
}

} // namespace

const std::vector<ChartPreset>& chart_presets()
{
    constexpr std::size_t n = 400;
    static const std::vector<ChartPreset> all = [] {
        const auto AL = Plane::AlphaLambda;
        const auto UV = Plane::RotatedUV;
        return std::vector<ChartPreset>{
            make_preset("fig6a", "top Lyapunov exponent, main chart", AL, {"alpha", 0.25, 0.85, n},
                        {"lambda", 0.55, 1.4, n}, CellJob::Lyapunov, 15, 1, 0.005),
            make_preset("fig6b", "kneading chart, main chart", AL, {"alpha", 0.25, 0.85, n}, {"lambda", 0.55, 1.4, n},
                        CellJob::Kneading, 15, 1, 0.005),
            make_preset("fig12a", "top Lyapunov exponent near A2", AL, {"alpha", 0.45, 0.65, n},
                        {"lambda", 0.55, 0.7, n}, CellJob::Lyapunov, 28, 1, 0.0006),
            make_preset("fig12b", "kneading chart near A2", AL, {"alpha", 0.45, 0.65, n}, {"lambda", 0.55, 0.7, n},
                        CellJob::Kneading, 28, 1, 0.0006),
            make_preset("fig14", "top Lyapunov exponent near A4^2 in (u, v)", UV, {"u", -0.012, 0.016, n},
                        {"v", -0.0016, 0.0006, n}, CellJob::Lyapunov, 40, 3, 0.00024),
            make_preset("fig16a", "top Lyapunov exponent near A8^2 in (u, v)", UV, {"u", -0.0045, 0.0005, n},
                        {"v", -0.00005, 0.00002, n}, CellJob::Lyapunov, 40, 3, 0.00005),
            make_preset("fig16b", "top Lyapunov exponent near A16^2 in (u, v)", UV, {"u", -0.004, -0.0025, n},
                        {"v", 0.000004, 0.000016, n}, CellJob::Lyapunov, 40, 3, 0.00002),
        };
    }();
    return all;
}

const ChartPreset& chart_preset(const std::string& id)
{
    for (const auto& p : chart_presets()) {
        if (p.id == id) {
            return p;
        }
    }
    throw DomainError("unknown chart preset '" + id + "'");
}

ScanSpec preset_spec(const ChartPreset& preset, std::size_t n)
{
    ScanSpec s;
    s.grid = preset.grid;
    if (n > 0) {
        s.grid.axis1.n = n;
        s.grid.axis2.n = n;
    }
    s.job.job = preset.job;
    s.job.K_N = preset.K_N;
    s.job.skip = preset.skip;
    s.job.beta_threshold = preset.beta_threshold;
    s.preset_id = preset.id;
    return s;
}

} // namespace smla
