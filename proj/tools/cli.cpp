#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "smla/chartscan.hpp"
#include "smla/integrate.hpp"
#include "smla/kneading.hpp"
#include "smla/lyap.hpp"
#include "smla/modelmap.hpp"
#include "smla/poincare.hpp"
#include "smla/pseudohyp.hpp"

#ifndef SMLA_VERSION
#define SMLA_VERSION "0.0.0"
#endif

namespace smla::cli {

std::string env_name(const std::string& key)
{
    std::string e = kEnvPrefix;
    for (char c : key) {
        e.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return e;
}

const char* version() { return SMLA_VERSION; }

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& is)
{
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    for (int no = 1; std::getline(is, line); ++no) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(no) + ": expected key = value");
        }
        if (std::any_of(kv.begin(), kv.end(), [&](const auto& p) { return p.first == key; })) {
            throw ConfigError("config line " + std::to_string(no) + ": repeated key '" + key + "'");
        }
        kv.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

std::uint64_t RunConfig::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    feed(subcommand + '\n');
    for (const auto& e : entries) {
        if (e.hashed) {
            feed(e.key + '=' + e.value + '\n');
        }
    }
    return h;
}

std::string RunConfig::header() const
{
    std::ostringstream os;
    os << "# smla " << version() << ' ' << subcommand << '\n';
    os << "# config_hash=" << hash_hex(hash()) << '\n';
    for (const auto& e : entries) {
        if (e.hashed) {
            os << "# " << e.key << '=' << e.value << '\n';
        }
    }
    return os.str();
}

namespace {

std::string show(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
std::string show(const std::string& s) { return s; }
std::string show(bool b) { return b ? "true" : "false"; }
template <class T>
    requires std::is_integral_v<T>
std::string show(T v)
{
    return std::to_string(v);
}

// Options of one subcommand, mirrored as resolved key=value entries.
class Registry {
public:
    explicit Registry(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& key, T& ref, const std::string& help, bool hashed = true)
    {
        auto* o = app_->add_option("--" + key, ref, help)->envname(env_name(key));
        entries_.push_back({key, [&ref] { return show(ref); }, hashed, o});
        return o;
    }

    CLI::Option* choice(const std::string& key, std::string& ref, const std::vector<std::string>& allowed,
                        const std::string& help, bool hashed = true)
    {
        return add(key, ref, help, hashed)->check(CLI::IsMember(allowed));
    }

    CLI::Option* flag(const std::string& key, bool& ref, const std::string& help, bool hashed = true)
    {
        auto* o = app_->add_flag("--" + key, ref, help)->envname(env_name(key));
        entries_.push_back({key, [&ref] { return show(ref); }, hashed, o});
        return o;
    }

    bool was_set(const std::string& key) const
    {
        for (const auto& e : entries_) {
            if (e.key == key) {
                return e.opt->count() > 0;
            }
        }
        return false;
    }

    // File values fill only keys the command line and environment left open.
    void apply_file(const std::vector<std::pair<std::string, std::string>>& kv)
    {
        for (const auto& [key, value] : kv) {
            auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
            if (it == entries_.end()) {
                throw ConfigError("unknown config key '" + key + "' for " + app_->get_name());
            }
            if (it->opt->count() == 0) {
                it->opt->add_result(value);
                it->opt->run_callback();
            }
        }
    }

    RunConfig resolve() const
    {
        RunConfig rc;
        rc.subcommand = app_->get_name();
        for (const auto& e : entries_) {
            rc.entries.push_back({e.key, e.show(), e.hashed});
        }
        return rc;
    }

    CLI::App* app() const { return app_; }

private:
    struct Entry {
        std::string key;
        std::function<std::string()> show;
        bool hashed = true;
        CLI::Option* opt = nullptr;
    };
    CLI::App* app_;
    std::vector<Entry> entries_;
};

struct SystemOpts {
    std::string system = "sm";
    double alpha = 0.4, lambda = 0.9, B = 0.0;
    double b = 8.0 / 3.0, sigma = 10.0, r = 28.0;
    double abs_tol = 1e-10, rel_tol = 1e-10;

    void add(Registry& reg)
    {
        reg.choice("system", system, {"sm", "esm", "lorenz"}, "vector field");
        reg.add("alpha", alpha, "alpha");
        reg.add("lambda", lambda, "lambda");
        reg.add("B", B, "cubic coefficient (esm)");
        reg.add("b", b, "Lorenz b");
        reg.add("sigma", sigma, "Lorenz sigma");
        reg.add("r", r, "Lorenz r");
        reg.add("abs_tol", abs_tol, "integrator absolute tolerance");
        reg.add("rel_tol", rel_tol, "integrator relative tolerance");
    }

    SystemParams params() const
    {
        SystemParams p = system == "esm"      ? SystemParams::extended_sm(alpha, lambda, B)
                         : system == "lorenz" ? SystemParams::lorenz(b, sigma, r)
                                              : SystemParams::shimizu_morioka(alpha, lambda);
        p.validate();
        return p;
    }

    IntegratorConfig integrator() const
    {
        IntegratorConfig c;
        c.abs_tol = abs_tol;
        c.rel_tol = rel_tol;
        c.validate();
        return c;
    }
};

Branch branch_of(const std::string& s) { return s == "minus" ? Branch::Minus : Branch::Plus; }

Direction direction_of(const std::string& s)
{
    return s == "up" ? Direction::Upward : s == "down" ? Direction::Downward : Direction::Both;
}

SectionSpec section_of(const std::string& kind, double level, const std::string& dir)
{
    if (kind == "y0") {
        return SectionSpec::plane_y0(Direction::Both, SectionFilter::ZDotPositive);
    }
    return SectionSpec::plane_z(level, direction_of(dir));
}

SubspacePair pair_of(const std::string& s) { return s == "u_cs" ? SubspacePair::UVsCs : SubspacePair::SsVsCu; }

Subspace subspace_of(const std::string& s)
{
    return s == "ecu" ? Subspace::Ecu : s == "eu" ? Subspace::Eu : s == "ecs" ? Subspace::Ecs : Subspace::Ess;
}

// One subcommand: registers its keys, then produces the output body.
struct Command {
    Registry reg;
    std::string out;
    std::string config;
    std::function<void(std::ostream&)> body;
};

class Tool {
public:
    Tool(CLI::App& app, const std::atomic<bool>* interrupt) : app_(app), interrupt_(interrupt) { build(); }

    Command* selected()
    {
        for (auto& [name, cmd] : cmds_) {
            if (cmd->reg.app()->parsed()) {
                return cmd.get();
            }
        }
        return nullptr;
    }

    // Settings the chart preset decides unless given explicitly.
    void resolve_chart();

private:
    Command& add(const std::string& name, const std::string& help)
    {
        auto* sub = app_.add_subcommand(name, help);
        auto cmd = std::make_unique<Command>(Command{Registry(sub), {}, {}, {}});
        sub->add_option("--out", cmd->out, "output file (default stdout)");
        sub->add_option("--config", cmd->config, "flat key = value file");
        auto& ref = *cmd;
        cmds_[name] = std::move(cmd);
        return ref;
    }

    void build();

    CLI::App& app_;
    const std::atomic<bool>* interrupt_;
    std::map<std::string, std::unique_ptr<Command>> cmds_;

    SystemOpts sys_;
    std::string branch_ = "plus";
    double eps_ = 1e-6;

    // simulate
    double sim_T_ = 100.0, sim_dt_ = 0.01;
    std::string sim_start_ = "separatrix";
    double x0_ = 0.1, y0_ = 0.0, z0_ = 0.0;

    // spectrum / clv / angles / continuity / verdict
    double ly_T_ = 1e4, ly_renorm_ = 0.5, ly_transient_ = 1e3;
    double clv_T_ = 1e3, clv_renorm_ = 0.5, clv_tf_ = 1e3, clv_tb_ = 1e3;
    std::size_t clv_stride_ = 1;
    double an_T_ = 1e4;
    std::string an_pair_ = "ss_cu";
    std::size_t an_bins_ = 90;
    double co_T_ = 1e4;
    std::string co_sub_ = "ess";
    std::size_t co_budget_ = 100000;
    std::uint64_t seed_ = 1;
    double vd_T_ = VerdictConfig::default_clv().T;
    double vd_beta_ = 0.005, vd_chaos_ = 0.005;
    std::size_t vd_budget_ = 500000;

    // kneading / bisect
    std::size_t kn_N_ = 15, kn_skip_ = 0;
    double kn_tmax_ = 1e4;
    double ha_alpha_ = 0.4, ha_lambda_ = 1.19, hb_alpha_ = 0.4, hb_lambda_ = 1.22;
    std::size_t h_index_ = 1;
    double h_tol_ = 1e-8;

    // portrait / map1d
    std::string sec_ = "z", sec_dir_ = "both";
    double sec_level_ = 1.0;
    std::size_t pt_n_ = 2000, pt_transient_ = 100;
    double pt_tmax_ = 1e6;
    std::string mp_sec_ = "z", mp_dir_ = "up", mp_fold_ = "abs", mp_side_ = "positive";
    double mp_level_ = 1.0, mp_xlo_ = -1e300, mp_xhi_ = 1e300;
    std::size_t mp_stride_ = 1, mp_n_ = 2000, mp_transient_ = 100;

    // model map
    double mm_A_ = 0.63, mm_nu_ = 0.8;
    RegimeChartSpec rc_;
    std::string rc_axis_ = "nu";

    // chart
    std::string ch_preset_, ch_job_ = "lyapunov", ch_plane_ = "alpha_lambda";
    std::size_t ch_n_ = 0;
    double ch_a1_lo_ = 0.3, ch_a1_hi_ = 0.7, ch_a2_lo_ = 0.7, ch_a2_hi_ = 1.1;
    std::size_t ch_a1_n_ = 10, ch_a2_n_ = 10;
    std::size_t ch_KN_ = 15, ch_skip_ = 1;
    double ch_beta_ = 0.005, ch_lyT_ = JobConfig::default_lyapunov().T, ch_timeout_ = 30.0;
    std::size_t ch_threads_ = 0, ch_batch_ = 32, ch_stop_after_ = 0;
    std::string ch_checkpoint_;
    bool ch_resume_ = false;

    // trace-a0
    double tr_alo_ = 0.4, tr_ahi_ = 0.4, tr_llo_ = 0.7, tr_lhi_ = 0.9, tr_beta_ = 0.005, tr_tol_ = 1e-5;
    bool tr_all_ = false;
    std::size_t tr_lines_ = 1, tr_samples_ = 25;
};

void Tool::build()
{
    {
        auto& c = add("simulate", "integrate a trajectory");
        sys_.add(c.reg);
        c.reg.add("T", sim_T_, "time span");
        c.reg.add("dt", sim_dt_, "sampling step (0: every accepted step)");
        c.reg.choice("start", sim_start_, {"separatrix", "point"}, "initial condition");
        c.reg.add("x0", x0_, "x(0) for start=point");
        c.reg.add("y0", y0_, "y(0) for start=point");
        c.reg.add("z0", z0_, "z(0) for start=point");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.reg.choice("branch", branch_, {"plus", "minus"}, "separatrix branch");
        c.body = [this](std::ostream& os) {
            const auto p = sys_.params();
            const State s0 =
                sim_start_ == "point" ? State(x0_, y0_, z0_) : separatrix_seed(p, branch_of(branch_), eps_);
            const auto tr = integrate(p, s0, sys_.integrator(), sim_T_, sim_dt_);
            write_trajectory_csv(os, tr);
            if (tr.status != IntegrationStatus::Completed) {
                os << "# status=" << to_string(tr.status) << '\n';
            }
        };
    }
    {
        auto& c = add("spectrum", "Lyapunov spectrum along the separatrix");
        sys_.add(c.reg);
        c.reg.add("T", ly_T_, "averaging time");
        c.reg.add("renorm", ly_renorm_, "renormalization interval");
        c.reg.add("transient", ly_transient_, "discarded time");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.body = [this](std::ostream& os) {
            const auto p = sys_.params();
            LyapunovConfig cfg;
            cfg.T = ly_T_;
            cfg.renorm_interval = ly_renorm_;
            cfg.transient = ly_transient_;
            cfg.integrator = sys_.integrator();
            write_spectrum_csv(os, p, lyapunov_spectrum(p, separatrix_seed(p, Branch::Plus, eps_), cfg));
        };
    }
    auto clv_cfg = [this](double T) {
        ClvConfig cfg;
        cfg.T = T;
        cfg.renorm_interval = clv_renorm_;
        cfg.transient_fwd = clv_tf_;
        cfg.transient_bwd = clv_tb_;
        cfg.frame_stride = clv_stride_;
        cfg.integrator = sys_.integrator();
        return cfg;
    };
    auto add_clv_keys = [this](Registry& reg) {
        reg.add("renorm", clv_renorm_, "renormalization interval");
        reg.add("transient_fwd", clv_tf_, "forward transient");
        reg.add("transient_bwd", clv_tb_, "backward transient");
        reg.add("stride", clv_stride_, "frame stride");
        reg.add("eps", eps_, "separatrix seed offset");
    };
    {
        auto& c = add("clv", "covariant Lyapunov vectors along the separatrix");
        sys_.add(c.reg);
        c.reg.add("T", clv_T_, "window length");
        add_clv_keys(c.reg);
        c.body = [this, clv_cfg](std::ostream& os) {
            const auto p = sys_.params();
            write_clv_csv(os, covariant_vectors(p, separatrix_seed(p, Branch::Plus, eps_), clv_cfg(clv_T_)));
        };
    }
    {
        auto& c = add("angles", "histogram of subspace angles");
        sys_.add(c.reg);
        c.reg.add("T", an_T_, "window length");
        add_clv_keys(c.reg);
        c.reg.choice("pair", an_pair_, {"ss_cu", "u_cs"}, "subspace pair");
        c.reg.add("bins", an_bins_, "histogram bins");
        c.body = [this, clv_cfg](std::ostream& os) {
            const auto p = sys_.params();
            const auto frames = covariant_vectors(p, separatrix_seed(p, Branch::Plus, eps_), clv_cfg(an_T_));
            const auto st = angle_statistics(frames, pair_of(an_pair_), an_bins_);
            write_histogram_csv(os, st);
            os << std::setprecision(17) << "# beta_min=" << st.beta_min << " sign_changes=" << st.sign_changes
               << '\n';
        };
    }
    {
        auto& c = add("continuity", "continuity diagram of a subspace");
        sys_.add(c.reg);
        c.reg.add("T", co_T_, "window length");
        add_clv_keys(c.reg);
        c.reg.choice("subspace", co_sub_, {"ess", "ecu", "eu", "ecs"}, "subspace");
        c.reg.add("pair_budget", co_budget_, "maximum number of pairs");
        c.reg.add("seed", seed_, "seed of the pair sampler");
        c.body = [this, clv_cfg](std::ostream& os) {
            const auto p = sys_.params();
            const auto frames = covariant_vectors(p, separatrix_seed(p, Branch::Plus, eps_), clv_cfg(co_T_));
            const auto cloud = continuity_diagram(frames, subspace_of(co_sub_), co_budget_, seed_);
            write_cloud_csv(os, cloud);
            os << "# orientability=" << to_string(classify_orientability(cloud)) << '\n';
        };
    }
    {
        auto& c = add("verdict", "pseudohyperbolicity verdict");
        sys_.add(c.reg);
        c.reg.add("T", vd_T_, "CLV window length");
        c.reg.add("beta_threshold", vd_beta_, "tangency threshold beta*");
        c.reg.add("chaos_threshold", vd_chaos_, "minimal Lambda1 counted as chaos");
        c.reg.add("pair_budget", vd_budget_, "continuity pairs");
        c.reg.add("seed", seed_, "seed of the pair sampler");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.body = [this](std::ostream& os) {
            VerdictConfig cfg;
            cfg.clv.T = vd_T_;
            cfg.clv.integrator = sys_.integrator();
            cfg.beta_threshold = vd_beta_;
            cfg.chaos_threshold = vd_chaos_;
            cfg.pair_budget = vd_budget_;
            cfg.seed = seed_;
            cfg.seed_eps = eps_;
            const auto v = verdict(sys_.params(), cfg);
            write_verdict_csv(os, v);
            if (!v.diagnostic.empty()) {
                os << "# diagnostic=" << v.diagnostic << '\n';
            }
        };
    }
    auto kn_cfg = [this] {
        KneadingConfig cfg;
        cfg.N = kn_N_;
        cfg.skip = kn_skip_;
        cfg.eps = eps_;
        cfg.branch = branch_of(branch_);
        cfg.t_max = kn_tmax_;
        cfg.integrator = sys_.integrator();
        return cfg;
    };
    {
        auto& c = add("kneading", "kneading sequence of the separatrix");
        sys_.add(c.reg);
        c.reg.add("N", kn_N_, "retained symbols");
        c.reg.add("skip", kn_skip_, "dropped leading symbols");
        c.reg.add("t_max", kn_tmax_, "integration time limit");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.reg.choice("branch", branch_, {"plus", "minus"}, "separatrix branch");
        c.body = [this, kn_cfg](std::ostream& os) {
            const auto seq = kneading_sequence(sys_.params(), kn_cfg());
            write_kneading_line(os, seq, true);
            os << "# termination=" << to_string(seq.termination) << '\n';
        };
    }
    {
        auto& c = add("bisect-homoclinic", "bisect a symbol change between two parameter points");
        c.reg.add("alpha_a", ha_alpha_, "alpha at the first end");
        c.reg.add("lambda_a", ha_lambda_, "lambda at the first end");
        c.reg.add("alpha_b", hb_alpha_, "alpha at the second end");
        c.reg.add("lambda_b", hb_lambda_, "lambda at the second end");
        c.reg.add("index", h_index_, "retained symbol index");
        c.reg.add("tol", h_tol_, "bracket length");
        c.reg.add("skip", kn_skip_, "dropped leading symbols");
        c.reg.add("t_max", kn_tmax_, "integration time limit");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.reg.add("abs_tol", sys_.abs_tol, "integrator absolute tolerance");
        c.reg.add("rel_tol", sys_.rel_tol, "integrator relative tolerance");
        c.body = [this, kn_cfg](std::ostream& os) {
            const auto a = SystemParams::shimizu_morioka(ha_alpha_, ha_lambda_);
            const auto b = SystemParams::shimizu_morioka(hb_alpha_, hb_lambda_);
            a.validate();
            b.validate();
            const auto h = homoclinic_bisect(a, b, h_index_, h_tol_, kn_cfg());
            os << "alpha,lambda,width,iterations,symbols_lo,symbols_hi\n" << std::setprecision(17);
            os << h.params.alpha << ',' << h.params.lambda << ',' << param_distance(h.lo, h.hi) << ','
               << h.iterations << ',' << h.seq_lo.symbols << ',' << h.seq_hi.symbols << '\n';
            if (!h.diagnostic.empty()) {
                os << "# diagnostic=" << h.diagnostic << '\n';
            }
        };
    }
    {
        auto& c = add("portrait", "separatrix crossings of a section");
        sys_.add(c.reg);
        c.reg.choice("section", sec_, {"z", "y0"}, "z = level plane or y = 0 with dz/dt > 0");
        c.reg.add("level", sec_level_, "z level");
        c.reg.choice("direction", sec_dir_, {"both", "up", "down"}, "crossing direction (z plane)");
        c.reg.add("n", pt_n_, "crossings to record");
        c.reg.add("transient", pt_transient_, "crossings skipped first");
        c.reg.add("t_max", pt_tmax_, "integration time limit");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.body = [this](std::ostream& os) {
            PoincareConfig cfg;
            cfg.transient_events = pt_transient_;
            cfg.t_max = pt_tmax_;
            cfg.eps = eps_;
            cfg.integrator = sys_.integrator();
            const auto sp = section_portrait(sys_.params(), section_of(sec_, sec_level_, sec_dir_), pt_n_, cfg);
            write_portrait_csv(os, sp);
            os << "# end=" << to_string(sp.end) << " points=" << sp.points.size() << '\n';
        };
    }
    {
        auto& c = add("map1d", "one-dimensional return map of the first section coordinate");
        sys_.add(c.reg);
        c.reg.choice("section", mp_sec_, {"z", "y0"}, "z = level plane or y = 0 with dz/dt > 0");
        c.reg.add("level", mp_level_, "z level");
        c.reg.choice("direction", mp_dir_, {"both", "up", "down"}, "crossing direction (z plane)");
        c.reg.add("stride", mp_stride_, "crossings between x_n and its image");
        c.reg.choice("folding", mp_fold_, {"abs", "none"}, "fold the image by |.|");
        c.reg.choice("side", mp_side_, {"positive", "negative", "both"}, "sign of accepted x_n");
        c.reg.add("x_lo", mp_xlo_, "smallest accepted x_n");
        c.reg.add("x_hi", mp_xhi_, "largest accepted x_n");
        c.reg.add("n", mp_n_, "pairs to collect");
        c.reg.add("transient", mp_transient_, "crossings skipped first");
        c.reg.add("eps", eps_, "separatrix seed offset");
        c.body = [this](std::ostream& os) {
            PoincareConfig cfg;
            cfg.transient_events = mp_transient_;
            cfg.eps = eps_;
            cfg.integrator = sys_.integrator();
            MapFilter f;
            f.side = mp_side_ == "negative" ? Side::Negative : mp_side_ == "both" ? Side::Both : Side::Positive;
            f.x_lo = mp_xlo_;
            f.x_hi = mp_xhi_;
            const auto d = one_d_map(sys_.params(), section_of(mp_sec_, mp_level_, mp_dir_), mp_stride_,
                                     mp_fold_ == "none" ? Folding::None : Folding::AbsFold, mp_n_, cfg, f);
            write_map_csv(os, d);
            os << std::setprecision(17) << "# end=" << to_string(d.end) << " pairs=" << d.pairs.size();
            if (d.pairs.size() >= 100) {
                const auto hook = detect_hook(d);
                os << " components=" << component_count(d) << " fiber_spread=" << hook.fiber_spread
                   << " hook=" << show(hook.hook) << " hook_depth=" << hook.depth;
            }
            os << '\n';
        };
    }
    {
        auto& c = add("modelmap-curves", "bifurcation curves of the model map at one (A, nu)");
        c.reg.add("A", mm_A_, "separatrix value A");
        c.reg.add("nu", mm_nu_, "saddle index nu");
        c.body = [this](std::ostream& os) {
            std::vector<CurvePoint> pts;
            for (auto k : {ModelCurve::L1, ModelCurve::L2, ModelCurve::L1LA}) {
                const double mu = analytic_curve(k, mm_A_, mm_nu_);
                pts.push_back({k, {mu, mm_A_, mm_nu_}, 0.0});
            }
            for (auto k : {ModelCurve::L2LA, ModelCurve::LSN, ModelCurve::LPD, ModelCurve::LLac}) {
                pts.push_back(solve_curve(k, mm_A_, mm_nu_));
            }
            write_curve_csv(os, pts);
        };
    }
    {
        auto& c = add("modelmap-chart", "regime chart of the model map");
        c.reg.add("mu_lo", rc_.mu_lo, "smallest mu");
        c.reg.add("mu_hi", rc_.mu_hi, "largest mu");
        c.reg.add("n_mu", rc_.n_mu, "mu samples");
        c.reg.choice("axis", rc_axis_, {"nu", "A"}, "second axis");
        c.reg.add("s_lo", rc_.s_lo, "second axis lower end");
        c.reg.add("s_hi", rc_.s_hi, "second axis upper end");
        c.reg.add("n_s", rc_.n_s, "second axis samples");
        c.reg.add("fixed", rc_.fixed, "the other of A / nu");
        c.reg.add("n_transient", rc_.n_transient, "discarded iterations");
        c.reg.add("n_probe", rc_.n_probe, "iterations tested for a cycle");
        c.body = [this](std::ostream& os) {
            rc_.axis = rc_axis_ == "A" ? ChartAxis::A : ChartAxis::Nu;
            write_regime_csv(os, regime_chart(rc_));
        };
    }
    {
        auto& c = add("chart", "parameter chart scan (worker pool, checkpointed)");
        auto& r = c.reg;
        r.add("preset", ch_preset_, "figure preset (fig6a, fig6b, fig12a, fig12b, fig14, fig16a, fig16b)");
        r.add("n", ch_n_, "down-sample a preset to n x n (0: full)");
        r.choice("job", ch_job_, {"lyapunov", "kneading", "verdict", "short_beta"}, "cell job");
        r.choice("plane", ch_plane_, {"alpha_lambda", "uv"}, "parameter plane");
        r.add("a1_lo", ch_a1_lo_, "axis 1 lower end (alpha or u)");
        r.add("a1_hi", ch_a1_hi_, "axis 1 upper end");
        r.add("a1_n", ch_a1_n_, "axis 1 cells");
        r.add("a2_lo", ch_a2_lo_, "axis 2 lower end (lambda or v)");
        r.add("a2_hi", ch_a2_hi_, "axis 2 upper end");
        r.add("a2_n", ch_a2_n_, "axis 2 cells");
        r.add("K_N", ch_KN_, "kneading symbols per cell");
        r.add("skip", ch_skip_, "dropped leading symbols");
        r.add("beta_threshold", ch_beta_, "tangency threshold beta*");
        r.add("lyap_T", ch_lyT_, "Lyapunov averaging time per cell");
        r.add("cell_timeout", ch_timeout_, "seconds per cell (<= 0: none)");
        r.add("seed", seed_, "global seed");
        r.add("stop_after", ch_stop_after_, "stop after this many new cells (0: all)");
        r.add("threads", ch_threads_, "worker threads (0: all cores)", false);
        r.add("batch", ch_batch_, "cells per checkpoint batch", false);
        r.add("checkpoint", ch_checkpoint_, "checkpoint file", false);
        r.flag("resume", ch_resume_, "continue from the checkpoint", false);
        c.body = [this](std::ostream& os) {
            ScanSpec spec;
            spec.grid.plane = ch_plane_ == "uv" ? Plane::RotatedUV : Plane::AlphaLambda;
            const bool uv = spec.grid.plane == Plane::RotatedUV;
            spec.grid.axis1 = {uv ? "u" : "alpha", ch_a1_lo_, ch_a1_hi_, ch_a1_n_};
            spec.grid.axis2 = {uv ? "v" : "lambda", ch_a2_lo_, ch_a2_hi_, ch_a2_n_};
            spec.job.job = cell_job_from_string(ch_job_);
            spec.job.K_N = ch_KN_;
            spec.job.skip = ch_skip_;
            spec.job.beta_threshold = ch_beta_;
            spec.job.verdict.beta_threshold = ch_beta_;
            spec.job.lyapunov.T = ch_lyT_;
            spec.job.cell_timeout = ch_timeout_;
            spec.preset_id = ch_preset_;
            spec.seed = seed_;
            spec.threads = ch_threads_;
            spec.batch = ch_batch_;
            ScanControl ctl;
            ctl.checkpoint = ch_checkpoint_;
            ctl.resume = ch_resume_;
            ctl.stop_after = ch_stop_after_;
            ctl.interrupt = interrupt_;
            const auto g = scan(spec, ctl);
            os << "# scan_hash=" << hash_hex(g.hash) << " completed=" << g.completed() << '/' << g.cells.size()
               << '\n';
            write_grid_csv(os, g);
        };
    }
    {
        auto& c = add("trace-a0", "trace the tangency curve l_{A=0}");
        c.reg.add("alpha_lo", tr_alo_, "first alpha line");
        c.reg.add("alpha_hi", tr_ahi_, "last alpha line");
        c.reg.add("lines", tr_lines_, "alpha lines");
        c.reg.add("lambda_lo", tr_llo_, "lambda range lower end");
        c.reg.add("lambda_hi", tr_lhi_, "lambda range upper end");
        c.reg.add("samples", tr_samples_, "coarse samples per line");
        c.reg.add("beta_threshold", tr_beta_, "tangency threshold beta*");
        c.reg.add("tol", tr_tol_, "bisection tolerance in lambda");
        c.reg.flag("all_crossings", tr_all_, "report every crossing, not only the uppermost dip");
        c.reg.add("abs_tol", sys_.abs_tol, "integrator absolute tolerance");
        c.reg.add("rel_tol", sys_.rel_tol, "integrator relative tolerance");
        c.body = [this](std::ostream& os) {
            TangencyTraceConfig cfg;
            cfg.a_lo = tr_alo_;
            cfg.a_hi = tr_ahi_;
            cfg.b_lo = tr_llo_;
            cfg.b_hi = tr_lhi_;
            cfg.axis = 1;
            cfg.lines = tr_lines_;
            cfg.samples = tr_samples_;
            cfg.beta_threshold = tr_beta_;
            cfg.tol = tr_tol_;
            cfg.upper_dip_only = !tr_all_;
            cfg.segment.integrator = sys_.integrator();
            const auto tr = trace_tangency_curve(
                [](double a, double b) { return SystemParams::shimizu_morioka(a, b); }, cfg);
            os << "alpha,lambda,beta,beta_spread\n" << std::setprecision(17);
            for (const auto& p : tr.points) {
                os << p.a << ',' << p.b << ',' << p.beta << ',' << p.beta_spread << '\n';
            }
            for (const auto& n : tr.notes) {
                os << "# note: " << n << '\n';
            }
        };
    }
}

void Tool::resolve_chart()
{
    auto it = cmds_.find("chart");
    if (it == cmds_.end() || !it->second->reg.app()->parsed() || ch_preset_.empty()) {
        return;
    }
    const Registry& r = it->second->reg;
    const ScanSpec s = preset_spec(chart_preset(ch_preset_), ch_n_);
    auto keep = [&](const char* key, auto& field, const auto& value) {
        if (!r.was_set(key)) {
            field = value;
        }
    };
    keep("job", ch_job_, std::string(to_string(s.job.job)));
    keep("plane", ch_plane_, std::string(s.grid.plane == Plane::RotatedUV ? "uv" : "alpha_lambda"));
    keep("a1_lo", ch_a1_lo_, s.grid.axis1.lo);
    keep("a1_hi", ch_a1_hi_, s.grid.axis1.hi);
    keep("a1_n", ch_a1_n_, s.grid.axis1.n);
    keep("a2_lo", ch_a2_lo_, s.grid.axis2.lo);
    keep("a2_hi", ch_a2_hi_, s.grid.axis2.hi);
    keep("a2_n", ch_a2_n_, s.grid.axis2.n);
    keep("K_N", ch_KN_, s.job.K_N);
    keep("skip", ch_skip_, s.job.skip);
    keep("beta_threshold", ch_beta_, s.job.beta_threshold);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::atomic<bool>* interrupt)
{
    CLI::App app{"smla: Shimizu-Morioka / Lorenz attractor toolkit"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", version());
    Tool tool(app, interrupt);
    Command* cmd = nullptr;
    try {
        app.parse(argc, argv);
        cmd = tool.selected();
        if (cmd == nullptr) {
            throw ConfigError("no subcommand");
        }
        if (!cmd->config.empty()) {
            std::ifstream f(cmd->config);
            if (!f) {
                throw ConfigError("cannot read config file " + cmd->config);
            }
            cmd->reg.apply_file(parse_config_text(f));
        }
        tool.resolve_chart();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::ostringstream body;
    try {
        cmd->body(body);
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IntegrationError& e) {
        err << "numeric failure: " << e.what() << " (" << to_string(e.status()) << ")\n";
        return kExitNumeric;
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }

    const std::string text = cmd->reg.resolve().header() + body.str();
    if (cmd->out.empty() || cmd->out == "-") {
        out << text;
        return kExitOk;
    }
    std::ofstream f(cmd->out, std::ios::binary | std::ios::trunc);
    if (!(f << text) || !f.flush()) {
        err << "config error: cannot write " << cmd->out << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

} // namespace smla::cli
