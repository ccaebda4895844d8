#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "cli.hpp"

using namespace smla::cli;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result call(std::vector<std::string> args)
{
    args.insert(args.begin(), "smla");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    Result r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path tmp(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("smla_cli_" + name);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

// Data lines (no comments).
std::vector<std::string> rows(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) {
        if (!line.empty() && line[0] != '#') {
            out.push_back(line);
        }
    }
    return out;
}

std::string header_value(const std::string& text, const std::string& key)
{
    const auto pos = text.find("# " + key + "=");
    REQUIRE(pos != std::string::npos);
    const auto b = pos + key.size() + 3;
    return text.substr(b, text.find('\n', b) - b);
}

} // namespace

TEST_CASE("config text")
{
    std::istringstream is("# comment\nalpha = 0.4  # trailing\n\n  lambda=0.9\nname = a b\n");
    const auto kv = parse_config_text(is);
    REQUIRE(kv.size() == 3);
    CHECK(kv[0] == std::pair<std::string, std::string>{"alpha", "0.4"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"lambda", "0.9"});
    CHECK(kv[2].second == "a b");

    std::istringstream bad("alpha 0.4\n");
    CHECK_THROWS_AS(parse_config_text(bad), ConfigError);
    std::istringstream twice("a=1\na=2\n");
    CHECK_THROWS_AS(parse_config_text(twice), ConfigError);
    std::istringstream nokey(" = 3\n");
    CHECK_THROWS_AS(parse_config_text(nokey), ConfigError);
    CHECK(env_name("beta_threshold") == "SMLA_BETA_THRESHOLD");
    CHECK(env_name("a-b") == "SMLA_A_B");
}

TEST_CASE("run config hash")
{
    RunConfig a{"verdict", {{"alpha", "0.4", true}, {"out", "x", false}}};
    RunConfig b = a;
    b.entries[1].value = "y";
    CHECK(a.hash() == b.hash());
    b.entries[0].value = "0.5";
    CHECK(a.hash() != b.hash());
    b = a;
    b.subcommand = "spectrum";
    CHECK(a.hash() != b.hash());
    CHECK(a.header().rfind("# smla ", 0) == 0);
    CHECK(a.header().find("# out=") == std::string::npos);
}

TEST_CASE("verdict at the reference point")
{
    const auto r = call({"verdict", "--alpha", "0.4", "--lambda", "0.9"});
    REQUIRE(r.code == kExitOk);
    const auto data = rows(r.out);
    REQUIRE(data.size() == 2);
    CHECK(data[0] == "alpha,lambda,L1,L2,L3,beta_min,verdict,orientability");
    CHECK(data[1].find(",LorenzAttractor,") != std::string::npos);
    CHECK(r.err.empty());
}

TEST_CASE("model map curves")
{
    const auto r = call({"modelmap-curves", "--A", "0.63", "--nu", "0.8"});
    REQUIRE(r.code == kExitOk);
    const auto data = rows(r.out);
    REQUIRE(data.size() == 8);
    CHECK(data[0] == "kind,mu,A,nu");
    bool seen = false;
    for (const auto& line : data) {
        if (line.rfind("l2,", 0) == 0) {
            seen = true;
            CHECK(std::stod(line.substr(3)) == doctest::Approx(0.0992437).epsilon(1e-6));
        }
    }
    CHECK(seen);
    CHECK(call({"modelmap-curves", "--nu", "1.5"}).code == kExitConfig);
}

TEST_CASE("configuration errors exit 2 without output")
{
    const auto out = tmp("never.csv");
    std::filesystem::remove(out);
    auto r = call({"verdict", "--bogus", "1", "--out", out.string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.out.empty());
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(std::filesystem::exists(out));

    CHECK(call({"kneading", "--N", "abc"}).code == kExitConfig);
    CHECK(call({"map1d", "--folding", "sideways"}).code == kExitConfig);
    CHECK(call({"nosuchcommand"}).code == kExitConfig);
    CHECK(call({}).code == kExitConfig);
    CHECK(call({"kneading", "--config", tmp("missing.cfg").string()}).code == kExitConfig);

    const auto cfg = tmp("unknown.cfg");
    write(cfg, "alpha = 0.4\nfoo = 1\n");
    CHECK(call({"kneading", "--config", cfg.string()}).code == kExitConfig);
    write(cfg, "N = many\n");
    CHECK(call({"kneading", "--config", cfg.string()}).code == kExitConfig);
    std::filesystem::remove(cfg);

    // Invalid parameters.
    CHECK(call({"spectrum", "--alpha", "-1"}).code == kExitConfig);
    CHECK(call({"bisect-homoclinic", "--lambda_a", "1.3", "--lambda_b", "1.31"}).code == kExitConfig);
    CHECK(call({"chart", "--preset", "fig99"}).code == kExitConfig);
}

TEST_CASE("numeric failures exit 3")
{
    const auto r = call({"spectrum", "--alpha", "0.4", "--lambda", "-2", "--T", "100", "--transient", "0"});
    CHECK(r.code == kExitNumeric);
    CHECK(r.out.empty());
    CHECK(r.err.find("numeric failure") == 0);
}

TEST_CASE("help and version")
{
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"verdict", "--help"}).code == 0);
    const auto v = call({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(version()) != std::string::npos);
}

TEST_CASE("precedence: flag over environment over file")
{
    const auto cfg = tmp("prec.cfg");
    write(cfg, "alpha = 0.5\nlambda = 0.8\nN = 6\n");
    auto r = call({"kneading", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    CHECK(header_value(r.out, "alpha") == "0.5");
    CHECK(header_value(r.out, "N") == "6");

    ::setenv("SMLA_LAMBDA", "0.7", 1);
    ::setenv("SMLA_N", "7", 1);
    r = call({"kneading", "--config", cfg.string(), "--N", "5"});
    ::unsetenv("SMLA_LAMBDA");
    ::unsetenv("SMLA_N");
    REQUIRE(r.code == 0);
    CHECK(header_value(r.out, "lambda") == "0.69999999999999996");
    CHECK(header_value(r.out, "N") == "5");
    CHECK(rows(r.out)[1].substr(rows(r.out)[1].rfind(',') + 1).size() == 5);
    std::filesystem::remove(cfg);
}

TEST_CASE("equal configuration hash gives byte-equal files")
{
    const auto a = tmp("a.csv"), b = tmp("b.csv");
    const auto cfg = tmp("chart.cfg");
    write(cfg, "job = kneading\na1_n = 4\na2_n = 3\nK_N = 8\n");
    REQUIRE(call({"chart", "--config", cfg.string(), "--threads", "1", "--out", a.string()}).code == 0);
    REQUIRE(call({"chart", "--job", "kneading", "--a1_n", "4", "--a2_n", "3", "--K_N", "8", "--threads", "3",
                  "--batch", "2", "--out", b.string()})
                .code == 0);
    const std::string ta = slurp(a), tb = slurp(b);
    CHECK(header_value(ta, "config_hash") == header_value(tb, "config_hash"));
    CHECK(ta == tb);
    CHECK(rows(ta).size() == 13);
    CHECK(rows(ta)[0] == "axis1,axis2,value,status");

    REQUIRE(call({"chart", "--config", cfg.string(), "--seed", "9", "--out", b.string()}).code == 0);
    CHECK(header_value(slurp(b), "config_hash") != header_value(ta, "config_hash"));
    for (const auto& p : {a, b, cfg}) {
        std::filesystem::remove(p);
    }
}

TEST_CASE("chart resume through the command line")
{
    const auto ck = tmp("chart.ckpt");
    std::filesystem::remove(ck);
    const std::vector<std::string> base{"chart", "--job", "kneading", "--a1_n", "5", "--a2_n", "5", "--batch", "4"};
    const auto full = call(base);
    REQUIRE(full.code == 0);

    auto first = base;
    first.insert(first.end(), {"--checkpoint", ck.string(), "--stop_after", "9"});
    const auto part = call(first);
    REQUIRE(part.code == 0);
    CHECK(part.out.find("completed=9/25") != std::string::npos);
    CHECK(part.out.find(",pending\n") != std::string::npos);

    auto second = base;
    second.insert(second.end(), {"--checkpoint", ck.string(), "--resume"});
    const auto done = call(second);
    REQUIRE(done.code == 0);
    CHECK(done.out == full.out);
    std::filesystem::remove(ck);
}

TEST_CASE("chart presets fill unset keys")
{
    const auto r = call({"chart", "--preset", "fig14", "--n", "2", "--job", "kneading", "--stop_after", "1"});
    REQUIRE(r.code == 0);
    CHECK(header_value(r.out, "plane") == "uv");
    CHECK(header_value(r.out, "K_N") == "40");
    CHECK(header_value(r.out, "skip") == "3");
    CHECK(header_value(r.out, "a1_n") == "2");
    CHECK(header_value(r.out, "job") == "kneading");
    CHECK(header_value(r.out, "beta_threshold") == "0.00024000000000000001");
}

TEST_CASE("every subcommand runs")
{
    const std::vector<std::vector<std::string>> cmds{
        {"simulate", "--T", "5", "--dt", "0.5"},
        {"spectrum", "--T", "200", "--transient", "50"},
        {"clv", "--T", "20", "--transient_fwd", "50", "--transient_bwd", "50"},
        {"angles", "--T", "200", "--transient_fwd", "50", "--transient_bwd", "50", "--bins", "10"},
        {"continuity", "--T", "100", "--transient_fwd", "50", "--transient_bwd", "50", "--pair_budget", "1000"},
        {"verdict", "--T", "500", "--pair_budget", "1000"},
        {"kneading", "--N", "8"},
        {"bisect-homoclinic", "--tol", "1e-4"},
        {"portrait", "--n", "50", "--transient", "10"},
        {"map1d", "--n", "150", "--transient", "10"},
        {"modelmap-curves"},
        {"modelmap-chart", "--n_mu", "3", "--n_s", "2"},
        {"chart", "--a1_n", "2", "--a2_n", "1", "--job", "short_beta"},
        {"trace-a0", "--samples", "4", "--tol", "1e-3"},
    };
    for (const auto& c : cmds) {
        CAPTURE(c[0]);
        const auto r = call(c);
        CHECK(r.code == 0);
        CHECK(r.out.rfind("# smla " + std::string(version()) + " " + c[0] + "\n# config_hash=", 0) == 0);
        CHECK(rows(r.out).size() >= 2);
    }
}

TEST_CASE("trace-a0 on the alpha = 0.4 line")
{
    const auto r = call({"trace-a0", "--alpha_lo", "0.4", "--alpha_hi", "0.4", "--lines", "1"});
    REQUIRE(r.code == 0);
    const auto data = rows(r.out);
    REQUIRE(data.size() >= 2);
    for (std::size_t i = 1; i < data.size(); ++i) {
        const double lambda = std::stod(data[i].substr(data[i].find(',') + 1));
        CHECK(std::abs(lambda - 0.769) < 0.01);
    }
}
