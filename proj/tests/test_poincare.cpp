#include "doctest.h"

#include <sstream>

#include "gen.hpp"
#include "smla/poincare.hpp"

using namespace smla;

namespace {

SystemParams sm(double a, double l) { return SystemParams::shimizu_morioka(a, l); }

const SectionSpec kSigma = SectionSpec::plane_z(1.0, Direction::Upward);
const SectionSpec kYZero = SectionSpec::plane_y0(Direction::Both, SectionFilter::ZDotPositive);

OneDMapData synthetic(const std::vector<double>& xs)
{
    OneDMapData d;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d.pairs.push_back({xs[i], 0.0, i});
    }
    return d;
}

} // namespace

TEST_CASE("portrait on z = 1 at (0.4, 0.9)")
{
    const auto sp = section_portrait(sm(0.4, 0.9), SectionSpec::plane_z(1.0, Direction::Both), 2000);
    REQUIRE(sp.points.size() == 2000);
    CHECK_FALSE(sp.truncated());
    std::size_t up = 0, down = 0;
    for (const auto& q : sp.points) {
        CHECK(std::abs(q.point.z() - 1.0) < 1e-10);
        CHECK(q.u == q.point.x());
        CHECK(q.v == q.point.y());
        (q.dir > 0 ? up : down) += 1;
    }
    CHECK(up > 500);
    CHECK(down > 500);
    std::ostringstream os;
    write_portrait_csv(os, sp);
    CHECK(os.str().rfind("x,y,dir\n", 0) == 0);
}

TEST_CASE("portrait of the left separatrix is the mirror image")
{
    PoincareConfig c;
    const auto plus = section_portrait(sm(0.4, 0.9), SectionSpec::plane_z(1.0, Direction::Both), 300, c);
    c.branch = Branch::Minus;
    const auto minus = section_portrait(sm(0.4, 0.9), SectionSpec::plane_z(1.0, Direction::Both), 300, c);
    REQUIRE(plus.points.size() == minus.points.size());
    for (std::size_t i = 0; i < plus.points.size(); ++i) {
        CHECK(minus.points[i].u == doctest::Approx(-plus.points[i].u).epsilon(1e-9));
        CHECK(minus.points[i].v == doctest::Approx(-plus.points[i].v).epsilon(1e-9));
        CHECK(minus.points[i].dir == plus.points[i].dir);
    }
}

TEST_CASE("stable regime: finitely many crossings then capture")
{
    const auto sp = section_portrait(sm(0.4, 1.3), kYZero, 100000);
    CHECK(sp.end == FlowEnd::Captured);
    CHECK(sp.truncated());
    CHECK_THROWS_AS(section_portrait(sm(0.4, 0.9), kYZero, 0), DomainError);
}

TEST_CASE("y = 0 section points carry x and z")
{
    const auto sp = section_portrait(sm(0.61, 0.65), kYZero, 500);
    for (const auto& q : sp.points) {
        CHECK(std::abs(q.point.y()) < 1e-10);
        CHECK(vector_field(sm(0.61, 0.65), q.point).z() > 0.0);
        CHECK(q.u == q.point.x());
        CHECK(q.v == q.point.z());
    }
}

TEST_CASE("1D map at (0.4, 0.9) is one-dimensional")
{
    const auto d = one_d_map(sm(0.4, 0.9), kSigma, 1, Folding::AbsFold, 5000);
    REQUIRE(d.pairs.size() == 5000);
    for (const auto& q : d.pairs) {
        CHECK(q.xn > 0.0);
        CHECK(q.xim >= 0.0);
    }
    CHECK(fiber_spread(d) < 0.05);
    CHECK(component_count(d) == 1);
    CHECK_FALSE(detect_hook(d).hook);
    std::ostringstream os;
    write_map_csv(os, d);
    CHECK(os.str().rfind("xn,xim\n", 0) == 0);
}

TEST_CASE("1D map at (0.4, 0.76) has a hook")
{
    const auto d = one_d_map(sm(0.4, 0.76), kSigma, 1, Folding::AbsFold, 5000);
    const auto h = detect_hook(d);
    CHECK(h.hook);
    CHECK(h.depth > 0.02);
    CHECK(h.fiber_spread > 0.05);
}

TEST_CASE("stride 2 composes stride 1")
{
    MapFilter all;
    all.side = Side::Both;
    const auto s1 = one_d_map(sm(0.45, 0.85), kSigma, 1, Folding::None, 400, {}, all);
    const auto s2 = one_d_map(sm(0.45, 0.85), kSigma, 2, Folding::None, 399, {}, all);
    REQUIRE(s2.pairs.size() == 399);
    for (std::size_t k = 0; k < s2.pairs.size(); ++k) {
        CHECK(s1.pairs[k].index == k);
        CHECK(s2.pairs[k].index == k);
        CHECK(s2.pairs[k].xn == s1.pairs[k].xn);
        CHECK(s2.pairs[k].xim == s1.pairs[k + 1].xim);
    }
    CHECK_THROWS_AS(one_d_map(sm(0.45, 0.85), kSigma, 0, Folding::None, 10), DomainError);
}

TEST_CASE("filters select the side and window")
{
    MapFilter f;
    CHECK(f.accepts(0.3));
    CHECK_FALSE(f.accepts(-0.3));
    CHECK_FALSE(f.accepts(0.0));
    f.side = Side::Negative;
    CHECK(f.accepts(-0.3));
    f.side = Side::Both;
    f.x_lo = -0.1;
    f.x_hi = 0.2;
    CHECK(f.accepts(0.0));
    CHECK_FALSE(f.accepts(0.3));
    CHECK_FALSE(f.accepts(-0.3));
}

TEST_CASE("component count on synthetic data")
{
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(i / 999.0);
    CHECK(component_count(synthetic(xs)) == 1);

    // One gap of 3 gap_frac of the range splits the data.
    std::vector<double> gapped;
    for (int i = 0; i < 500; ++i) gapped.push_back(i * 0.4 / 499);
    for (int i = 0; i < 500; ++i) gapped.push_back(0.55 + i * 0.45 / 499);
    CHECK(component_count(synthetic(gapped)) == 2);

    CHECK_THROWS_AS(component_count(synthetic({0.0, 1.0})), DomainError);
}

TEST_CASE("component count ignores affine rescaling")
{
    gen::Source g(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs;
        const int clusters = g.integer(1, 4);
        for (int c = 0; c < clusters; ++c) {
            const double base = c * 1.0;
            for (int i = 0; i < 400; ++i) xs.push_back(base + g.uniform(0.0, 0.5));
        }
        const double a = g.uniform(0.01, 100.0) * (g.integer(0, 1) ? 1 : -1);
        const double b = g.uniform(-10, 10);
        std::vector<double> ys;
        for (double x : xs) ys.push_back(a * x + b);
        const auto n = component_count(synthetic(xs));
        CHECK(n == static_cast<std::size_t>(clusters));
        CHECK(component_count(synthetic(ys)) == n);
    }
}

TEST_CASE("trivial lacuna on alpha = 0.4")
{
    CHECK(component_count(one_d_map(sm(0.4, 1.08), kSigma, 1, Folding::AbsFold, 3000)) == 2);
    CHECK(component_count(one_d_map(sm(0.4, 0.95), kSigma, 1, Folding::AbsFold, 3000)) == 1);
}

TEST_CASE("lacunae in the outer cloud near the 2-round loop")
{
    MapFilter outer;
    outer.x_lo = 1.3;
    CHECK(component_count(one_d_map(sm(0.61, 0.65), kYZero, 2, Folding::AbsFold, 3000, {}, outer)) >= 2);
    CHECK(component_count(one_d_map(sm(0.5, 0.595), kYZero, 2, Folding::AbsFold, 3000, {}, outer)) == 1);
    CHECK(component_count(one_d_map(sm(0.508, 0.589), kYZero, 2, Folding::AbsFold, 3000, {}, outer)) >= 2);
}

TEST_CASE("hook detector on synthetic graphs")
{
    OneDMapData tent, hooked;
    for (int i = 0; i < 2000; ++i) {
        const double x = i / 1999.0;
        const double y = x < 0.5 ? x : 1.0 - x;
        tent.pairs.push_back({x, y, static_cast<std::size_t>(i)});
        hooked.pairs.push_back({x, x > 0.9 ? y + 2.0 * (x - 0.9) : y, static_cast<std::size_t>(i)});
    }
    CHECK_FALSE(detect_hook(tent).hook);
    CHECK(fiber_spread(tent) < 1e-9);
    const auto h = detect_hook(hooked);
    CHECK(h.hook);
    CHECK(h.x_at > 0.9);
}
