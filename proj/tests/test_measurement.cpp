#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gnm/measurement.hpp"

using namespace gnm;

namespace {

/// Hexagonal lattice points within `radius` of the origin (origin included,
/// first element).
std::vector<Vec2> hex_lattice(double r, double radius) {
    std::vector<Vec2> pts{{0.0, 0.0}};
    const Vec2 a1{r, 0.0};
    const Vec2 a2{0.5 * r, 0.5 * std::sqrt(3.0) * r};
    const int span = static_cast<int>(radius / r) + 3;
    for (int n = -span; n <= span; ++n)
        for (int m = -span; m <= span; ++m) {
            if (n == 0 && m == 0) continue;
            const Vec2 p = a1 * n + a2 * m;
            if (p.norm() <= radius) pts.push_back(p);
        }
    return pts;
}

DensityConfig open_domain() {
    DensityConfig cfg;
    cfg.domain = AABB{{-100.0, -100.0}, {100.0, 100.0}};
    return cfg;
}

}  // namespace

TEST_CASE("Voronoi density: lattices") {
    SUBCASE("hexagonal lattice") {
        const double r = 0.4062;
        const std::vector<Vec2> pts = hex_lattice(r, 4.5);
        const double rho = local_density(0, pts, open_domain());
        const double want = 2.0 / (std::sqrt(3.0) * r * r);
        CHECK(std::fabs(rho - want) <= 1e-9 * want);
        CHECK(rho == doctest::Approx(7.0).epsilon(0.01));  // the reference density
    }
    SUBCASE("square lattice spacing 1 m") {
        std::vector<Vec2> pts{{0, 0}};
        for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j) {
                if (i == 0 && j == 0) continue;
                pts.push_back({static_cast<double>(i), static_cast<double>(j)});
            }
        CHECK(local_density(0, pts, open_domain()) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Voronoi density: sparse cells are capped at the 2 m disc") {
    const std::vector<Vec2> pts{{0.0, 0.0}};
    const double rho = local_density(0, pts, open_domain());
    CHECK(rho == 1.0 / (std::numbers::pi * 4.0));  // exact under the cap rule
}

TEST_CASE("Voronoi density: periodic corridor uses ghost images") {
    DensityConfig cfg;
    cfg.periodic_x = true;
    cfg.period = 10.0;
    cfg.domain = AABB{{0.0, 0.0}, {10.0, 4.0}};
    // single row of agents 1 m apart along the corridor: the cell is a
    // 1 m x 4 m strip (clipped by the corridor walls in y)
    std::vector<Vec2> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({0.5 + i, 2.0});
    const double rho = local_density(0, pts, cfg);
    CHECK(rho == doctest::Approx(1.0 / 4.0).epsilon(1e-9));
    // without ghosts the end-of-row cell would be much larger; with them
    // every agent in the ring sees the same cell
    const double rho_last = local_density(9, pts, cfg);
    CHECK(rho_last == doctest::Approx(rho).epsilon(1e-9));
}

TEST_CASE("disc-count density (degenerate-case fallback)") {
    DensityConfig cfg = open_domain();
    const std::vector<Vec2> pts{{0, 0}, {0.5, 0}, {0.9, 0}, {5.0, 0}};  // colinear
    // 3 agents within the 1 m disc around the first
    CHECK(local_density_disc(0, pts, cfg) ==
          doctest::Approx(3.0 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("flow rate: counting conventions") {
    SUBCASE("180 crossings spanning 90 s") {
        std::vector<double> ts;
        for (int i = 0; i < 180; ++i) ts.push_back(90.0 * i / 179.0);
        CHECK(flow_rate(ts) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("no crossings") { CHECK(flow_rate({}) == 0.0); }
    SUBCASE("uniform crossings, window-placement independent") {
        std::vector<double> ts;
        for (int i = 0; i < 200; ++i) ts.push_back(0.5 * i);
        CHECK(flow_rate(ts, {{10.0, 60.0}}) == doctest::Approx(2.0).epsilon(0.02));
        CHECK(flow_rate(ts, {{13.25, 63.25}}) == doctest::Approx(2.0).epsilon(0.02));
    }
    SUBCASE("invariant under time translation") {
        std::vector<double> ts{3.0, 4.5, 7.0, 9.5, 12.0};
        std::vector<double> shifted;
        for (const double t : ts) shifted.push_back(t + 1000.0);
        CHECK(flow_rate(shifted) == doctest::Approx(flow_rate(ts)).epsilon(1e-9));
    }
}

TEST_CASE("zero-phase filter: constants, impulse, ramps, exact reversal symmetry") {
    SUBCASE("constant series unchanged") {
        const std::vector<double> c(12, 3.7);
        for (const double v : zero_phase_filter(c)) CHECK(v == doctest::Approx(3.7).epsilon(1e-14));
    }
    SUBCASE("single impulse becomes a symmetric hump") {
        std::vector<double> x(21, 0.0);
        x[10] = 1.0;
        const std::vector<double> y = zero_phase_filter(x);
        CHECK(y[10] > y[9]);
        CHECK(y[10] > y[11]);
        for (int k = 1; k <= 8; ++k) CHECK(y[10 - k] == y[10 + k]);  // zero phase
    }
    SUBCASE("linear ramp unchanged away from the edges") {
        std::vector<double> x;
        for (int i = 0; i < 30; ++i) x.push_back(0.3 * i - 2.0);
        const std::vector<double> y = zero_phase_filter(x);
        for (int i = 4; i < 26; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-12));
    }
    SUBCASE("commutes with series reversal bit-exactly") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        std::vector<double> x;
        for (int i = 0; i < 37; ++i) x.push_back(u(rng));
        std::vector<double> xr(x.rbegin(), x.rend());
        const std::vector<double> a = zero_phase_filter(x);
        const std::vector<double> b = zero_phase_filter(xr);
        for (size_t i = 0; i < x.size(); ++i) CHECK(a[i] == b[x.size() - 1 - i]);
    }
    SUBCASE("series shorter than the width is rejected") {
        CHECK_THROWS_AS(zero_phase_filter(std::vector<double>(3, 1.0)), std::invalid_argument);
    }
}

TEST_CASE("speed statistics: normalization oracles") {
    SUBCASE("everyone at exactly 1.34 m/s") {
        const std::vector<double> v(50, 1.34);
        const SpeedStats st = speed_statistics(v);
        CHECK(st.mu_norm == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(st.sigma_norm == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("half stopped, half at 1.34: two-point moments") {
        std::vector<double> v;
        for (int i = 0; i < 40; ++i) v.push_back(i % 2 == 0 ? 0.0 : 1.34);
        const SpeedStats st = speed_statistics(v);
        CHECK(st.mu_norm == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(st.sigma_norm == doctest::Approx(0.67 / 0.26).epsilon(1e-12));
    }
}

TEST_CASE("lane detection") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> jitter(0.0, 0.1);

    SUBCASE("one tight band is one lane") {
        std::vector<double> ys;
        for (int i = 0; i < 60; ++i) ys.push_back(2.0 + jitter(rng));
        const LaneResult r = detect_lanes(ys, 0.0, 10.0);
        CHECK(!r.no_lanes);
        CHECK(r.count == 1);
    }
    SUBCASE("two clusters are two lanes") {
        std::vector<double> ys;
        for (int i = 0; i < 40; ++i) ys.push_back(2.0 + jitter(rng));
        for (int i = 0; i < 40; ++i) ys.push_back(8.0 + jitter(rng));
        const LaneResult r = detect_lanes(ys, 0.0, 10.0);
        CHECK(!r.no_lanes);
        CHECK(r.count == 2);
    }
    SUBCASE("uniform spread raises the no-lanes flag") {
        std::vector<double> ys;
        for (int i = 0; i < 400; ++i) ys.push_back(10.0 * (i + 0.5) / 400.0);
        const LaneResult r = detect_lanes(ys, 0.0, 10.0);
        CHECK(r.no_lanes);
    }
}

TEST_CASE("minimum pairwise distance") {
    SUBCASE("two agents 1 m apart") {
        const std::vector<Vec2> pts{{0, 0}, {1, 0}};
        CHECK(min_pairwise_distance(pts) == 1.0);
    }
    SUBCASE("hexagonal lattice minimum is the spacing") {
        const std::vector<Vec2> pts = hex_lattice(0.41, 2.0);
        CHECK(min_pairwise_distance(pts) == doctest::Approx(0.41).epsilon(1e-12));
    }
    SUBCASE("periodic seam uses the minimum image") {
        const std::vector<Vec2> pts{{0.1, 1.0}, {19.9, 1.0}};
        CHECK(min_pairwise_distance(pts, true, 20.0) == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("indexed variant equals brute force exactly") {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> ux(0.0, 30.0), uy(0.0, 8.0);
        for (int trial = 0; trial < 40; ++trial) {
            const bool periodic = trial % 2 == 1;
            std::vector<Vec2> pts;
            const int n = 2 + static_cast<int>(rng() % 150);
            for (int i = 0; i < n; ++i) pts.push_back({ux(rng), uy(rng)});
            const double brute = min_pairwise_distance(pts, periodic, 30.0);
            const double indexed = min_pairwise_distance_indexed(pts, 100.0, periodic, 30.0);
            CHECK(brute == indexed);
        }
    }
    SUBCASE("indexed variant reports +inf above its cutoff") {
        const std::vector<Vec2> pts{{0, 0}, {5, 5}};
        CHECK(std::isinf(min_pairwise_distance_indexed(pts, 1.0)));
    }
}
