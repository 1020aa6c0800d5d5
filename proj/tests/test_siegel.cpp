#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "renorm/error.hpp"
#include "renorm/siegel.hpp"

using namespace renorm;

namespace {

const auto kGoldenCf = golden_cf(1, 60);
const double kTwoPi = 2 * std::numbers::pi;

// distinct convergent denominators q_0 = 1, q_1, ... up to limit
std::vector<std::int64_t> denominators(int N, std::int64_t limit) {
    std::set<std::int64_t> out{1};
    std::int64_t a = 1, b = N;  // q_0, q_1
    while (b <= limit) {
        out.insert(b);
        const auto next = N * b + a;
        a = b;
        b = next;
    }
    return {out.begin(), out.end()};
}

cplx direct(const SiegelMap& f, cplx z, std::int64_t k) {
    for (std::int64_t i = 0; i < k; ++i) z = f.mu * z + f.a2 * z * z + f.eps * z * z * z;
    return z;
}

}  // namespace

TEST_CASE("quadratic map normalization and critical point") {
    const auto f = make_map(kGoldenCf);
    CHECK(f(0.0) == 0.0);
    CHECK(std::abs(f.derivative(0.0) - std::polar(1.0, kTwoPi * theta_N(1))) < 1e-14);
    CHECK(f.c == -f.mu / 2.0);
    CHECK(std::abs(f.derivative(f.c)) < 1e-14);
    CHECK(std::abs(f(f.c) - (f.mu * f.c + f.c * f.c)) < 1e-15);

    const auto g = make_map(kGoldenCf, 0.05);
    CHECK(std::abs(g.derivative(g.c)) < 1e-12);
    CHECK(std::abs(g.c + g.mu / 2.0) < 0.1);
    // Newton oracle on f' from -mu/2
    cplx z = -g.mu / 2.0;
    for (int i = 0; i < 50; ++i) z -= g.derivative(z) / (2.0 + 6.0 * g.eps * z);
    CHECK(std::abs(z - g.c) < 1e-13);

    CHECK_THROWS_AS(make_map(kGoldenCf, 0.2), Error);
    CHECK_THROWS_AS(make_map(0.0), Error);
    CHECK_THROWS_AS(make_map(ContinuedFraction{{2, 3}, true}), Error);
    CHECK_THROWS_AS(make_map(0.5), Error);
}

TEST_CASE("critical orbit stays on a bounded curve away from 0") {
    const auto f = make_map(kGoldenCf);
    const auto orbit = critical_orbit(f, 100000);
    REQUIRE(orbit.size() == 100001);
    double sup = 0, inf = 1e9;
    for (const auto& z : orbit) {
        sup = std::max(sup, std::abs(z));
        inf = std::min(inf, std::abs(z));
    }
    CHECK(sup < 2);
    CHECK(inf > 0.01);
    // the stored orbit matches plain iteration
    CHECK(std::abs(orbit[1000] - direct(f, f.c, 1000)) < 1e-12);
    CHECK_THROWS_AS(critical_orbit(f, 10, 5), Error);

    auto g = f;
    g.c = 2.0;
    CHECK_THROWS_AS(critical_orbit(g, 100), Error);
}

TEST_CASE("closest returns are the convergent denominators") {
    for (int N : {1, 2, 3}) {
        const auto f = make_map(golden_cf(N, 40));
        const auto r = closest_returns(critical_orbit(f, 1000000));
        CHECK(r.times == denominators(N, 1000000));
        for (std::size_t i = 1; i < r.distances.size(); ++i) CHECK(r.distances[i] < r.distances[i - 1]);
    }
    const auto rigid = rigid_model(kGoldenCf);
    std::vector<cplx> orbit{1.0};
    for (int k = 1; k <= 5000; ++k) orbit.push_back(rigid(orbit.back()));
    const auto r = closest_returns(orbit);
    CHECK(r.times == denominators(1, 5000));
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        const double expect = std::abs(std::polar(1.0, kTwoPi * theta_N(1) * static_cast<double>(r.times[i])) - 1.0);
        CHECK(std::abs(r.distances[i] - expect) < 1e-9);
    }
}

TEST_CASE("geometric fit") {
    std::vector<int> n{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (int k : n) y.push_back(3.0 * std::pow(0.5, k));
    const auto fit = geometric_fit(n, y);
    CHECK(fit.rate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.amplitude == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
}

TEST_CASE("scaling ratios") {
    const auto rigid = scaling_ratios(rigid_model(kGoldenCf), 14);
    CHECK(std::abs(rigid.s.back() - theta_N(1)) < 1e-4);
    for (std::size_t i = 1; i < rigid.d.size(); ++i) CHECK(rigid.d[i] < rigid.d[i - 1]);

    const auto r = scaling_ratios(make_map(kGoldenCf), 16);
    REQUIRE(r.s.size() == 16);
    for (std::size_t i = 1; i < r.d.size(); ++i) CHECK(r.d[i] < r.d[i - 1]);
    CHECK(r.s_fit.rate > 0);
    CHECK(r.s_fit.rate < 1);
    CHECK(r.ratio_fit.rate < 1);
    // s_n for n = 12..16 within 1e-3 of each other
    for (int n = 12; n <= 16; ++n) CHECK(std::abs(r.s[n - 1] - r.s[15]) < 1e-3);
    // normalized complex ratios converge to the fixed segment endpoint
    CHECK(std::abs(r.ratio.back() - kLambdaRef) < 2e-3);
    CHECK_THROWS_AS(scaling_ratios(make_map(kGoldenCf), 3), Error);
}

TEST_CASE("boundary polyline") {
    const auto f = make_map(kGoldenCf);
    const auto b = boundary_curve(f, 10000);
    REQUIRE(b.points.size() == 10001);
    CHECK(b.points.front() == b.points.back());
    // circular order by k theta
    for (std::size_t i = 1; i < b.angle.size(); ++i) CHECK(b.angle[i] > b.angle[i - 1]);
    CHECK(b.index.front() == 0);
    CHECK(b.points.front() == f.c);
    CHECK(b.turning >= 1.0);
    CHECK(std::isfinite(b.turning));
    CHECK(!b.self_intersecting);
    // a bounded region: the winding number of 0 is one
    double wind = 0;
    for (std::size_t i = 0; i + 1 < b.points.size(); ++i) wind += std::arg(b.points[i + 1] / b.points[i]);
    CHECK(std::abs(wind / kTwoPi) == doctest::Approx(1.0));
}

TEST_CASE("McMullen pairs of the rigid model") {
    const auto f = rigid_model(kGoldenCf);
    for (int n = 2; n <= 12; ++n) {
        const auto P = mcm_renormalize(f, n);
        CHECK(std::abs(P.normalize(f.c)) < 1e-14);
        CHECK(std::abs(P.normalize(f.iterate(f.c, P.qB)) - 1.0) < 1e-14);
        const double arcA = std::abs(std::arg(f.iterate(f.c, P.qB)));
        const double arcB = std::abs(std::arg(f.iterate(f.c, P.qA)));
        CHECK(std::abs(arcB / arcA - theta_N(1)) < 1e-10);
        CHECK(std::abs(std::abs(P.lambda()) - theta_N(1)) < 0.1 * arcA);
        // rigid rotation in normalized coordinates: an isometry
        const cplx u(0.3, 0.1);
        CHECK(std::abs(std::abs(P.A(u) - P.A(0.0)) - std::abs(u)) < 1e-9);
    }
}

TEST_CASE("McMullen pairs of the golden quadratic") {
    const auto f = make_map(kGoldenCf);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-0.2, 1.2);
    for (int n : {4, 6, 9}) {
        const auto P = mcm_renormalize(f, n);
        CHECK(P.normalize(f.c) == 0.0);
        CHECK(std::abs(P.normalize(f.iterate(f.c, P.qB)) - 1.0) < 1e-14);
        // components are conjugated iterates
        for (int i = 0; i < 100; ++i) {
            const cplx u(U(rng), 0.2 * U(rng));
            const cplx z = P.denormalize(u);
            CHECK(std::abs(P.A(u) - P.normalize(direct(f, z, P.qA))) < 1e-10);
        }
        // A(0) is the far endpoint of the B-arc: in the upper half plane, left of 0
        const cplx l = P.lambda();
        CHECK(l.imag() > 0);
        CHECK(l.real() < 0);
        CHECK(std::abs(P.B(0.0) - 1.0) < 1e-12);
    }
    const auto P = mcm_renormalize(f, 6);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        const cplx u = std::polar(0.05, kTwoPi * i / 20.0);
        worst = std::max(worst, std::abs(P.A(P.B(u)) - P.B(P.A(u))));
    }
    CHECK(worst < 1e-8);
    CHECK_THROWS_AS(mcm_renormalize(f, 30, 1000), Error);
}

TEST_CASE("pair distance") {
    const auto f = make_map(kGoldenCf);
    const auto P = mcm_renormalize(f, 7).as_pair();
    const auto Q = mcm_renormalize(f, 8).as_pair();
    CHECK(pair_distance(P, P) == 0.0);
    CHECK(pair_distance(P, Q) == pair_distance(Q, P));
    const ComplexPair shifted{[&](cplx u) { return P.A(u) + 1e-3; }, P.B};
    CHECK(pair_distance(P, shifted) == doctest::Approx(1e-3).epsilon(1e-9));

    const ComplexPair broken{[](cplx u) { return u.real() > 0.9 ? cplx(NAN, NAN) : u; }, P.B};
    const auto rep = pair_distance_report(P, broken, 64);
    CHECK(rep.dropped > 0);
    CHECK(rep.dropped * 5 <= rep.samples);
    const ComplexPair dead{[](cplx) { return cplx(NAN, NAN); }, [](cplx) { return cplx(NAN, NAN); }};
    CHECK_THROWS_AS(pair_distance(P, dead), Error);

    std::vector<int> ns;
    std::vector<double> ds;
    for (int n = 4; n <= 12; ++n) {
        ns.push_back(n);
        ds.push_back(pair_distance(mcm_renormalize(f, n).as_pair(), mcm_renormalize(f, n + 1).as_pair()));
    }
    const auto fit = geometric_fit(ns, ds);
    CHECK(fit.rate < 1);
    CHECK(fit.residual < 0.1);
}

TEST_CASE("universality of the limit pair") {
    const auto zero = universality_check(0.0, 8);
    CHECK(zero.cross == 0.0);
    double prev = 1e9;
    for (int depth : {6, 8, 10}) {
        const auto u = universality_check(0.02, depth);
        CHECK(u.cross < prev);
        prev = u.cross;
        CHECK(u.orbit_max < 2);
        if (depth == 10) {
            CHECK(u.cross < 1e-2);
            CHECK(u.pass);
        }
        CHECK(u.pass == universality_check(0.02, depth, 128).pass);
    }
}

TEST_CASE("Gauss expansion") {
    const auto one = gauss_expansion(kGoldenCf, 1, 1e-7);
    CHECK(std::abs(one.fd - 2.618034) < 1e-4);
    CHECK(std::abs(one.product - 2.618034) < 1e-6);
    for (int m = 1; m <= 12; ++m) {
        const auto g = gauss_expansion(kGoldenCf, m, 1e-8);
        CHECK(g.Lambda > 1);
        CHECK(g.fd == doctest::Approx(std::pow(theta_N(1), -2 * m)).epsilon(1e-4));
        CHECK(!g.noise_limited);
        // exact q_m theta - p_m = (-1)^m theta^{m+1}
        CHECK(std::abs(g.delta - std::pow(-1.0, m) * std::pow(theta_N(1), m + 1)) < 1e-15);
    }
    CHECK(gauss_expansion(kGoldenCf, 3, 1e-12).noise_limited);
    CHECK_THROWS_AS(gauss_expansion(kGoldenCf, 3, 1e-3), Error);
    CHECK_THROWS_AS(gauss_expansion(golden_cf(1, 4), 5), Error);
}
