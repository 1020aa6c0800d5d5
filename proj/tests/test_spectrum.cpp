#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "renorm/error.hpp"
#include "renorm/spectrum.hpp"

using namespace renorm;

namespace {

const double kTwoPi = 2 * std::numbers::pi;
const double kGoldenStep = 1.0 / (theta_N(1) * theta_N(1));  // |G'(theta*)|

const SiegelMap& golden() {
    static const auto f = make_map(golden_cf(1, 60));
    return f;
}

const FixedPoint& fixed(int d) {
    static std::map<int, FixedPoint> cache;
    auto it = cache.find(d);
    if (it == cache.end())
        it = cache.emplace(d, locate_fixed_point(project_pair(mcm_renormalize(golden(), 10), d))).first;
    return it->second;
}

const SpectrumAnalysis& analysis(int d, double h) {
    static std::map<std::pair<int, double>, SpectrumAnalysis> cache;
    const auto key = std::make_pair(d, h);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto& c = fixed(d).c;
        it = cache.emplace(key, analyze_spectrum(c, h, multiplier_direction(c))).first;
    }
    return it->second;
}

Eigen::VectorXd realify(const Eigen::VectorXcd& v) {
    Eigen::VectorXd r(2 * v.size());
    r << v.real(), v.imag();
    return r;
}

}  // namespace

TEST_CASE("Chebyshev evaluation against cos(k arccos x)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k <= 12; ++k) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(13);
        e(k) = 1;
        for (int i = 0; i < 20; ++i) {
            const double u = u01(rng);
            const double x = 2 * u - 1;
            CHECK(std::abs(chebyshev_eval(e, 0.0, 1.0, u) - std::cos(k * std::acos(x))) < 1e-12);
            // same node on a rotated segment
            const cplx a(-0.2, 0.7), b = 0;
            CHECK(std::abs(chebyshev_eval(e, a, b, a + (b - a) * u) - std::cos(k * std::acos(x))) < 1e-12);
        }
    }
}

TEST_CASE("projector geometry and constraints") {
    for (int d : {4, 8, 12, 16}) {
        const auto p = make_projector(d);
        CHECK(p->M == 3 * (d + 1));
        CHECK(p->free_dim() == 2 * d - 1);
        CHECK(p->condition < 1e12);
        CHECK(p->UA.size() == static_cast<std::size_t>(p->M));
    }
    CHECK_THROWS_AS(make_projector(3), Error);

    // every coordinate vector satisfies A'(0) = 0, B(0) = 1, B'(0) = 0
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.1);
    const auto basis = make_projector(10);
    for (int trial = 0; trial < 20; ++trial) {
        CoefficientVector c;
        c.basis = basis;
        c.y.resize(basis->free_dim());
        for (auto& v : c.y) v = cplx(g(rng), g(rng));
        const auto P = c.as_pair();
        CHECK(std::abs(P.B(0.0) - 1.0) < 1e-13);
        // T_k'(1) = k^2, T_k'(-1) = (-1)^{k+1} k^2
        const Eigen::VectorXcd a = c.a(), b = c.b();
        cplx dA = 0, dB = 0;
        for (Eigen::Index k = 1; k < a.size(); ++k) {
            const double k2 = static_cast<double>(k * k);
            dA += a(k) * (k % 2 ? k2 : -k2);
            dB += b(k) * k2;
        }
        CHECK(std::abs(dA) < 1e-12);
        CHECK(std::abs(dB) < 1e-12);
    }
}

TEST_CASE("degree-d polynomial pairs are represented exactly") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int d : {6, 10, 14}) {
        const auto basis = make_projector(d);
        std::vector<cplx> a(d + 1), b(d + 1);
        for (int k = 2; k <= d; ++k) {
            a[k] = cplx(g(rng), g(rng)) / static_cast<double>(k);
            b[k] = cplx(g(rng), g(rng)) / static_cast<double>(k);
        }
        a[0] = cplx(-0.22, 0.7);
        b[0] = 1;
        auto horner = [](const std::vector<cplx>& c, cplx u) {
            cplx s = 0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * u + *it;
            return s;
        };
        const ComplexPair P{[&](cplx u) { return horner(a, u); }, [&](cplx u) { return horner(b, u); }};
        const auto c = project_pair(P, 0.3, basis);
        CHECK(c.residual < 1e-10);
        const auto Q = c.as_pair();
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const cplx u(u01(rng), 0.1 * (u01(rng) - 0.5));
            CHECK(std::abs(Q.A(u) - P.A(u)) < 1e-10);
            const cplx w = basis->lambda * u01(rng);
            CHECK(std::abs(Q.B(w) - P.B(w)) < 1e-10);
        }
    }
}

TEST_CASE("projection residual of the depth-10 golden pair") {
    const auto P = mcm_renormalize(golden(), 10);
    double prev = 1;
    for (int d : {6, 8, 10, 12}) {
        const auto c = project_pair(P, d);
        MESSAGE("d=" << d << " residual " << c.residual);
        CHECK(c.residual < prev);
        prev = c.residual;
    }
    // first-build calibration: 3.95e-6 at d = 12
    CHECK(prev < 5e-6);
    const auto c = project_pair(P, 12);
    CHECK(std::abs(c.rho - gauss_map(gauss_map(gauss_map(theta_N(1))))) < 1e-12);
}

TEST_CASE("projection is idempotent") {
    for (int d : {8, 12}) {
        const auto& c = fixed(d).c;
        const auto again = project_pair(c.as_pair(), c.rho, c.basis);
        CHECK((again.y - c.y).norm() < 1e-8);
        CHECK(again.residual < 1e-10);
        // renormalize once, or renormalize and re-project: same coordinates
        const auto r1 = renorm_in_coords(c);
        const auto r2 = project_pair(r1.as_pair(), r1.rho, r1.basis);
        CHECK((r1.y - r2.y).norm() < 1e-8);
    }
}

TEST_CASE("renormalization shifts the multiplier by the Gauss map") {
    const auto c = project_pair(mcm_renormalize(golden(), 8), 10);
    auto cur = c;
    for (int i = 0; i < 4; ++i) {
        const auto next = renorm_in_coords(cur);
        CHECK(std::abs(next.multiplier() - std::polar(1.0, kTwoPi * gauss_map(cur.rho))) < 1e-8);
        cur = next;
    }
}

TEST_CASE("renormalizing a pair of infinite height fails") {
    auto c = project_pair(mcm_renormalize(golden(), 8), 8);
    c.rho = 0;
    CHECK_THROWS_AS(renorm_in_coords(c), Error);
}

TEST_CASE("Newton locates the fixed point") {
    for (int d : {8, 12, 16}) {
        const auto& fp = fixed(d);
        MESSAGE("d=" << d << " steps " << fp.steps << " final residual " << fp.residuals.back());
        CHECK(fp.steps >= 1);
        for (std::size_t i = 1; i < fp.residuals.size(); ++i) CHECK(fp.residuals[i] < fp.residuals[i - 1]);
        const auto r = renorm_in_coords(fp.c);
        CHECK((r.y - fp.c.y).norm() == doctest::Approx(fp.residuals.back()).epsilon(1e-6));
    }
    CHECK(fixed(12).residuals.back() < 1e-6);
    CHECK(fixed(16).residuals.back() < 1e-6);
}

TEST_CASE("plain iteration from the depth-8 pair contracts over a window") {
    // calibrated: at d = 12 the residual falls for 8 steps, then truncation error takes over
    auto c = project_pair(mcm_renormalize(golden(), 8), 12);
    std::vector<double> res;
    for (int k = 0; k < 8; ++k) {
        const auto n = renorm_in_coords(c);
        res.push_back((n.y - c.y).norm());
        c = n;
    }
    for (std::size_t k = 3; k < res.size(); ++k) CHECK(res[k] < res[k - 1]);
    CHECK(res.back() < 0.1 * res.front());
}

TEST_CASE("Jacobian: Richardson, linearity and step stability") {
    const auto& c = fixed(12).c;
    const auto J1 = jacobian(c, 1e-5);
    const auto J2 = jacobian(c, 5e-6);
    CHECK(J1.richardson < 0.01);
    CHECK(J1.J.rows() == 2 * c.y.size());
    CHECK(J1.J.allFinite());
    const double n1 = J1.J.norm(), n2 = J2.J.norm();
    CHECK(std::abs(n1 / n2 - 1) < 0.1);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(J1.J.cols());
    for (auto& x : v) x = g(rng);
    for (double alpha : {-3.0, 0.5, 7.0}) CHECK((J1.J * (alpha * v) - alpha * (J1.J * v)).norm() < 1e-10 * (J1.J * v).norm() * std::abs(alpha) + 1e-12);

    // a directional difference agrees with the matrix action
    v.normalize();
    const double t = 1e-5;
    Eigen::VectorXcd dv(c.y.size());
    dv.real() = v.head(c.y.size());
    dv.imag() = v.tail(c.y.size());
    CoefficientVector p = c, m = c;
    p.y += t * dv;
    m.y -= t * dv;
    const Eigen::VectorXd dir = (realify(renorm_in_coords(p).y) - realify(renorm_in_coords(m).y)) / (2 * t);
    CHECK((dir - J1.J * v).norm() < 1e-6 * (1 + dir.norm()));

    CHECK_THROWS_AS(jacobian(c, 1e-2), Error);
    CHECK_THROWS_AS(jacobian(c, 1e-8), Error);
}

TEST_CASE("conjugate-linear part and con-eigenvalues") {
    // T(y) = P conj(y) realified; the con-eigenvalues of a diagonal P are |p_k|
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(3, 3);
    P(0, 0) = cplx(0, 2);
    P(1, 1) = cplx(0.3, 0.4);
    P(2, 2) = -0.1;
    Eigen::MatrixXd J(6, 6);
    for (int j = 0; j < 6; ++j) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(3);
        e(j % 3) = j < 3 ? cplx(1, 0) : cplx(0, 1);
        const Eigen::VectorXcd out = P * e.conjugate();
        J.col(j) = realify(out);
    }
    const auto T = conj_linear_part(J);
    CHECK(T.linear_part < 1e-14);
    CHECK((T.P - P).norm() < 1e-14);
    const auto r = eigen(T);
    REQUIRE(r.moduli.size() == 3);
    CHECK(r.moduli[0] == doctest::Approx(2.0));
    CHECK(r.moduli[1] == doctest::Approx(0.5));
    CHECK(r.moduli[2] == doctest::Approx(0.1));
    CHECK(r.unstable == 1);
    CHECK(r.gap == doctest::Approx(1.5));
    // leading con-eigenvector: P conj(x) = s x
    CHECK((P * r.leading.conjugate() - r.moduli[0] * r.leading).norm() < 1e-12);
}

TEST_CASE("spectrum at the fixed point") {
    for (int d : {8, 12, 16}) {
        for (double h : {1e-5, 5e-6}) {
            const auto& an = analysis(d, h);
            MESSAGE("d=" << d << " h=" << h << " leading " << an.restricted.moduli[0] << " next "
                         << an.restricted.moduli[1] << " pinned max " << an.pinned.moduli[0] << " overlap "
                         << an.overlap << " gain " << an.multiplier_gain);
            CHECK(conj_linear_part(an.jac.J).linear_part < 1e-6);
            for (std::size_t k = 1; k < an.restricted.moduli.size(); ++k)
                CHECK(an.restricted.moduli[k] <= an.restricted.moduli[k - 1]);
            CHECK(an.restricted.unstable == 1);
            CHECK(std::abs(an.restricted.moduli[0] / kGoldenStep - 1) < 0.05);
            CHECK(an.pinned.unstable == 0);
            CHECK(an.pinned.moduli[0] < 1);
            CHECK(std::abs(an.multiplier_gain / kGoldenStep - 1) < 0.05);
            CHECK(an.restricted.dimension == 2 * d - 4);
            CHECK(an.pinned.dimension == 2 * d - 5);
        }
    }
    // leading modulus stable across d and h
    double lo = 1e9, hi = 0;
    for (int d : {8, 12, 16})
        for (double h : {1e-5, 5e-6}) {
            lo = std::min(lo, analysis(d, h).restricted.moduli[0]);
            hi = std::max(hi, analysis(d, h).restricted.moduli[0]);
        }
    CHECK(hi / lo - 1 < 0.05);
}

TEST_CASE("moduli decay in the calibrated configuration") {
    // m_k < m_1 0.8^{k-3}, k >= 3; holds for the restricted spectrum at d = 8
    for (double h : {1e-5, 5e-6}) {
        const auto& m = analysis(8, h).restricted.moduli;
        for (std::size_t k = 3; k <= m.size(); ++k) CHECK(m[k - 1] < m[0] * std::pow(0.8, static_cast<double>(k) - 3));
    }
    for (int d : {8, 12, 16}) {
        const auto& m = analysis(d, 1e-5).restricted.moduli;
        CHECK(m.back() < 0.5);
    }
}
