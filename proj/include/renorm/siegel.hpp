#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "renorm/cfrac.hpp"

namespace renorm {

using cplx = std::complex<double>;

// z -> mu z + a2 z^2 + eps z^3 with mu = e^{2 pi i theta}.
struct SiegelMap {
    double theta = 0;
    ContinuedFraction cf;
    cplx mu;
    cplx a2 = 1;
    cplx eps = 0;
    cplx c;  // critical point (reference point for the rigid model)

    cplx operator()(cplx z) const { return z * (mu + z * (a2 + eps * z)); }
    cplx derivative(cplx z) const { return mu + z * (2.0 * a2 + 3.0 * eps * z); }
    // k-fold iterate; NaN once the orbit leaves |z| <= kEscape.
    cplx iterate(cplx z, std::int64_t k) const;

    static constexpr double kEscape = 1e6;
};

SiegelMap make_map(const ContinuedFraction& theta, cplx eps = 0);
SiegelMap make_map(double theta, cplx eps = 0);

// z -> e^{2 pi i theta} z with reference point 1.
SiegelMap rigid_model(const ContinuedFraction& theta);

// z_0 = c, ..., z_n.
std::vector<cplx> critical_orbit(const SiegelMap& f, std::int64_t n,
                                 std::int64_t budget = 1000000);

struct ClosestReturns {
    std::vector<std::int64_t> times;
    std::vector<double> distances;
};

// Times t >= 1 at which |z_t - z_0| reaches a new minimum.
ClosestReturns closest_returns(const std::vector<cplx>& orbit);

struct GeometricFit {
    double rate = 0;      // r in y_n ~ A r^n
    double amplitude = 0;
    double residual = 0;  // max |log y_n - fit| over the fitted points
};

GeometricFit geometric_fit(const std::vector<int>& n, const std::vector<double>& y);

struct ScalingReport {
    std::vector<int> level;          // n = 1..levels
    std::vector<double> d;           // |f^{q_n}(c) - c|
    std::vector<double> s;           // d_{n+1} / d_n
    std::vector<cplx> ratio;         // (f^{q_{n+1}}(c) - c)/(f^{q_n}(c) - c), conjugated at odd n
    GeometricFit s_fit;              // fit of |s_{n+1} - s_n|
    GeometricFit ratio_fit;          // fit of |ratio_{n+1} - ratio_n|
    double limit = 0;                // last s_n
};

ScalingReport scaling_ratios(const SiegelMap& f, int levels, std::int64_t budget = 1000000);

struct BoundaryCurve {
    std::vector<cplx> points;   // closed: points.front() == points.back()
    std::vector<double> angle;  // k theta mod 1 of each vertex
    std::vector<std::int64_t> index;  // orbit index k of each vertex
    double turning = 0;         // bounded-turning estimate K
    double max_gap = 0;         // longest edge
    bool self_intersecting = false;
};

BoundaryCurve boundary_curve(const SiegelMap& f, std::int64_t m);
// From a precomputed critical orbit z_0 .. z_{m-1}.
BoundaryCurve boundary_curve(const SiegelMap& f, const std::vector<cplx>& orbit);

// Two complex maps in normalized coordinates: A on the arc [0, 1], B on [lambda, 0].
struct ComplexPair {
    std::function<cplx(cplx)> A;
    std::function<cplx(cplx)> B;
};

// McMullen pair at level n: A = f^{q_{n+1}}, B = f^{q_n}, conjugated by u -> (z - c)/s,
// s = f^{q_n}(c) - c, followed by complex conjugation at odd n.
struct RescaledPair {
    SiegelMap f;
    int n = 0;
    std::int64_t qA = 0;
    std::int64_t qB = 0;
    cplx s;
    bool reflect = false;

    cplx normalize(cplx z) const;
    cplx denormalize(cplx u) const;
    cplx A(cplx u) const { return normalize(f.iterate(denormalize(u), qA)); }
    cplx B(cplx u) const { return normalize(f.iterate(denormalize(u), qB)); }
    cplx lambda() const { return A(0.0); }
    ComplexPair as_pair() const;
};

RescaledPair mcm_renormalize(const SiegelMap& f, int n, std::int64_t budget = 1000000);

// Fixed segment for the B-component of pairs near the limit.
inline const cplx kLambdaRef{-0.2203, 0.7085};
inline constexpr double kEllipseRho = 1.05;

// gridsize points on the Bernstein ellipse of parameter rho around [a, b].
std::vector<cplx> ellipse_samples(cplx a, cplx b, int gridsize, double rho = kEllipseRho);

struct PairDistance {
    double value = 0;
    int dropped = 0;
    int samples = 0;
};

PairDistance pair_distance_report(const ComplexPair& P, const ComplexPair& Q, int gridsize = 64,
                                  cplx lambda = kLambdaRef);
double pair_distance(const ComplexPair& P, const ComplexPair& Q, int gridsize = 64);

struct UniversalityReport {
    cplx eps;
    int depth = 0;
    double cross = 0;         // d(R^depth f_0, R^depth f_eps)
    double within = 0;        // d(R^depth f_0, R^{depth+1} f_0)
    double within_eps = 0;    // same for the perturbed family
    double orbit_max = 0;     // sup |f_eps^k(c)| over the checked orbit
    bool pass = false;
};

UniversalityReport universality_check(cplx eps, int depth, int gridsize = 64);

struct GaussExpansion {
    int m = 0;
    double Lambda = 0;        // q_{m+1} / frac(q_m theta)
    double delta = 0;         // q_m theta - p_m
    double scaled = 0;        // Lambda * theta^{2(m+1)}
    double fd = 0;            // |d/dtheta G^m| by central differences
    double product = 0;       // prod |G'(G^k theta)|, k < m
    double ratio = 0;         // Lambda / fd
    bool noise_limited = false;
};

GaussExpansion gauss_expansion(const ContinuedFraction& theta, int m, double h = 1e-7);

}  // namespace renorm
