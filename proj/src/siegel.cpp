#include "renorm/siegel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "renorm/error.hpp"

namespace renorm {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double frac(long double x) { return static_cast<double>(x - std::floor(x)); }

ContinuedFraction tail(const ContinuedFraction& cf, std::size_t k) {
    ContinuedFraction t;
    t.terms.assign(cf.terms.begin() + static_cast<std::ptrdiff_t>(std::min(k, cf.terms.size())),
                   cf.terms.end());
    t.infinite = cf.infinite;
    return t;
}

Convergents convergents_for(const SiegelMap& f, int n) {
    if (static_cast<int>(f.cf.terms.size()) < n)
        throw config_error("siegel", "rotation number has only " + std::to_string(f.cf.terms.size()) +
                                         " terms, level needs " + std::to_string(n));
    return convergents(f.cf, n);
}

bool segments_cross(cplx a, cplx b, cplx c, cplx d) {
    auto orient = [](cplx p, cplx q, cplx r) {
        const double v = (q.real() - p.real()) * (r.imag() - p.imag()) -
                         (q.imag() - p.imag()) * (r.real() - p.real());
        return (v > 0) - (v < 0);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

// Uniform-grid sweep for proper crossings between non-adjacent edges of a closed polyline.
bool polyline_self_intersects(const std::vector<cplx>& pts) {
    const std::size_t m = pts.size() - 1;
    if (m < 4) return false;
    double x0 = pts[0].real(), x1 = x0, y0 = pts[0].imag(), y1 = y0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.real());
        x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag());
        y1 = std::max(y1, p.imag());
    }
    const int G = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m))));
    const double wx = (x1 - x0) / G + 1e-300, wy = (y1 - y0) / G + 1e-300;
    std::vector<std::vector<std::uint32_t>> cells(static_cast<std::size_t>(G) * G);
    auto cell = [&](double v, double lo, double w) { return std::clamp(static_cast<int>((v - lo) / w), 0, G - 1); };
    for (std::size_t i = 0; i < m; ++i) {
        const auto a = pts[i], b = pts[i + 1];
        const int cx0 = cell(std::min(a.real(), b.real()), x0, wx), cx1 = cell(std::max(a.real(), b.real()), x0, wx);
        const int cy0 = cell(std::min(a.imag(), b.imag()), y0, wy), cy1 = cell(std::max(a.imag(), b.imag()), y0, wy);
        for (int cx = cx0; cx <= cx1; ++cx)
            for (int cy = cy0; cy <= cy1; ++cy) cells[static_cast<std::size_t>(cx) * G + cy].push_back(static_cast<std::uint32_t>(i));
    }
    for (const auto& c : cells) {
        for (std::size_t u = 0; u < c.size(); ++u) {
            for (std::size_t v = u + 1; v < c.size(); ++v) {
                const std::size_t i = c[u], j = c[v];
                const std::size_t gap = j > i ? j - i : i - j;
                if (gap <= 1 || gap == m - 1) continue;
                if (segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])) return true;
            }
        }
    }
    return false;
}

}  // namespace

cplx SiegelMap::iterate(cplx z, std::int64_t k) const {
    for (std::int64_t i = 0; i < k; ++i) {
        z = (*this)(z);
        if (!(std::norm(z) <= kEscape * kEscape)) return {kNaN, kNaN};
    }
    return z;
}

static void set_critical_point(SiegelMap& f) {
    if (f.eps == 0.0) {
        f.c = -f.mu / 2.0;
        return;
    }
    // roots of 3 eps z^2 + 2 z + mu in cancellation-free form
    const cplx disc = std::sqrt(1.0 - 3.0 * f.eps * f.mu);
    const cplx r1 = -f.mu / (1.0 + disc), r2 = -f.mu / (1.0 - disc);
    f.c = std::abs(r1 + f.mu / 2.0) <= std::abs(r2 + f.mu / 2.0) ? r1 : r2;
}

SiegelMap make_map(const ContinuedFraction& theta, cplx eps) {
    theta.validate();
    if (theta.terms.empty() || theta.infinite)
        throw config_error("siegel", "rotation number must be irrational");
    if (!(std::abs(eps) < 0.1)) throw config_error("siegel", "cubic coefficient |eps| must be below 0.1");
    SiegelMap f;
    f.cf = theta;
    f.theta = cf_value(theta);
    f.mu = std::polar(1.0, kTwoPi * f.theta);
    f.eps = eps;
    set_critical_point(f);
    return f;
}

SiegelMap make_map(double theta, cplx eps) {
    if (!(theta > 0 && theta < 1)) throw config_error("siegel", "rotation number must lie in (0, 1)");
    const auto cf = cf_from_real(theta, 40);
    if (cf.infinite && !cf.truncated) throw config_error("siegel", "rotation number must be irrational");
    auto f = make_map(ContinuedFraction{cf.terms}, eps);
    f.theta = theta;
    f.mu = std::polar(1.0, kTwoPi * theta);
    set_critical_point(f);
    return f;
}

SiegelMap rigid_model(const ContinuedFraction& theta) {
    auto f = make_map(theta, 0.0);
    f.a2 = 0;
    f.c = 1;
    return f;
}

std::vector<cplx> critical_orbit(const SiegelMap& f, std::int64_t n, std::int64_t budget) {
    if (n < 0) throw config_error("siegel", "orbit length must be nonnegative");
    if (n > budget) throw budget_error("siegel", "orbit of length " + std::to_string(n) + " exceeds budget " + std::to_string(budget));
    // |z| >= 3 escapes for the quadratic; the cubic term is small inside |z| < 10
    const double bound = f.eps == 0.0 ? 3.0 : 10.0;
    std::vector<cplx> orbit;
    orbit.reserve(static_cast<std::size_t>(n) + 1);
    cplx z = f.c;
    orbit.push_back(z);
    for (std::int64_t k = 1; k <= n; ++k) {
        z = f(z);
        if (!(std::abs(z) < bound))
            throw numerical_error("siegel", "critical orbit escapes at iterate " + std::to_string(k));
        orbit.push_back(z);
    }
    return orbit;
}

ClosestReturns closest_returns(const std::vector<cplx>& orbit) {
    ClosestReturns r;
    if (orbit.empty()) return r;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t < orbit.size(); ++t) {
        const double d = std::abs(orbit[t] - orbit[0]);
        if (d < best) {
            best = d;
            r.times.push_back(static_cast<std::int64_t>(t));
            r.distances.push_back(d);
        }
    }
    return r;
}

GeometricFit geometric_fit(const std::vector<int>& n, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(y[i] > 0)) continue;
        const double x = n[i], ly = std::log(y[i]);
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
        ++k;
    }
    if (k < 2) throw numerical_error("siegel", "geometric fit needs two positive values");
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / k;
    GeometricFit fit{std::exp(slope), std::exp(icpt), 0};
    for (std::size_t i = 0; i < n.size(); ++i)
        if (y[i] > 0) fit.residual = std::max(fit.residual, std::abs(std::log(y[i]) - icpt - slope * n[i]));
    return fit;
}

ScalingReport scaling_ratios(const SiegelMap& f, int levels, std::int64_t budget) {
    if (levels < 4) throw config_error("siegel", "scaling needs at least 4 levels");
    const auto cv = convergents_for(f, levels + 1);
    if (cv.q[levels + 1] > budget)
        throw budget_error("siegel", "q_" + std::to_string(levels + 1) + " exceeds the orbit budget");
    std::vector<cplx> w(levels + 2);
    cplx z = f.c;
    std::int64_t k = 0;
    for (int n = 1; n <= levels + 1; ++n) {
        z = f.iterate(z, cv.q[n] - k);
        k = cv.q[n];
        if (!std::isfinite(z.real())) throw numerical_error("siegel", "critical orbit escapes before q_" + std::to_string(n));
        w[n] = z - f.c;
    }
    ScalingReport r;
    for (int n = 1; n <= levels; ++n) {
        r.level.push_back(n);
        r.d.push_back(std::abs(w[n]));
        r.s.push_back(std::abs(w[n + 1]) / std::abs(w[n]));
        const cplx q = w[n + 1] / w[n];
        r.ratio.push_back(n % 2 ? std::conj(q) : q);
    }
    std::vector<int> idx;
    std::vector<double> ds, dr;
    for (int i = 2; i + 1 < levels; ++i) {
        idx.push_back(r.level[i]);
        ds.push_back(std::abs(r.s[i + 1] - r.s[i]));
        dr.push_back(std::abs(r.ratio[i + 1] - r.ratio[i]));
    }
    r.s_fit = geometric_fit(idx, ds);
    r.ratio_fit = geometric_fit(idx, dr);
    r.limit = r.s.back();
    return r;
}

BoundaryCurve boundary_curve(const SiegelMap& f, std::int64_t m) {
    if (m < 8) throw config_error("siegel", "boundary curve needs at least 8 points");
    return boundary_curve(f, critical_orbit(f, m - 1, std::max<std::int64_t>(m, 1000000)));
}

BoundaryCurve boundary_curve(const SiegelMap& f, const std::vector<cplx>& orbit) {
    const auto m = static_cast<std::int64_t>(orbit.size());
    if (m < 8) throw config_error("siegel", "boundary curve needs at least 8 points");
    std::vector<std::int64_t> order(static_cast<std::size_t>(m));
    std::vector<double> ang(static_cast<std::size_t>(m));
    for (std::int64_t k = 0; k < m; ++k) {
        order[k] = k;
        ang[k] = frac(static_cast<long double>(k) * static_cast<long double>(f.theta));
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ang[a] < ang[b]; });

    BoundaryCurve bc;
    bc.points.reserve(static_cast<std::size_t>(m) + 1);
    for (auto k : order) {
        bc.points.push_back(orbit[k]);
        bc.angle.push_back(ang[k]);
        bc.index.push_back(k);
    }
    bc.points.push_back(bc.points.front());
    bc.angle.push_back(bc.angle.front() + 1.0);
    bc.index.push_back(bc.index.front());
    for (std::size_t i = 0; i + 1 < bc.points.size(); ++i)
        bc.max_gap = std::max(bc.max_gap, std::abs(bc.points[i + 1] - bc.points[i]));

    // pairs at fixed angles: 256 starts, dyadic angular spans down to 2^-10
    const auto n = static_cast<std::size_t>(m);
    auto vertex = [&](double t) {
        t -= std::floor(t);
        auto it = std::lower_bound(bc.angle.begin(), bc.angle.begin() + static_cast<std::ptrdiff_t>(n), t);
        return static_cast<std::size_t>(it - bc.angle.begin()) % n;
    };
    auto arc_diam = [&](std::size_t i, std::size_t j) {
        const cplx a = bc.points[i], b = bc.points[j];
        double d = std::abs(a - b);
        for (std::size_t k = i; k != j; k = (k + 1) % n)
            d = std::max({d, std::abs(bc.points[k] - a), std::abs(bc.points[k] - b)});
        return d;
    };
    for (int s = 0; s < 256; ++s) {
        const double t = s / 256.0;
        for (int j = 1; j <= 10; ++j) {
            const std::size_t ia = vertex(t), ib = vertex(t + std::ldexp(1.0, -j));
            if (ia == ib) continue;
            const double dist = std::abs(bc.points[ia] - bc.points[ib]);
            const double diam = std::min(arc_diam(ia, ib), arc_diam(ib, ia));
            bc.turning = std::max(bc.turning, diam / dist);
        }
    }
    bc.self_intersecting = polyline_self_intersects(bc.points);
    return bc;
}

cplx RescaledPair::normalize(cplx z) const {
    const cplx u = (z - f.c) / s;
    return reflect ? std::conj(u) : u;
}

cplx RescaledPair::denormalize(cplx u) const { return f.c + s * (reflect ? std::conj(u) : u); }

ComplexPair RescaledPair::as_pair() const {
    const RescaledPair self = *this;
    return {[self](cplx u) { return self.A(u); }, [self](cplx u) { return self.B(u); }};
}

RescaledPair mcm_renormalize(const SiegelMap& f, int n, std::int64_t budget) {
    if (n < 1) throw config_error("siegel", "renormalization level must be at least 1");
    const auto cv = convergents_for(f, n + 1);
    if (cv.q[n + 1] > budget)
        throw budget_error("siegel", "q_" + std::to_string(n + 1) + " exceeds the iteration budget");
    RescaledPair P;
    P.f = f;
    P.n = n;
    P.qA = cv.q[n + 1];
    P.qB = cv.q[n];
    P.s = f.iterate(f.c, P.qB) - f.c;
    if (!std::isfinite(P.s.real()) || P.s == 0.0)
        throw numerical_error("siegel", "degenerate return at level " + std::to_string(n));
    P.reflect = n % 2 == 1;
    return P;
}

std::vector<cplx> ellipse_samples(cplx a, cplx b, int gridsize, double rho) {
    std::vector<cplx> u(static_cast<std::size_t>(gridsize));
    for (int k = 0; k < gridsize; ++k) {
        const cplx w = std::polar(rho, kTwoPi * (k + 0.5) / gridsize);
        const cplx X = (w + 1.0 / w) / 2.0;
        u[k] = a + (b - a) * (X + 1.0) / 2.0;
    }
    return u;
}

PairDistance pair_distance_report(const ComplexPair& P, const ComplexPair& Q, int gridsize, cplx lambda) {
    if (gridsize < 4) throw config_error("siegel", "gridsize must be at least 4");
    PairDistance r;
    auto scan = [&](const std::vector<cplx>& us, const std::function<cplx(cplx)>& f,
                    const std::function<cplx(cplx)>& g) {
        for (const auto& u : us) {
            ++r.samples;
            const double d = std::abs(f(u) - g(u));
            if (!std::isfinite(d)) {
                ++r.dropped;
                continue;
            }
            r.value = std::max(r.value, d);
        }
    };
    scan(ellipse_samples(0.0, 1.0, gridsize), P.A, Q.A);
    scan(ellipse_samples(lambda, 0.0, gridsize), P.B, Q.B);
    if (5 * r.dropped > r.samples)
        throw numerical_error("siegel", "pair evaluation failed at " + std::to_string(r.dropped) + " of " +
                                            std::to_string(r.samples) + " samples");
    return r;
}

double pair_distance(const ComplexPair& P, const ComplexPair& Q, int gridsize) {
    return pair_distance_report(P, Q, gridsize).value;
}

UniversalityReport universality_check(cplx eps, int depth, int gridsize) {
    const auto golden = golden_cf(1, 60);
    const auto f0 = make_map(golden, 0.0);
    const auto fe = make_map(golden, eps);
    UniversalityReport r;
    r.eps = eps;
    r.depth = depth;
    const auto cv = convergents(golden, depth + 2);
    const auto orbit = critical_orbit(fe, std::max<std::int64_t>(100000, cv.q[depth + 2]));
    for (const auto& z : orbit) r.orbit_max = std::max(r.orbit_max, std::abs(z));
    const auto P0 = mcm_renormalize(f0, depth).as_pair();
    const auto P1 = mcm_renormalize(f0, depth + 1).as_pair();
    const auto E0 = mcm_renormalize(fe, depth).as_pair();
    const auto E1 = mcm_renormalize(fe, depth + 1).as_pair();
    r.cross = pair_distance(P0, E0, gridsize);
    r.within = pair_distance(P0, P1, gridsize);
    r.within_eps = pair_distance(E0, E1, gridsize);
    r.pass = r.cross < r.within;
    return r;
}

GaussExpansion gauss_expansion(const ContinuedFraction& theta, int m, double h) {
    if (m < 1) throw config_error("siegel", "expansion depth must be at least 1");
    if (!(h > 0 && h <= 1e-6)) throw config_error("siegel", "step h must lie in (0, 1e-6]");
    if (static_cast<int>(theta.terms.size()) < m + 2 || theta.infinite)
        throw config_error("siegel", "rotation number needs more than m+1 terms");
    const auto cv = convergents(theta, m + 1);
    GaussExpansion g;
    g.m = m;
    // q_m theta - p_m = (-1)^m theta_1 ... theta_{m+1}, theta_k the k-th tail
    double prod = 1;
    for (int k = 0; k <= m; ++k) prod *= cf_value(tail(theta, static_cast<std::size_t>(k)));
    g.delta = (m % 2 ? -1.0 : 1.0) * prod;
    const double fr = g.delta > 0 ? g.delta : 1.0 + g.delta;
    g.Lambda = static_cast<double>(cv.q[m + 1]) / fr;
    const double x = cf_value(theta);
    g.scaled = g.Lambda * std::pow(x, 2 * (m + 1));

    auto Gm = [m](double t) {
        for (int i = 0; i < m; ++i) t = gauss_map(t);
        return t;
    };
    g.fd = std::abs(Gm(x + h) - Gm(x - h)) / (2 * h);
    g.product = 1;
    double t = x;
    for (int i = 0; i < m; ++i) {
        g.product /= t * t;
        t = gauss_map(t);
    }
    g.ratio = g.Lambda / g.fd;
    // each Gauss step rounds at relative 1e-16; the difference quotient divides that by h
    g.noise_limited = std::numeric_limits<double>::epsilon() / h > 1e-6;
    return g;
}

}  // namespace renorm
