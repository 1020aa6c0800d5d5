#include "renorm/area.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "renorm/error.hpp"
#include "renorm/siegel.hpp"

namespace renorm {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double segment_distance(cplx p, cplx a, cplx b) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    double t = len2 > 0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

cplx disk_point(std::uint64_t seed, std::uint64_t i, double R) {
    const double r = R * std::sqrt(uniform01(seed, i, 0));
    return std::polar(r, kTwoPi * uniform01(seed, i, 1));
}

void check_samples(std::int64_t samples) {
    if (samples < 10000) throw config_error("area", "at least 1e4 samples are required");
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t index, int lane) {
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ (2 * index + static_cast<std::uint64_t>(lane)));
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

bool EscapeClassifier::operator()(cplx z) const {
    double x = z.real(), y = z.imag();
    const double mr = mu.real(), mi = mu.imag(), R2 = R * R;
    if (x * x + y * y > R2) return false;
    for (std::int64_t i = 0; i < maxiter; ++i) {
        const double nx = mr * x - mi * y + x * x - y * y;
        const double ny = mr * y + mi * x + 2 * x * y;
        x = nx;
        y = ny;
        if (x * x + y * y > R2) return false;
    }
    return true;
}

EscapeClassifier make_classifier(double theta, std::int64_t maxiter, double R) {
    if (maxiter < 1) throw config_error("area", "maxiter must be positive");
    // |z| > R >= 3 gives |f(z)| >= |z|(|z| - 1) >= 2|z|
    if (R < 3) throw config_error("area", "escape radius must be at least 3");
    EscapeClassifier cl;
    cl.theta = theta;
    cl.mu = std::polar(1.0, kTwoPi * theta);
    cl.maxiter = maxiter;
    cl.R = R;
    return cl;
}

double theta_j(const std::vector<std::int64_t>& prefix, std::int64_t N, int j) {
    ContinuedFraction cf{prefix, true};
    for (int i = 0; i < j; ++i) cf.terms.push_back(N);
    return cf_value(cf);
}

std::vector<AreaEstimate> area_differences(double theta_inf, const std::vector<double>& thetas,
                                           std::int64_t samples, std::uint64_t seed, std::int64_t maxiter) {
    check_samples(samples);
    const auto inf = make_classifier(theta_inf, maxiter);
    std::vector<EscapeClassifier> cls;
    for (double t : thetas) cls.push_back(make_classifier(t, maxiter));
    std::vector<std::int64_t> hits(thetas.size(), 0);
    for (std::int64_t i = 0; i < samples; ++i) {
        const cplx z = disk_point(seed, static_cast<std::uint64_t>(i), inf.R);
        if (!inf(z)) continue;
        for (std::size_t j = 0; j < cls.size(); ++j)
            if (!cls[j](z)) ++hits[j];
    }
    const double box = std::numbers::pi * inf.R * inf.R;
    std::vector<AreaEstimate> out;
    for (std::size_t j = 0; j < thetas.size(); ++j) {
        AreaEstimate a;
        const double p = static_cast<double>(hits[j]) / static_cast<double>(samples);
        a.value = box * p;
        a.stderr_ = box * std::sqrt(p * (1 - p) / static_cast<double>(samples));
        a.samples = samples;
        a.hits = hits[j];
        a.seed = seed;
        a.maxiter = maxiter;
        a.theta_j = thetas[j];
        out.push_back(a);
    }
    return out;
}

AreaEstimate area_difference(double theta_inf, double theta_j, std::int64_t samples, std::uint64_t seed,
                             std::int64_t maxiter) {
    if (theta_j == theta_inf) {
        check_samples(samples);
        AreaEstimate a;
        a.samples = samples;
        a.seed = seed;
        a.maxiter = maxiter;
        a.theta_j = theta_j;
        return a;
    }
    return area_differences(theta_inf, {theta_j}, samples, seed, maxiter).front();
}

AreaEstimate filled_area(double theta, std::int64_t samples, std::uint64_t seed, std::int64_t maxiter) {
    check_samples(samples);
    const auto cl = make_classifier(theta, maxiter);
    AreaEstimate a;
    for (std::int64_t i = 0; i < samples; ++i)
        if (cl(disk_point(seed, static_cast<std::uint64_t>(i), cl.R))) ++a.hits;
    const double box = std::numbers::pi * cl.R * cl.R;
    const double p = static_cast<double>(a.hits) / static_cast<double>(samples);
    a.value = box * p;
    a.stderr_ = box * std::sqrt(p * (1 - p) / static_cast<double>(samples));
    a.samples = samples;
    a.seed = seed;
    a.maxiter = maxiter;
    a.theta_j = theta;
    return a;
}

PolygonIndex::PolygonIndex(const std::vector<cplx>& closed) : pts_(closed) {
    if (pts_.size() < 4 || pts_.front() != pts_.back())
        throw config_error("area", "boundary polyline must be closed with at least 3 vertices");
    x0_ = x1_ = pts_[0].real();
    y0_ = y1_ = pts_[0].imag();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
        x0_ = std::min(x0_, pts_[i].real());
        x1_ = std::max(x1_, pts_[i].real());
        y0_ = std::min(y0_, pts_[i].imag());
        y1_ = std::max(y1_, pts_[i].imag());
        if (i + 1 < pts_.size()) max_edge_ = std::max(max_edge_, std::abs(pts_[i + 1] - pts_[i]));
    }
    const std::size_t n = pts_.size() - 1;
    const double side = std::max(x1_ - x0_, y1_ - y0_);

    rows_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
    row_edges_.resize(static_cast<std::size_t>(rows_));
    const double band = (y1_ - y0_) / rows_;
    auto row = [&](double y) { return std::clamp(static_cast<int>((y - y0_) / band), 0, rows_ - 1); };

    cell_ = std::max(max_edge_, side / std::sqrt(static_cast<double>(n)));
    gx_ = static_cast<int>((x1_ - x0_) / cell_) + 1;
    gy_ = static_cast<int>((y1_ - y0_) / cell_) + 1;
    cells_.resize(static_cast<std::size_t>(gx_) * gy_);
    auto cx = [&](double x) { return std::clamp(static_cast<int>((x - x0_) / cell_), 0, gx_ - 1); };
    auto cy = [&](double y) { return std::clamp(static_cast<int>((y - y0_) / cell_), 0, gy_ - 1); };

    for (std::size_t i = 0; i < n; ++i) {
        const cplx a = pts_[i], b = pts_[i + 1];
        const auto e = static_cast<std::uint32_t>(i);
        for (int r = row(std::min(a.imag(), b.imag())); r <= row(std::max(a.imag(), b.imag())); ++r)
            row_edges_[r].push_back(e);
        for (int x = cx(std::min(a.real(), b.real())); x <= cx(std::max(a.real(), b.real())); ++x)
            for (int y = cy(std::min(a.imag(), b.imag())); y <= cy(std::max(a.imag(), b.imag())); ++y)
                cells_[static_cast<std::size_t>(x) * gy_ + y].push_back(e);
    }
}

bool PolygonIndex::inside(cplx z) const {
    if (z.real() < x0_ || z.real() > x1_ || z.imag() < y0_ || z.imag() > y1_) return false;
    const double band = (y1_ - y0_) / rows_;
    const int r = std::clamp(static_cast<int>((z.imag() - y0_) / band), 0, rows_ - 1);
    bool in = false;
    for (auto e : row_edges_[r]) {
        const cplx a = pts_[e], b = pts_[e + 1];
        if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
            const double x = a.real() + (z.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
            if (z.real() < x) in = !in;
        }
    }
    return in;
}

double PolygonIndex::distance(cplx z, double cap) const {
    const int ix = static_cast<int>(std::floor((z.real() - x0_) / cell_));
    const int iy = static_cast<int>(std::floor((z.imag() - y0_) / cell_));
    const int K = static_cast<int>(std::ceil(cap / cell_)) + 1;
    double best = cap;
    for (int k = 0; k <= K; ++k) {
        // every cell in ring k is at least (k - 1) cells away
        if (k >= 1 && best <= (k - 1) * cell_) break;
        for (int x = ix - k; x <= ix + k; ++x) {
            if (x < 0 || x >= gx_) continue;
            for (int y = iy - k; y <= iy + k; ++y) {
                if (y < 0 || y >= gy_) continue;
                if (std::max(std::abs(x - ix), std::abs(y - iy)) != k) continue;
                for (auto e : cells_[static_cast<std::size_t>(x) * gy_ + y])
                    best = std::min(best, segment_distance(z, pts_[e], pts_[e + 1]));
            }
        }
    }
    return best;
}

DensityProfile density_near_boundary(const ContinuedFraction& theta_inf, const std::vector<double>& eps_list,
                                     std::int64_t samples, std::uint64_t seed, std::int64_t maxiter,
                                     std::int64_t boundary_points) {
    if (boundary_points < 10000) throw config_error("area", "boundary polyline needs at least 1e4 points");
    const auto f = make_map(theta_inf);
    return density_near_boundary(f.theta, boundary_curve(f, boundary_points).points, eps_list, samples, seed,
                                 maxiter);
}

DensityProfile density_near_boundary(double theta, const std::vector<cplx>& boundary,
                                     const std::vector<double>& eps_list, std::int64_t samples,
                                     std::uint64_t seed, std::int64_t maxiter) {
    check_samples(samples);
    const PolygonIndex poly(boundary);
    const auto cl = make_classifier(theta, maxiter);

    DensityProfile prof;
    prof.seed = seed;
    prof.maxiter = maxiter;
    prof.boundary_points = static_cast<std::int64_t>(boundary.size()) - 1;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        const double eps = eps_list[k];
        if (!(eps > 0)) throw config_error("area", "eps must be positive");
        const std::uint64_t stream = splitmix64(seed + 0x632be59bd9b4e019ULL * (k + 1));
        const double bx0 = poly.xmin() - eps, bx1 = poly.xmax() + eps;
        const double by0 = poly.ymin() - eps, by1 = poly.ymax() + eps;
        DensityEntry e;
        e.eps = eps;
        e.below_resolution = eps < poly.resolution();
        const std::int64_t limit = 1000 * samples;
        for (std::int64_t i = 0; e.samples < samples; ++i) {
            if (i >= limit) throw budget_error("area", "rejection sampling of the eps-neighborhood stalled");
            const cplx z(bx0 + (bx1 - bx0) * uniform01(stream, static_cast<std::uint64_t>(i), 0),
                         by0 + (by1 - by0) * uniform01(stream, static_cast<std::uint64_t>(i), 1));
            if (!poly.inside(z) && !(poly.distance(z, eps) < eps)) continue;
            ++e.samples;
            if (!cl(z)) ++e.outside;
        }
        const double p = static_cast<double>(e.outside) / static_cast<double>(e.samples);
        e.density = p;
        e.stderr_ = std::sqrt(p * (1 - p) / static_cast<double>(e.samples));
        prof.entries.push_back(e);
    }
    return prof;
}

}  // namespace renorm
