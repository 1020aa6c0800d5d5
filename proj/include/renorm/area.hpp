#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "renorm/cfrac.hpp"

namespace renorm {

using cplx = std::complex<double>;

// Counter-based stream: the i-th draw depends only on (seed, i).
std::uint64_t splitmix64(std::uint64_t x);
double uniform01(std::uint64_t seed, std::uint64_t index, int lane);

// Escape-time membership for z -> e^{2 pi i theta} z + z^2.
struct EscapeClassifier {
    double theta = 0;
    cplx mu;
    std::int64_t maxiter = 10000;
    double R = 3;

    // false iff some iterate leaves |z| <= R within maxiter steps
    bool operator()(cplx z) const;
};

EscapeClassifier make_classifier(double theta, std::int64_t maxiter, double R = 3);

struct AreaEstimate {
    double value = 0;
    double stderr_ = 0;
    std::int64_t samples = 0;
    std::int64_t hits = 0;
    std::uint64_t seed = 0;
    std::int64_t maxiter = 0;
    double theta_j = 0;
};

// theta_j = [prefix, N x j, inf]
double theta_j(const std::vector<std::int64_t>& prefix, std::int64_t N, int j);

// Area of K(theta_inf) \ K(theta_j) for each theta_j, sharing one set of samples in the disk |z| <= R.
std::vector<AreaEstimate> area_differences(double theta_inf, const std::vector<double>& thetas,
                                           std::int64_t samples, std::uint64_t seed,
                                           std::int64_t maxiter = 10000);
AreaEstimate area_difference(double theta_inf, double theta_j, std::int64_t samples, std::uint64_t seed,
                             std::int64_t maxiter = 10000);

// Monte-Carlo area of K(theta) itself.
AreaEstimate filled_area(double theta, std::int64_t samples, std::uint64_t seed, std::int64_t maxiter = 10000);

// Point location against a closed polyline: inside test by crossing parity, distance by grid search.
class PolygonIndex {
public:
    explicit PolygonIndex(const std::vector<cplx>& closed);

    bool inside(cplx z) const;
    double distance(cplx z, double cap) const;  // min(dist to polyline, cap)
    double xmin() const { return x0_; }
    double xmax() const { return x1_; }
    double ymin() const { return y0_; }
    double ymax() const { return y1_; }
    double resolution() const { return max_edge_; }

private:
    std::vector<cplx> pts_;
    double x0_, x1_, y0_, y1_, max_edge_ = 0;
    int rows_ = 0, gx_ = 0, gy_ = 0;
    double cell_ = 0;
    std::vector<std::vector<std::uint32_t>> row_edges_;  // edges spanning each horizontal band
    std::vector<std::vector<std::uint32_t>> cells_;      // edges touching each square cell
};

struct DensityEntry {
    double eps = 0;
    double density = 0;  // fraction of U_eps(Delta) outside K
    double stderr_ = 0;
    std::int64_t samples = 0;
    std::int64_t outside = 0;
    bool below_resolution = false;
};

struct DensityProfile {
    std::vector<DensityEntry> entries;
    std::uint64_t seed = 0;
    std::int64_t maxiter = 0;
    std::int64_t boundary_points = 0;
};

// `boundary` is a closed polyline approximating the Siegel disk boundary of z -> e^{2 pi i theta} z + z^2.
DensityProfile density_near_boundary(double theta, const std::vector<cplx>& boundary,
                                     const std::vector<double>& eps_list, std::int64_t samples,
                                     std::uint64_t seed, std::int64_t maxiter = 10000);
DensityProfile density_near_boundary(const ContinuedFraction& theta_inf, const std::vector<double>& eps_list,
                                     std::int64_t samples, std::uint64_t seed, std::int64_t maxiter = 10000,
                                     std::int64_t boundary_points = 10000);

}  // namespace renorm
