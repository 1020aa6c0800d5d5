#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "renorm/cfrac.hpp"

namespace renorm {

using cplx = std::complex<double>;

// Lift of a degree-one circle map with its critical point at 0 mod 1.
struct CircleMapLift {
    std::function<double(double)> F;
    std::function<double(double)> dF;
};

cplx blaschke_eval(double tau, cplx z);

// Lift of Q_tau restricted to the unit circle, x = arg(z)/2pi.
CircleMapLift blaschke_lift(double tau);

CircleMapLift rotation_lift(double theta);

struct RotationNumber {
    double value = 0;
    double lower = 0;  // value is bracketed by [lower, upper]
    double upper = 1;
    ContinuedFraction cf;
    bool partial = false;   // budget ran out before `depth` terms were fixed
    bool rational = false;  // periodic critical orbit found
    std::int64_t period = 0;
    std::int64_t iterates = 0;
};

RotationNumber rotation_number(const CircleMapLift& f, int depth, std::int64_t budget,
                               double value_tol = 1e-12);

struct TuneResult {
    double tau = 0;
    RotationNumber rho;
    double residual = 0;  // max distance from theta to the final rho bracket
    int iterations = 0;
    bool mode_locked = false;
};

TuneResult tune_tau(double theta, double tol, std::int64_t budget = 1000000);

// x -> a x + b
struct Affine {
    double a = 1;
    double b = 0;

    double operator()(double x) const { return a * x + b; }
    double inverse(double y) const { return (y - b) / a; }
    Affine after(const Affine& inner) const { return {a * inner.a, a * inner.b + b}; }
};

// x -> S(F^k(S^{-1} x) - p), with F commuting with integer translations.
struct PairMap {
    std::shared_ptr<const std::function<double(double)>> base;
    // set for maps without a program (synthetic pairs, cross-frame compositions)
    std::shared_ptr<const std::function<double(double)>> generic;
    std::int64_t k = 1;
    std::int64_t p = 0;
    Affine S;

    double operator()(double x) const;
    bool same_frame(const PairMap& o) const;
};

PairMap compose(const PairMap& outer, const PairMap& inner);
PairMap power(const PairMap& m, std::int64_t r);
PairMap rescale(const PairMap& m, double lambda);

struct CommutingPair {
    PairMap eta;
    PairMap xi;
    double eta0 = 0;  // eta(0) < 0
    double xi0 = 0;   // xi(0) > 0

    static CommutingPair make(PairMap eta, PairMap xi);
    // Commutation defect on the common extension domain, relative to |I_eta|.
    double commutation_defect(int samples = 50) const;
    void check_invariants(double tol = 1e-9) const;
};

// A bare pair from two functions (no provenance), e.g. synthetic test cases.
CommutingPair make_pair(std::function<double(double)> eta, std::function<double(double)> xi);

struct Height {
    std::optional<std::int64_t> value;  // empty = infinity
    std::string diagnostic;

    bool infinite() const { return !value.has_value(); }
};

CommutingPair pre_renormalize(const CircleMapLift& f, int n, std::int64_t budget = 1000000);
CommutingPair pre_renormalize(const CircleMapLift& f, const Convergents& c, int n);

Height height(const CommutingPair& pair, std::int64_t cap = 100000);

CommutingPair renormalize_pair(const CommutingPair& pair);

struct Arc {
    double start = 0;   // lift coordinate
    double length = 0;
    double mod_start() const;
};

struct Partition {
    int n = 0;
    std::vector<Arc> arcs;  // sorted by mod_start
    double total_length = 0;
    double max_length = 0;
    double min_length = 0;
    bool disjoint = false;
};

Partition dynamical_partition(const CircleMapLift& f, double point, int n,
                              std::int64_t budget = 1000000);
Partition dynamical_partition(const CircleMapLift& f, double point, const Convergents& c, int n);

// Every arc of `fine` lies inside an arc of `coarse` (half-open membership, tolerance tol).
bool refines(const Partition& fine, const Partition& coarse, double tol = 1e-10);

}  // namespace renorm
