#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

#include "renorm/siegel.hpp"

namespace renorm {

// Fixed sample geometry and constrained least-squares fit for degree d.
// A is expanded in Chebyshev polynomials on [0, 1], B on [lambda, 0]; the constraints
// A'(0) = 0, B(0) = 1, B'(0) = 0 leave m = 2d - 1 free complex coordinates.
struct Projector {
    int d = 0;
    int M = 0;  // samples per component
    double rho = kEllipseRho;
    cplx lambda = kLambdaRef;
    std::vector<cplx> UA, UB;
    Eigen::VectorXcd xp;      // particular solution of the constraints
    Eigen::MatrixXcd Z;       // orthonormal null-space basis of the constraints
    Eigen::MatrixXcd V;       // sample values of the basis, 2M x 2(d+1)
    Eigen::MatrixXcd fit;     // pseudo-inverse of V Z
    double condition = 0;

    int free_dim() const { return static_cast<int>(Z.cols()); }
};

std::shared_ptr<const Projector> make_projector(int d, double rho = kEllipseRho, cplx lambda = kLambdaRef);

cplx chebyshev_eval(const Eigen::VectorXcd& coef, cplx a, cplx b, cplx u);

struct CoefficientVector {
    std::shared_ptr<const Projector> basis;
    Eigen::VectorXcd y;   // free coordinates
    double rho = 0;       // rotation number of the pair
    double residual = 0;  // max fit error on the sample set when projected

    int degree() const { return basis->d; }
    Eigen::VectorXcd coefficients() const { return basis->xp + basis->Z * y; }
    Eigen::VectorXcd a() const { return coefficients().head(basis->d + 1); }
    Eigen::VectorXcd b() const { return coefficients().tail(basis->d + 1); }
    cplx multiplier() const;
    ComplexPair as_pair() const;
};

CoefficientVector project_pair(const ComplexPair& P, double rho, std::shared_ptr<const Projector> basis);
// rho = G^{n+1}(theta) for the level-n pair
CoefficientVector project_pair(const RescaledPair& P, int d);

CoefficientVector renorm_in_coords(const CoefficientVector& c);

// Taylor coefficients c_0, c_2 of A o B - B o A at 0.
Eigen::Vector2cd commutator_coefficients(const CoefficientVector& c);

struct FixedPoint {
    CoefficientVector c;
    std::vector<double> residuals;  // ||R(y) - y|| before each step and at the end
    int steps = 0;
};

// Newton with a truncated pseudo-inverse of DR - I, starting from `start`.
FixedPoint locate_fixed_point(const CoefficientVector& start, int max_steps = 10, double h = 1e-6,
                              double cutoff = 5e-3);

struct RenormJacobian {
    Eigen::MatrixXd J;   // realified: coordinates (Re y, Im y)
    double h = 0;
    int d = 0;
    double richardson = 0;  // ||J_h - J_{h/2}|| / ||J_h|| in the 2-norm
};

RenormJacobian jacobian(const CoefficientVector& c, double h);

// A realified conjugate-linear map T(y) = P conj(y) (+ a linear remainder).
struct ConjLinear {
    Eigen::MatrixXcd P;
    double linear_part = 0;  // relative size of the complex-linear remainder
};

ConjLinear conj_linear_part(const Eigen::MatrixXd& J);

struct SpectrumReport {
    int d = 0;
    double h = 0;
    int dimension = 0;                 // complex dimension of the space
    std::vector<cplx> eigenvalues;     // con-eigenvalues sqrt(eig(P conj(P))), sorted by modulus
    std::vector<double> moduli;
    int unstable = 0;                  // moduli > 1
    double gap = 0;                    // moduli[0] - moduli[1]
    Eigen::VectorXcd leading;          // con-eigenvector of the leading eigenvalue
};

SpectrumReport eigen(const ConjLinear& T, int d = 0, double h = 0);
SpectrumReport eigen(const RenormJacobian& J);

// Derivative of the projected level-n pair of the quadratic family in theta.
Eigen::VectorXcd multiplier_direction(const CoefficientVector& like, int level = 10, double h_theta = 1e-8);

struct SpectrumAnalysis {
    RenormJacobian jac;
    SpectrumReport full;
    SpectrumReport restricted;   // commuting pairs modulo the affine gauge
    SpectrumReport pinned;       // restricted, multiplier direction removed
    double overlap = 0;          // |<unstable eigenvector, v_mu>| in the restricted space
    double multiplier_gain = 0;  // ||T v_mu|| / ||v_mu||
};

SpectrumAnalysis analyze_spectrum(const CoefficientVector& fixed, double h, const Eigen::VectorXcd& v_mu);

}  // namespace renorm
