#include "renorm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "renorm/error.hpp"

namespace renorm {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
const cplx I(0, 1);

Eigen::VectorXd realify(const Eigen::VectorXcd& v) {
    Eigen::VectorXd r(2 * v.size());
    r << v.real(), v.imag();
    return r;
}

Eigen::VectorXcd complexify(const Eigen::VectorXd& r) {
    const auto m = r.size() / 2;
    Eigen::VectorXcd v(m);
    v.real() = r.head(m);
    v.imag() = r.tail(m);
    return v;
}

// T_j(x) and T_j'(x) for j = 0..d
void chebyshev_row(int d, cplx x, Eigen::RowVectorXcd& T, Eigen::RowVectorXcd& dT) {
    T.resize(d + 1);
    dT.resize(d + 1);
    Eigen::RowVectorXcd U(d + 1);
    T(0) = 1;
    U(0) = 1;
    if (d >= 1) {
        T(1) = x;
        U(1) = 2.0 * x;
    }
    for (int j = 2; j <= d; ++j) {
        T(j) = 2.0 * x * T(j - 1) - T(j - 2);
        U(j) = 2.0 * x * U(j - 1) - U(j - 2);
    }
    dT(0) = 0;
    for (int j = 1; j <= d; ++j) dT(j) = static_cast<double>(j) * U(j - 1);
}

// orthonormal basis of the orthogonal complement of span(v) in C^n
Eigen::MatrixXcd complement(const Eigen::MatrixXcd& v) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v.adjoint(), Eigen::ComputeFullV);
    const auto n = v.rows();
    const auto k = v.cols();
    return svd.matrixV().rightCols(n - k);
}

double spectral_norm(const Eigen::MatrixXd& A) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

int height_of(double rho) {
    if (!(rho > 0 && rho < 1)) throw numerical_error("spectrum", "pair has infinite height (rotation number 0)");
    const auto cf = cf_from_real(rho, 1);
    if (cf.terms.empty()) throw numerical_error("spectrum", "pair has infinite height");
    return static_cast<int>(cf.terms[0]);
}

Eigen::VectorXcd renorm_y(const CoefficientVector& c, const Eigen::VectorXcd& y) {
    CoefficientVector t = c;
    t.y = y;
    return renorm_in_coords(t).y;
}

}  // namespace

std::shared_ptr<const Projector> make_projector(int d, double rho, cplx lambda) {
    if (d < 4) throw config_error("spectrum", "degree must be at least 4");
    auto p = std::make_shared<Projector>();
    p->d = d;
    p->M = 3 * (d + 1);
    p->rho = rho;
    p->lambda = lambda;
    const int n = d + 1;
    const auto X = ellipse_samples(-1.0, 1.0, p->M, rho);
    p->V = Eigen::MatrixXcd::Zero(2 * p->M, 2 * n);
    Eigen::RowVectorXcd T, dT;
    for (int k = 0; k < p->M; ++k) {
        p->UA.push_back((X[k] + 1.0) / 2.0);
        p->UB.push_back(lambda + (0.0 - lambda) * (X[k] + 1.0) / 2.0);
        chebyshev_row(d, X[k], T, dT);
        p->V.block(k, 0, 1, n) = T;
        p->V.block(p->M + k, n, 1, n) = T;
    }
    // A'(0) = 0 at x = -1 on [0, 1]; B(0) = 1 and B'(0) = 0 at x = 1 on [lambda, 0]
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(3, 2 * n);
    chebyshev_row(d, -1.0, T, dT);
    C.block(0, 0, 1, n) = dT * 2.0;
    chebyshev_row(d, 1.0, T, dT);
    C.block(1, n, 1, n) = T;
    C.block(2, n, 1, n) = dT * (2.0 / (0.0 - lambda));
    Eigen::VectorXcd rhs(3);
    rhs << 0, 1, 0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> cs(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    p->xp = cs.solve(rhs);
    p->Z = cs.matrixV().rightCols(2 * n - 3);

    const Eigen::MatrixXcd VZ = p->V * p->Z;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(VZ, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    p->condition = s(0) / s(s.size() - 1);
    if (!(p->condition < 1e12))
        throw numerical_error("spectrum", "fit is ill-conditioned (condition " + std::to_string(p->condition) +
                                              "), use a smaller degree");
    p->fit = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
    return p;
}

cplx chebyshev_eval(const Eigen::VectorXcd& coef, cplx a, cplx b, cplx u) {
    const cplx x = 2.0 * (u - a) / (b - a) - 1.0;
    cplx b1 = 0, b2 = 0;
    for (auto j = coef.size() - 1; j >= 1; --j) {
        const cplx t = 2.0 * x * b1 - b2 + coef(j);
        b2 = b1;
        b1 = t;
    }
    return x * b1 - b2 + coef(0);
}

cplx CoefficientVector::multiplier() const { return std::polar(1.0, kTwoPi * rho); }

ComplexPair CoefficientVector::as_pair() const {
    const Eigen::VectorXcd ca = a(), cb = b();
    const cplx lam = basis->lambda;
    return {[ca](cplx u) { return chebyshev_eval(ca, 0.0, 1.0, u); },
            [cb, lam](cplx u) { return chebyshev_eval(cb, lam, 0.0, u); }};
}

CoefficientVector project_pair(const ComplexPair& P, double rho, std::shared_ptr<const Projector> basis) {
    const auto& B = *basis;
    Eigen::VectorXcd vals(2 * B.M);
    for (int k = 0; k < B.M; ++k) {
        vals(k) = P.A(B.UA[k]);
        vals(B.M + k) = P.B(B.UB[k]);
    }
    if (!vals.allFinite()) throw numerical_error("spectrum", "pair evaluation failed on the projection samples");
    CoefficientVector c;
    c.basis = basis;
    c.rho = rho;
    c.y = B.fit * (vals - B.V * B.xp);
    c.residual = (B.V * c.coefficients() - vals).cwiseAbs().maxCoeff();
    return c;
}

CoefficientVector project_pair(const RescaledPair& P, int d) {
    ContinuedFraction t;
    if (P.f.cf.terms.size() > static_cast<std::size_t>(P.n + 1))
        t.terms.assign(P.f.cf.terms.begin() + P.n + 1, P.f.cf.terms.end());
    if (t.terms.empty()) throw config_error("spectrum", "rotation number too short for level " + std::to_string(P.n));
    return project_pair(P.as_pair(), cf_value(t), make_projector(d));
}

CoefficientVector renorm_in_coords(const CoefficientVector& c) {
    const int r = height_of(c.rho);
    const auto P = c.as_pair();
    const cplx lam = P.A(0.0);
    if (!(std::abs(lam) > 0) || !std::isfinite(std::abs(lam)))
        throw numerical_error("spectrum", "degenerate rescaling factor");
    // new pair (A^r o B, A) in coordinates u -> conj(z / lambda)
    ComplexPair Q{[P, lam, r](cplx u) {
                      cplx z = P.B(lam * std::conj(u));
                      for (int i = 0; i < r; ++i) z = P.A(z);
                      return std::conj(z / lam);
                  },
                  [P, lam](cplx u) { return std::conj(P.A(lam * std::conj(u)) / lam); }};
    return project_pair(Q, gauss_map(c.rho), c.basis);
}

Eigen::Vector2cd commutator_coefficients(const CoefficientVector& c) {
    const auto P = c.as_pair();
    constexpr int N = 32;
    constexpr double t = 1e-2;
    Eigen::Vector2cd out = Eigen::Vector2cd::Zero();
    for (int j = 0; j < N; ++j) {
        const cplx w = std::polar(1.0, kTwoPi * j / N);
        const cplx z = t * w;
        const cplx v = P.A(P.B(z)) - P.B(P.A(z));
        out(0) += v;
        out(1) += v / (w * w);
    }
    out(0) /= N;
    out(1) /= N * t * t;
    return out;
}

FixedPoint locate_fixed_point(const CoefficientVector& start, int max_steps, double h, double cutoff) {
    FixedPoint fp;
    fp.c = start;
    Eigen::VectorXcd y = start.y;
    Eigen::VectorXcd r = renorm_y(start, y) - y;
    fp.residuals.push_back(r.norm());
    const auto n = 2 * y.size();
    for (int step = 0; step < max_steps && r.norm() > 1e-13; ++step) {
        CoefficientVector c = start;
        c.y = y;
        Eigen::MatrixXd J(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(j) = h;
            J.col(j) = (realify(renorm_y(c, y + complexify(e))) - realify(renorm_y(c, y - complexify(e)))) / (2 * h);
        }
        J -= Eigen::MatrixXd::Identity(n, n);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        Eigen::VectorXd coef = svd.matrixU().transpose() * realify(r);
        for (Eigen::Index k = 0; k < s.size(); ++k) coef(k) = s(k) > cutoff ? coef(k) / s(k) : 0.0;
        const Eigen::VectorXcd ynew = y - complexify(svd.matrixV() * coef);
        const Eigen::VectorXcd rnew = renorm_y(start, ynew) - ynew;
        if (!(rnew.norm() < r.norm())) break;  // stalled at the truncation floor
        y = ynew;
        r = rnew;
        fp.residuals.push_back(r.norm());
        ++fp.steps;
    }
    fp.c.y = y;
    fp.c.residual = renorm_in_coords(fp.c).residual;
    return fp;
}

RenormJacobian jacobian(const CoefficientVector& c, double h) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw config_error("spectrum", "step h must lie in [1e-7, 1e-3]");
    const auto n = 2 * c.y.size();
    auto build = [&](double step) {
        Eigen::MatrixXd J(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(j) = step;
            J.col(j) = (realify(renorm_y(c, c.y + complexify(e))) - realify(renorm_y(c, c.y - complexify(e)))) /
                       (2 * step);
        }
        return J;
    };
    RenormJacobian rj;
    rj.J = build(h);
    rj.h = h;
    rj.d = c.degree();
    if (!rj.J.allFinite()) throw numerical_error("spectrum", "non-finite Jacobian entries");
    rj.richardson = spectral_norm(rj.J - build(h / 2)) / spectral_norm(rj.J);
    if (rj.richardson > 0.05)
        throw numerical_error("spectrum", "Richardson check failed (" + std::to_string(rj.richardson) +
                                              "), step size unusable");
    return rj;
}

ConjLinear conj_linear_part(const Eigen::MatrixXd& J) {
    const auto m = J.cols() / 2;
    ConjLinear T;
    T.P.resize(m, m);
    Eigen::MatrixXcd L(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXcd a = complexify(J.col(j)), b = complexify(J.col(m + j));
        T.P.col(j) = (a + I * b) / 2.0;
        L.col(j) = (a - I * b) / 2.0;
    }
    T.linear_part = L.norm() / T.P.norm();
    return T;
}

SpectrumReport eigen(const ConjLinear& T, int d, double h) {
    const Eigen::MatrixXcd PP = T.P * T.P.conjugate();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(PP);
    if (es.info() != Eigen::Success) throw numerical_error("spectrum", "eigensolver did not converge");
    const auto m = PP.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) order[k] = k;
    std::vector<cplx> sig(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) sig[k] = std::sqrt(es.eigenvalues()(k));
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(sig[a]) > std::abs(sig[b]); });

    SpectrumReport r;
    r.d = d;
    r.h = h;
    r.dimension = static_cast<int>(m);
    for (auto k : order) {
        r.eigenvalues.push_back(sig[k]);
        r.moduli.push_back(std::abs(sig[k]));
        if (std::abs(sig[k]) > 1) ++r.unstable;
    }
    if (m >= 2) r.gap = r.moduli[0] - r.moduli[1];
    if (m >= 1) {
        // for P conj(P) v = s^2 v with s real, x = P conj(v) + s v solves P conj(x) = s x
        const Eigen::VectorXcd v = es.eigenvectors().col(order[0]);
        const double s = std::abs(sig[order[0]]);
        Eigen::VectorXcd x = T.P * v.conjugate() + s * v;
        if (x.norm() < 1e-8 * v.norm()) x = T.P * (I * v).conjugate() + s * (I * v);
        r.leading = x.normalized();
    }
    return r;
}

SpectrumReport eigen(const RenormJacobian& J) { return eigen(conj_linear_part(J.J), J.d, J.h); }

Eigen::VectorXcd multiplier_direction(const CoefficientVector& like, int level, double h_theta) {
    const double t = theta_N(1);
    auto project = [&](double theta) {
        const auto P = mcm_renormalize(make_map(theta), level);
        return project_pair(P.as_pair(), like.rho, like.basis).y;
    };
    return (project(t + h_theta) - project(t - h_theta)) / (2 * h_theta);
}

SpectrumAnalysis analyze_spectrum(const CoefficientVector& fixed, double h, const Eigen::VectorXcd& v_mu) {
    SpectrumAnalysis an;
    an.jac = jacobian(fixed, h);
    const auto T = conj_linear_part(an.jac.J);
    an.full = eigen(T, an.jac.d, h);
    const auto m = fixed.y.size();

    // complex gradient of the commutator coefficients
    Eigen::MatrixXcd G(2, m);
    constexpr double e = 1e-6;
    for (Eigen::Index j = 0; j < m; ++j) {
        CoefficientVector p = fixed, q = fixed;
        p.y(j) += e;
        q.y(j) -= e;
        G.col(j) = (commutator_coefficients(p) - commutator_coefficients(q)) / (2 * e);
    }
    const Eigen::MatrixXcd K = complement(G.adjoint());

    // infinitesimal conjugation by u -> u + t u(u - 1)
    const auto P = fixed.as_pair();
    const auto& B = *fixed.basis;
    auto v = [](cplx u) { return u * (u - 1.0); };
    auto deriv = [](const std::function<cplx(cplx)>& f, cplx u) { return (f(u + 1e-6) - f(u - 1e-6)) / 2e-6; };
    Eigen::VectorXcd g(2 * B.M);
    for (int k = 0; k < B.M; ++k) {
        g(k) = v(P.A(B.UA[k])) - deriv(P.A, B.UA[k]) * v(B.UA[k]);
        g(B.M + k) = v(P.B(B.UB[k])) - deriv(P.B, B.UB[k]) * v(B.UB[k]);
    }
    const Eigen::VectorXcd gauge = B.fit * g;

    const Eigen::MatrixXcd W = K * complement(K.adjoint() * gauge);
    auto restrict_to = [&](const Eigen::MatrixXcd& basis) {
        ConjLinear R;
        R.P = basis.adjoint() * T.P * basis.conjugate();
        return eigen(R, an.jac.d, h);
    };
    an.restricted = restrict_to(W);
    const Eigen::MatrixXcd W2 = W * complement(W.adjoint() * v_mu);
    an.pinned = restrict_to(W2);

    const Eigen::VectorXcd x = W * an.restricted.leading;
    an.overlap = std::abs(x.dot(v_mu)) / (x.norm() * v_mu.norm());
    an.multiplier_gain = (an.jac.J * realify(v_mu)).norm() / v_mu.norm();
    return an;
}

}  // namespace renorm
