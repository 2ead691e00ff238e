#pragma once

// Particle / projective / inverse-transpose-projective / matrix processes
// riding a velocity field:
//   x' = u(x)
//   v' = Pi_v grad u(x) v          (Pi_v = I - v v^T)
//   vch' = -Pi_vch (grad u(x))^T vch
//   A' = grad u(x) A               (the Jacobian cocycle, det A = 1)
//   Ainvt' = -(grad u(x))^T Ainvt  (A^{-T}, gradients of advected scalars)
// integrated with a classical RK4 step on the frozen-coefficient field.
// v, vch are renormalized every step; A and Ainvt are renormalized when
// their norms leave [1e-6, 1e6], with the factors accumulated in logs.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spectral_field.hpp"

namespace sflab {

struct LagrangianState {
    int d = 2;
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Eigen::Vector3d vch = Eigen::Vector3d::Zero();
    Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d Ainvt = Eigen::Matrix3d::Identity();
    double logNorm = 0;      // accumulated log renormalization factors of A
    double logNormInvT = 0;  // same for A^{-T}

    static LagrangianState start(int d, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0) {
        LagrangianState s;
        s.d = d;
        s.x.setZero();
        s.v.setZero();
        s.vch.setZero();
        for (int i = 0; i < d; ++i) {
            s.x[i] = x0[i];
            s.v[i] = v0[i];
            s.vch[i] = v0[i];
        }
        s.v.normalize();
        s.vch.normalize();
        if (d == 2) {  // keep the unused dimension inert
            s.A(2, 2) = 1;
            s.Ainvt(2, 2) = 1;
        }
        return s;
    }

    Eigen::MatrixXd A_active() const { return A.topLeftCorner(d, d); }
    Eigen::MatrixXd Ainvt_active() const { return Ainvt.topLeftCorner(d, d); }
};

namespace detail {

struct LagrangianDeriv {
    Eigen::Vector3d dx, dv, dvch;
    Eigen::Matrix3d dA, dAinvt;
};

inline LagrangianDeriv lagrangian_rhs(const FieldEvaluator& ev, int d, const Eigen::Vector3d& x,
                                      const Eigen::Vector3d& v, const Eigen::Vector3d& vch,
                                      const Eigen::Matrix3d& A, const Eigen::Matrix3d& Ainvt) {
    LagrangianDeriv out;
    double uval[3] = {0, 0, 0}, gval[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    ev.velocity(x.data(), uval);
    ev.gradient(x.data(), gval);
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = gval[i * d + j];
    out.dx.setZero();
    for (int i = 0; i < d; ++i) out.dx[i] = uval[i];
    Eigen::Vector3d Gv = G * v;
    out.dv = Gv - v.dot(Gv) * v;
    Eigen::Vector3d Gtv = G.transpose() * vch;
    out.dvch = -(Gtv - vch.dot(Gtv) * vch);
    out.dA = G * A;
    out.dAinvt = -G.transpose() * Ainvt;
    return out;
}

}  // namespace detail

// One RK4 step of size dt on the frozen field.  `substeps` subdivides dt.
inline void flow_step(LagrangianState& s, const FieldEvaluator& ev, double dt, int substeps = 1) {
    const double h = dt / substeps;
    for (int sub = 0; sub < substeps; ++sub) {
        auto k1 = detail::lagrangian_rhs(ev, s.d, s.x, s.v, s.vch, s.A, s.Ainvt);
        auto k2 = detail::lagrangian_rhs(ev, s.d, s.x + 0.5 * h * k1.dx, s.v + 0.5 * h * k1.dv,
                                         s.vch + 0.5 * h * k1.dvch, s.A + 0.5 * h * k1.dA,
                                         s.Ainvt + 0.5 * h * k1.dAinvt);
        auto k3 = detail::lagrangian_rhs(ev, s.d, s.x + 0.5 * h * k2.dx, s.v + 0.5 * h * k2.dv,
                                         s.vch + 0.5 * h * k2.dvch, s.A + 0.5 * h * k2.dA,
                                         s.Ainvt + 0.5 * h * k2.dAinvt);
        auto k4 = detail::lagrangian_rhs(ev, s.d, s.x + h * k3.dx, s.v + h * k3.dv,
                                         s.vch + h * k3.dvch, s.A + h * k3.dA,
                                         s.Ainvt + h * k3.dAinvt);
        s.x += (h / 6.0) * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
        s.v += (h / 6.0) * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
        s.vch += (h / 6.0) * (k1.dvch + 2 * k2.dvch + 2 * k3.dvch + k4.dvch);
        s.A += (h / 6.0) * (k1.dA + 2 * k2.dA + 2 * k3.dA + k4.dA);
        s.Ainvt += (h / 6.0) * (k1.dAinvt + 2 * k2.dAinvt + 2 * k3.dAinvt + k4.dAinvt);
        // keep positions in the box (harmless for evaluation, aids output)
        for (int i = 0; i < s.d; ++i) s.x[i] = std::fmod(s.x[i] + 64 * kTwoPi, kTwoPi);
        s.v.normalize();
        s.vch.normalize();
        auto renorm = [](Eigen::Matrix3d& M, double& logAcc, int d) {
            double n = M.topLeftCorner(d, d).norm();
            if (n > 1e6 || n < 1e-6) {
                M.topLeftCorner(d, d) /= n;
                logAcc += std::log(n);
            }
        };
        renorm(s.A, s.logNorm, s.d);
        renorm(s.Ainvt, s.logNormInvT, s.d);
    }
}

// A^{-T} w, with the accumulated renormalization folded back in.
// Returns the gradient of the kappa = 0 advected scalar at the particle if
// w = grad f0 at the particle's initial position.
inline Eigen::VectorXd pullback_gradient(const LagrangianState& s, const Eigen::VectorXd& w) {
    Eigen::VectorXd out = s.Ainvt_active() * w;
    return std::exp(s.logNormInvT) * out;
}
// log |A^{-T} w|: overflow-safe form of the same quantity.
inline double log_pullback_gradient_norm(const LagrangianState& s, const Eigen::VectorXd& w) {
    return s.logNormInvT + std::log((s.Ainvt_active() * w).norm());
}

struct DualityReport {
    Eigen::VectorXd sigma_A;      // singular values of A (with renorm folded in, as logs)
    Eigen::VectorXd sigma_Ainvt;  // same for A^{-T}
    double max_rel_error = 0;     // of sigma_i(A^{-T}) * sigma_{d-i+1}(A) = 1
    bool pass = false;
};

// Checks sigma_i(A^{-T}) = 1 / sigma_{d-i+1}(A).  Works in logs so that
// long runs (large logNorm) remain checkable.
inline DualityReport duality_check(const LagrangianState& s, double tol = 1e-8) {
    int d = s.d;
    Eigen::JacobiSVD<Eigen::MatrixXd> svdA(s.A_active());
    Eigen::JacobiSVD<Eigen::MatrixXd> svdT(s.Ainvt_active());
    DualityReport r;
    r.sigma_A.resize(d);
    r.sigma_Ainvt.resize(d);
    for (int i = 0; i < d; ++i) {
        r.sigma_A[i] = std::log(svdA.singularValues()[i]) + s.logNorm;
        r.sigma_Ainvt[i] = std::log(svdT.singularValues()[i]) + s.logNormInvT;
    }
    r.max_rel_error = 0;
    for (int i = 0; i < d; ++i) {
        // log sigma_i(A^{-T}) + log sigma_{d-i+1}(A) should be 0
        double e = std::abs(r.sigma_Ainvt[i] + r.sigma_A[d - 1 - i]);
        r.max_rel_error = std::max(r.max_rel_error, e);
    }
    r.pass = r.max_rel_error < tol;
    return r;
}

// log det of the actual (unrenormalized) Jacobian; should stay ~0.
inline double log_det_actual(const LagrangianState& s) {
    return std::log(std::abs(s.A_active().determinant())) + s.d * s.logNorm;
}

}  // namespace sflab
