#pragma once

// Smooth finite-horizon controls steering (u, x, v) between prescribed
// endpoints.  Shear phases translate the particle one coordinate at a time;
// cellular phases rotate v at a stagnation point without moving x.  Every
// scheduled shape is a steady Euler flow and a |k|^2 = 1 Stokes
// eigenfunction, so the forcing (f' + f) * shape makes the deterministic
// PDE track the schedule exactly.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fluid.hpp"
#include "flows.hpp"
#include "lagrangian.hpp"

namespace sflab {

enum class ControlFlow { shear, rotation, hyperbolic };

namespace detail {

// canonical C_c^infty bump on (0,1)
inline double bump(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return std::exp(-1.0 / (s * (1.0 - s)));
}
inline double bump_dt(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double g = s * (1.0 - s);
    return bump(s) * (1.0 - 2.0 * s) / (g * g);
}
// integral of bump over (0,1); trapezoid converges superalgebraically here
inline double bump_mass() {
    static const double mass = [] {
        const int n = 4096;
        double acc = 0;
        for (int i = 1; i < n; ++i) acc += bump(double(i) / n);
        return acc / n;
    }();
    return mass;
}

// principal angle/displacement in (-pi, pi]
inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a > kTwoPi / 2) a -= kTwoPi;
    if (a <= -kTwoPi / 2) a += kTwoPi;
    return a;
}

}  // namespace detail

struct ControlPhase {
    double t0 = 0, t1 = 1;
    ControlFlow type = ControlFlow::shear;
    double integral = 0;  // prescribed integral of the amplitude profile
    SpectralField shape;  // unit-amplitude velocity shape

    double profile(double t) const {
        double w = t1 - t0;
        return integral / (w * detail::bump_mass()) * detail::bump((t - t0) / w);
    }
    double profile_dt(double t) const {
        double w = t1 - t0;
        return integral / (w * w * detail::bump_mass()) * detail::bump_dt((t - t0) / w);
    }
};

struct ControlPlan {
    int d = 2;
    std::vector<ControlPhase> phases;
    Eigen::VectorXd x0, v0, x1, v1;

    // scheduled velocity field u_t (at most one phase is active at a time)
    SpectralField velocity(double t) const {
        SpectralField u = make_velocity(d, {});
        for (const auto& p : phases) {
            double f = p.profile(t);
            if (f == 0.0) continue;
            for (size_t m = 0; m < p.shape.n_modes(); ++m) {
                size_t idx = ensure_mode(u, p.shape.modes[m]);
                for (int c = 0; c < u.ncomp; ++c) u.at(idx, c) += f * p.shape.at(m, c);
            }
        }
        return u;
    }
    // control forcing Qg(t) = sum (f' + lambda f) shape, lambda = 1 shapes
    SpectralField forcing(double t) const {
        SpectralField g = make_velocity(d, {});
        for (const auto& p : phases) {
            double a = p.profile_dt(t) + p.profile(t);
            if (a == 0.0) continue;
            for (size_t m = 0; m < p.shape.n_modes(); ++m) {
                size_t idx = ensure_mode(g, p.shape.modes[m]);
                for (int c = 0; c < g.ncomp; ++c) g.at(idx, c) += a * p.shape.at(m, c);
            }
        }
        return g;
    }
};

// (-sin(y2 - b), sin(y1 - a)): counterclockwise rotation at the stagnation
// point (a, b); negative of cellular_2d
inline SpectralField rotation_2d(double a, double b) {
    SpectralField f = cellular_2d(a, b);
    for (auto& c : f.coeffs) c = -c;
    return f;
}

// Three-phase (d=2) / six-phase (d=3) endpoint control for (u, x, v).
inline ControlPlan synthesize_control(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                                      const Eigen::VectorXd& xp, const Eigen::VectorXd& vp) {
    const int d = int(x.size());
    if (d != 2 && d != 3) throw std::invalid_argument("synthesize_control: d must be 2 or 3");
    ControlPlan plan;
    plan.d = d;
    plan.x0 = x;
    plan.v0 = v;
    plan.x1 = xp;
    plan.v1 = vp;
    auto wrap = detail::wrap_angle;
    if (d == 2) {
        // shear-x on (0, 1/4): integral a1 - a0, shifted to keep grad u = 0
        // at the particle so v is untouched
        plan.phases.push_back(
            {0.0, 0.25, ControlFlow::shear, wrap(xp[0] - x[0]), shear_x_2d(x[1])});
        // shear-y on (1/4, 1/2)
        plan.phases.push_back(
            {0.25, 0.5, ControlFlow::shear, wrap(xp[1] - x[1]), shear_y_2d(xp[0])});
        // cellular rotation on (1/2, 1) centered at the final position
        double dth = wrap(std::atan2(vp[1], vp[0]) - std::atan2(v[1], v[0]));
        plan.phases.push_back(
            {0.5, 1.0, ControlFlow::rotation, dth, rotation_2d(xp[0], xp[1])});
        return plan;
    }
    // d = 3: one shear per axis, each constant in the coordinate it reads
    plan.phases.push_back(
        {0.0, 0.125, ControlFlow::shear, wrap(xp[0] - x[0]), shear_3d(0, 1, x[1])});
    plan.phases.push_back(
        {0.125, 0.25, ControlFlow::shear, wrap(xp[1] - x[1]), shear_3d(1, 2, x[2])});
    plan.phases.push_back(
        {0.25, 0.375, ControlFlow::shear, wrap(xp[2] - x[2]), shear_3d(2, 0, xp[0])});
    // longitude / latitude / longitude rotations about the z and x axes
    double rho = std::hypot(v[0], v[1]), rhop = std::hypot(vp[0], vp[1]);
    double a1 = (rho < 1e-14) ? 0.0 : wrap(kTwoPi / 4 - std::atan2(v[1], v[0]));
    double beta = std::asin(std::clamp(vp[2], -1.0, 1.0)) -
                  std::asin(std::clamp(v[2], -1.0, 1.0));
    double a2 = (rhop < 1e-14) ? 0.0 : wrap(std::atan2(vp[1], vp[0]) - kTwoPi / 4);
    plan.phases.push_back({0.5, 2.0 / 3.0, ControlFlow::rotation, a1,
                           cellular_plane_3d(0, 1, xp[0], xp[1])});
    plan.phases.push_back({2.0 / 3.0, 5.0 / 6.0, ControlFlow::rotation, beta,
                           cellular_plane_3d(1, 2, xp[1], xp[2])});
    plan.phases.push_back({5.0 / 6.0, 1.0, ControlFlow::rotation, a2,
                           cellular_plane_3d(0, 1, xp[0], xp[1])});
    return plan;
}

struct ControlState {
    Eigen::VectorXd x, v;
    Eigen::MatrixXd A;
};

// RK4 integration of (x, v, A) along the scheduled flow.
inline ControlState integrate_control(const ControlPlan& plan, long n_steps = 40000) {
    const int d = plan.d;
    ControlState s;
    s.x = plan.x0;
    s.v = plan.v0;
    s.A = Eigen::MatrixXd::Identity(d, d);
    std::vector<FieldEvaluator> evs;
    for (const auto& p : plan.phases) evs.emplace_back(p.shape);
    struct Deriv {
        Eigen::VectorXd dx, dv;
        Eigen::MatrixXd dA;
    };
    auto rhs = [&](double t, const Eigen::VectorXd& xx, const Eigen::VectorXd& vv,
                   const Eigen::MatrixXd& AA) {
        Deriv out{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
                  Eigen::MatrixXd::Zero(d, d)};
        for (size_t i = 0; i < plan.phases.size(); ++i) {
            double f = plan.phases[i].profile(t);
            if (f == 0.0) continue;
            Eigen::VectorXd uval(d);
            evs[i].velocity(xx.data(), uval.data());
            Eigen::MatrixXd G(d, d);
            std::vector<double> gbuf(d * d);
            evs[i].gradient(xx.data(), gbuf.data());
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) G(r, c) = gbuf[r * d + c];
            out.dx += f * uval;
            Eigen::VectorXd gv = G * vv;
            out.dv += f * (gv - vv.dot(gv) * vv);
            out.dA += f * G * AA;
        }
        return out;
    };
    const double h = 1.0 / double(n_steps);
    double t = 0;
    for (long i = 0; i < n_steps; ++i) {
        Deriv k1 = rhs(t, s.x, s.v, s.A);
        Deriv k2 = rhs(t + h / 2, s.x + h / 2 * k1.dx, s.v + h / 2 * k1.dv, s.A + h / 2 * k1.dA);
        Deriv k3 = rhs(t + h / 2, s.x + h / 2 * k2.dx, s.v + h / 2 * k2.dv, s.A + h / 2 * k2.dA);
        Deriv k4 = rhs(t + h, s.x + h * k3.dx, s.v + h * k3.dv, s.A + h * k3.dA);
        s.x += h / 6 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
        s.v += h / 6 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
        s.A += h / 6 * (k1.dA + 2 * k2.dA + 2 * k3.dA + k4.dA);
        s.v.normalize();
        t += h;
    }
    return s;
}

inline double torus_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double acc = 0;
    for (int i = 0; i < a.size(); ++i) {
        double diff = detail::wrap_angle(a[i] - b[i]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

struct ControlEndpointReport {
    double x_error = 0;  // torus distance to the target position
    double v_error = 0;  // chordal distance to the target direction
};

inline ControlEndpointReport control_endpoint_errors(const ControlPlan& plan,
                                                     long n_steps = 40000) {
    ControlState s = integrate_control(plan, n_steps);
    ControlEndpointReport rep;
    rep.x_error = torus_distance(s.x, plan.x1);
    rep.v_error = (s.v - plan.v1).norm();
    return rep;
}

// Integrate the deterministic spectral PDE du = (-Au - B(u,u) + Qg) dt from
// u = 0 and return the worst deviation from the scheduled flow.
inline double controlled_pde_residual(const ControlPlan& plan, int N, long n_steps = 20000) {
    const int d = plan.d;
    SpectralField u = make_velocity(d, modes_in_ball(d, N));
    const size_t nm = u.n_modes();
    auto rhs = [&](double t, const SpectralField& uu) {
        SpectralField B = euler_nonlinearity(uu, N);
        SpectralField g = plan.forcing(t);
        std::vector<double> out(uu.coeffs.size(), 0.0);
        for (size_t m = 0; m < nm; ++m) {
            double lam = uu.modes[m].norm2();
            for (int c = 0; c < uu.ncomp; ++c)
                out[m * uu.ncomp + c] = -lam * uu.at(m, c) - B.at(m, c);
        }
        for (size_t m = 0; m < g.n_modes(); ++m) {
            int idx = u.find_mode(g.modes[m]);
            if (idx < 0) throw std::logic_error("control forcing outside the resolved ball");
            for (int c = 0; c < g.ncomp; ++c) out[idx * g.ncomp + c] += g.at(m, c);
        }
        return out;
    };
    auto add = [&](const SpectralField& base, const std::vector<double>& delta, double a) {
        SpectralField out = base;
        for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += a * delta[i];
        return out;
    };
    const double h = 1.0 / double(n_steps);
    double t = 0, worst = 0;
    for (long i = 0; i < n_steps; ++i) {
        auto k1 = rhs(t, u);
        auto k2 = rhs(t + h / 2, add(u, k1, h / 2));
        auto k3 = rhs(t + h / 2, add(u, k2, h / 2));
        auto k4 = rhs(t + h, add(u, k3, h));
        for (size_t j = 0; j < u.coeffs.size(); ++j)
            u.coeffs[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        t += h;
        SpectralField sched = plan.velocity(t);
        double err2 = 0;
        for (size_t m = 0; m < nm; ++m) {
            int idx = sched.find_mode(u.modes[m]);
            for (int c = 0; c < u.ncomp; ++c) {
                double ref = (idx >= 0) ? sched.at(idx, c) : 0.0;
                double diff = u.at(m, c) - ref;
                err2 += diff * diff;
            }
        }
        worst = std::max(worst, std::sqrt(err2));
    }
    return worst;
}

struct JacobianGrowthReport {
    double norm_A = 0;   // operator norm of A_1
    double x_drift = 0;  // |x_1 - x_0|
    Eigen::MatrixXd A;
    ControlPlan plan;
};

// Hyperbolic cellular control centered at the particle: A_1 = exp(log M * S)
// with S = [[0,1],[1,0]], so |A_1| = M while x stays pinned.
inline JacobianGrowthReport jacobian_growth_demo(double M, const Eigen::Vector2d& x0,
                                                 long n_steps = 40000) {
    if (M < 1.0) throw std::invalid_argument("jacobian_growth_demo: M must be >= 1");
    JacobianGrowthReport rep;
    rep.plan.d = 2;
    rep.plan.x0 = rep.plan.x1 = x0;
    rep.plan.v0 = rep.plan.v1 = Eigen::Vector2d(1, 0);
    rep.plan.phases.push_back(
        {0.0, 1.0, ControlFlow::hyperbolic, std::log(M), hyperbolic_2d(x0[0], x0[1])});
    ControlState s = integrate_control(rep.plan, n_steps);
    rep.A = s.A;
    rep.norm_A = s.A.jacobiSvd().singularValues()[0];
    rep.x_drift = torus_distance(s.x, x0);
    return rep;
}

struct ShadowingReport {
    int n_traj = 0;
    int hits = 0;
    double hit_fraction = 0;
};

// Empirical positivity probe for the transition kernel: fraction of noisy
// trajectories started at (0, x, v) ending within eps of (0, x', v').
inline ShadowingReport noise_shadowing_probe(const FluidModelConfig& cfg,
                                             const ControlPlan& plan, double eps, int n_traj,
                                             uint64_t seed) {
    ShadowingReport rep;
    rep.n_traj = n_traj;
    long steps = long(1.0 / cfg.dt + 0.5);
    for (int traj = 0; traj < n_traj; ++traj) {
        FluidModel model(cfg, seed, uint64_t(traj));
        FluidState f = model.initial_state();  // u = 0
        auto ls = LagrangianState::start(plan.d, plan.x0, plan.v0);
        FieldEvaluator ev(f.u);
        for (long i = 0; i < steps; ++i) {
            model.step(f);
            ev.update_coeffs(f.u);
            flow_step(ls, ev, cfg.dt);
        }
        Eigen::VectorXd xe = ls.x.head(plan.d), ve = ls.v.head(plan.d);
        double du = std::sqrt(f.u.norm2());
        double dx = torus_distance(xe, plan.x1);
        double dv = (ve - plan.v1).norm();
        if (du <= eps && dx <= eps && dv <= eps) ++rep.hits;
    }
    rep.hit_fraction = double(rep.hits) / double(n_traj);
    return rep;
}

}  // namespace sflab
