#include <catch2/catch_amalgamated.hpp>

#include "sflab/fluid.hpp"
#include "sflab/flows.hpp"
#include "sflab/lagrangian.hpp"

#include "helpers.hpp"

using namespace sflab;
using testutil::kPi;

TEST_CASE("steady shear: closed orbit on the zero-strain line") {
    auto u = shear_x_2d(0.0);  // (cos x2, 0); at x2 = 0 pure translation
    FieldEvaluator ev(u);
    auto s = LagrangianState::start(2, Eigen::Vector2d(0, 0), Eigen::Vector2d(0.6, 0.8));
    for (int i = 0; i < 1000; ++i) flow_step(s, ev, 0.01);
    CHECK(s.x[0] == Catch::Approx(std::fmod(10.0, kTwoPi)).margin(1e-10));
    CHECK(std::abs(s.x[1]) < 1e-12);
    CHECK((s.A_active() - Eigen::Matrix2d::Identity()).norm() < 1e-10);
    CHECK(s.v[0] == Catch::Approx(0.6).margin(1e-10));
    CHECK(s.v[1] == Catch::Approx(0.8).margin(1e-10));
}

TEST_CASE("constant strain at a hyperbolic stagnation point") {
    // u = (sin y2, sin y1) has grad u = [[0,1],[1,0]] at the origin, a fixed
    // point; A_1 = cosh(t) I + sinh(t) S.
    auto u = hyperbolic_2d(0.0, 0.0);
    FieldEvaluator ev(u);
    auto s = LagrangianState::start(2, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0));
    double T = 1.0;
    int n = 2000;
    for (int i = 0; i < n; ++i) flow_step(s, ev, T / n);
    CHECK(s.x.norm() < 1e-12);
    Eigen::Matrix2d S;
    S << 0, 1, 1, 0;
    Eigen::Matrix2d expect =
        std::cosh(T) * Eigen::Matrix2d::Identity() + std::sinh(T) * S;
    CHECK((s.A_active() * std::exp(s.logNorm) - expect).norm() < 1e-9);
    // operator norm of A_1 is e^T
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.A_active());
    CHECK(svd.singularValues()[0] * std::exp(s.logNorm) == Catch::Approx(std::exp(T)).epsilon(1e-8));
}

TEST_CASE("volume preservation on random Stokes fields") {
    FluidModelConfig cfg;
    cfg.variant = FluidVariant::Stokes;
    cfg.d = 2;
    cfg.forcing = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 1.0);
    cfg.dt = 0.01;
    FluidModel model(cfg, 31);
    auto f = model.stationary_draw(0);
    FieldEvaluator ev(f.u);
    auto s = LagrangianState::start(2, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 0));
    for (int i = 0; i < 1000; ++i) {
        model.step(f);
        ev.update_coeffs(f.u);
        flow_step(s, ev, cfg.dt);
    }
    CHECK(std::abs(log_det_actual(s)) < 1e-6);
}

TEST_CASE("projective processes track the matrix cocycle") {
    FluidModelConfig cfg;
    cfg.variant = FluidVariant::Stokes;
    cfg.d = 2;
    cfg.forcing = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 1.0);
    cfg.dt = 0.005;
    FluidModel model(cfg, 32);
    auto f = model.stationary_draw(0);
    FieldEvaluator ev(f.u);
    Eigen::Vector2d v0(0.28, 0.96);
    auto s = LagrangianState::start(2, Eigen::Vector2d(0.5, 1.5), v0);
    for (int i = 0; i < 2000; ++i) {
        model.step(f);
        ev.update_coeffs(f.u);
        flow_step(s, ev, cfg.dt);
    }
    Eigen::Vector2d Av = (s.A_active() * v0).normalized();
    double angle = std::acos(std::min(1.0, std::abs(Av.dot(s.v.head<2>()))));
    CHECK(angle < 1e-6);
    Eigen::Vector2d Atv = (s.Ainvt_active() * v0).normalized();
    double angle2 = std::acos(std::min(1.0, std::abs(Atv.dot(s.vch.head<2>()))));
    CHECK(angle2 < 1e-6);
}

TEST_CASE("pullback_gradient") {
    SECTION("identity and rotation") {
        auto s = LagrangianState::start(2, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0));
        Eigen::Vector2d w(0.3, -0.4);
        CHECK((pullback_gradient(s, w) - Eigen::VectorXd(w)).norm() < 1e-15);
        double th = 0.7;
        s.Ainvt.topLeftCorner(2, 2) << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        CHECK(pullback_gradient(s, w).norm() == Catch::Approx(w.norm()));
    }
    SECTION("d=2 conjugation identity A^{-T} = R A R^{-1}") {
        NoiseStream ns{1, 0, 0, 0};
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::Matrix2d M;
            M << 1 + 0.3 * ns.normal(), 0.3 * ns.normal(), 0.3 * ns.normal(), 0;
            M(1, 1) = (1 + M(0, 1) * M(1, 0)) / M(0, 0);  // det = 1
            Eigen::Matrix2d R;
            R << 0, -1, 1, 0;
            Eigen::Matrix2d lhs = M.inverse().transpose();
            Eigen::Matrix2d rhs = R * M * R.inverse();
            CHECK((lhs - rhs).norm() < 1e-12 * M.norm());
        }
    }
}

TEST_CASE("duality_check") {
    SECTION("pinned diagonal") {
        auto s = LagrangianState::start(2, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0));
        s.A.topLeftCorner(2, 2) << 2, 0, 0, 0.5;
        s.Ainvt.topLeftCorner(2, 2) << 0.5, 0, 0, 2;
        auto r = duality_check(s);
        CHECK(r.pass);
        CHECK(std::exp(r.sigma_A[0]) == Catch::Approx(2.0));
        CHECK(std::exp(r.sigma_Ainvt[0]) == Catch::Approx(2.0));
    }
    SECTION("random SL2 and SL3 via the SVD oracle") {
        NoiseStream ns{2, 0, 0, 0};
        for (int d : {2, 3}) {
            for (int trial = 0; trial < 10; ++trial) {
                Eigen::MatrixXd M(d, d);
                for (int i = 0; i < d * d; ++i) M(i / d, i % d) = ns.normal();
                M /= std::pow(std::abs(M.determinant()), 1.0 / d);
                auto s = LagrangianState::start(d, Eigen::VectorXd::Zero(d),
                                                Eigen::VectorXd::Unit(d, 0));
                s.A.topLeftCorner(d, d) = M;
                s.Ainvt.topLeftCorner(d, d) = M.inverse().transpose();
                auto r = duality_check(s);
                CHECK(r.pass);
                if (d == 2)  // top singular values of A and A^{-T} coincide
                    CHECK(r.sigma_A[0] == Catch::Approx(r.sigma_Ainvt[0]).margin(1e-10));
                else  // sigma_1(A^{-T}) = 1/sigma_3(A)
                    CHECK(r.sigma_Ainvt[0] == Catch::Approx(-r.sigma_A[2]).margin(1e-10));
            }
        }
    }
    SECTION("integrated run, d=3 Stokes") {
        FluidModelConfig cfg;
        cfg.variant = FluidVariant::Stokes;
        cfg.d = 3;
        cfg.forcing = ForcingSpec::uniform(
            3, {Wavevector(1, 0, 0), Wavevector(0, 1, 0), Wavevector(0, 0, 1)}, 1.0);
        cfg.dt = 0.002;
        FluidModel model(cfg, 33);
        auto f = model.stationary_draw(0);
        FieldEvaluator ev(f.u);
        auto s = LagrangianState::start(3, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 0, 0));
        for (int i = 0; i < 1000; ++i) {
            model.step(f);
            ev.update_coeffs(f.u);
            flow_step(s, ev, cfg.dt);
        }
        auto r = duality_check(s, 1e-8);
        CHECK(r.pass);
    }
}

TEST_CASE("incompressibility of the numerical flow map (simplex area)") {
    FluidModelConfig cfg;
    cfg.variant = FluidVariant::Stokes;
    cfg.d = 2;
    cfg.forcing = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 1.0);
    cfg.dt = 0.01;
    FluidModel model(cfg, 34);
    auto f = model.stationary_draw(0);
    // advect a small triangle of particles and track its area
    double h = 1e-4;
    Eigen::Vector2d p0(2.0, 1.0), p1 = p0 + Eigen::Vector2d(h, 0), p2 = p0 + Eigen::Vector2d(0, h);
    auto s0 = LagrangianState::start(2, p0, Eigen::Vector2d(1, 0));
    auto s1 = LagrangianState::start(2, p1, Eigen::Vector2d(1, 0));
    auto s2 = LagrangianState::start(2, p2, Eigen::Vector2d(1, 0));
    FieldEvaluator ev(f.u);
    for (int i = 0; i < 200; ++i) {
        model.step(f);
        ev.update_coeffs(f.u);
        flow_step(s0, ev, cfg.dt);
        flow_step(s1, ev, cfg.dt);
        flow_step(s2, ev, cfg.dt);
    }
    auto area = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
        double ux = b[0] - a[0], uy = b[1] - a[1], vx = c[0] - a[0], vy = c[1] - a[1];
        return 0.5 * std::abs(ux * vy - uy * vx);
    };
    // particle positions were wrapped mod 2pi; unwrap by comparing without wrap:
    // rerun unwrapped displacement via the A matrix instead -- the simplex area
    // relative change is bounded by the Jacobian determinant drift plus O(h).
    double a_end = area(s0.x, s1.x, s2.x);
    double a_start = 0.5 * h * h;
    // wrap can break the simplex; only assert when all corners stayed close
    double dmax = std::max((s0.x - s1.x).norm(), (s0.x - s2.x).norm());
    if (dmax < 1.0) CHECK(a_end == Catch::Approx(a_start).epsilon(0.05));
}
