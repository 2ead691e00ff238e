#include <catch2/catch_amalgamated.hpp>

#include "sflab/flows.hpp"
#include "sflab/yaglom.hpp"

#include "helpers.hpp"

using namespace sflab;
using testutil::kPi;

namespace {

FluidModelConfig stokes2d() {
    FluidModelConfig cfg;
    cfg.variant = FluidVariant::Stokes;
    cfg.d = 2;
    cfg.forcing = ForcingSpec::uniform(
        2, {Wavevector(1, 0), Wavevector(0, 1), Wavevector(1, 1), Wavevector(1, -1)}, 1.0);
    cfg.dt = 0.01;
    return cfg;
}

ForcingSpec unit_source2() {
    return ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 1.0);
}

}  // namespace

TEST_CASE("sphere averages of the basis against angular quadrature") {
    for (double z : {0.1, 0.7, 2.3, 4.0}) {
        // d = 2: circle average of cos(z cos theta)
        double avg2 = 0;
        const int M = 512;
        for (int i = 0; i < M; ++i) avg2 += std::cos(z * std::cos(2 * kPi * i / M));
        avg2 /= M;
        CHECK(sphere_avg_basis(2, z) == Catch::Approx(avg2).margin(1e-12));
        // d = 3: (1/2) int cos(z cos t) sin t dt
        double avg3 = 0;
        for (int i = 0; i < M; ++i) {
            double t = kPi * (i + 0.5) / M;
            avg3 += std::cos(z * std::cos(t)) * std::sin(t) * (kPi / M);
        }
        avg3 /= 2.0;
        CHECK(sphere_avg_basis(3, z) == Catch::Approx(avg3).margin(1e-6));
        // derivatives by central differences
        for (int d : {2, 3}) {
            double h = 1e-5;
            double fd1 = (sphere_avg_basis(d, z + h) - sphere_avg_basis(d, z - h)) / (2 * h);
            CHECK(sphere_avg_basis_d1(d, z) == Catch::Approx(fd1).margin(1e-8));
            double fd2 = (sphere_avg_basis_d1(d, z + h) - sphere_avg_basis_d1(d, z - h)) / (2 * h);
            CHECK(sphere_avg_basis_d2(d, z) == Catch::Approx(fd2).margin(1e-6));
        }
    }
    CHECK(sphere_avg_basis(2, 0.0) == 1.0);
    CHECK(sphere_avg_basis(3, 0.0) == 1.0);
}

TEST_CASE("abar closed form") {
    auto src = unit_source2();
    CHECK(abar_closed(src, 0.0) == Catch::Approx(scalar_injection_rate(src)));
    // single |k| = 1 shell: abar(l) = epsbar J0(l)
    CHECK(abar_closed(src, 1.7) ==
          Catch::Approx(scalar_injection_rate(src) * std::cyl_bessel_j(0, 1.7)).margin(1e-14));
}

TEST_CASE("structure functions on the synthetic pair u = (sin x2, 0), g = sin x1") {
    auto u = shear_x_2d(kPi / 2);  // cos(x2 - pi/2) = sin x2
    auto g = make_scalar(2, {Wavevector(1, 0), Wavevector(-1, 0)});
    g.coeffs = {1.0, 0.0};
    StructureFunctionOptions opt;
    opt.ell_max = 3.0;
    opt.n_ell = 30;
    opt.base_grid = 8;  // exact quadrature in x for degree-2 integrands
    opt.n_dirs = 32;
    auto tab = structure_functions({{u, g}}, ForcingSpec{}, opt);
    CHECK(tab.Dbar[0] == 0.0);
    CHECK(tab.Gbar[0] == Catch::Approx(1.0).margin(1e-12));  // 2 avg g^2 = 1
    // independent oracle: dense x-grid and 128 angles
    for (int j : {5, 12, 25}) {
        double l = tab.ell[j];
        double D = 0, G = 0;
        const int MX = 16, MA = 128;
        for (int a = 0; a < MA; ++a) {
            double th = 2 * kPi * a / MA;
            Eigen::Vector2d n(std::cos(th), std::sin(th));
            for (int i = 0; i < MX; ++i)
                for (int k = 0; k < MX; ++k) {
                    Eigen::Vector2d x(2 * kPi * i / MX, 2 * kPi * k / MX);
                    double g0 = std::sin(x[0]), gl = std::sin(x[0] + l * n[0]);
                    double du = (std::sin(x[1] + l * n[1]) - std::sin(x[1])) * n[0];
                    D += (gl - g0) * (gl - g0) * du;
                    G += g0 * gl;
                }
        }
        D *= 2.0 / (MA * MX * MX);
        G *= 2.0 / (MA * MX * MX);
        CHECK(tab.Dbar[j] == Catch::Approx(D).margin(5e-4 * std::max(1.0, std::abs(D))));
        CHECK(tab.Gbar[j] == Catch::Approx(G).margin(1e-6));
        // spectral form of Gbar for the single-mode scalar
        CHECK(tab.Gbar[j] == Catch::Approx(std::cyl_bessel_j(0, l)).margin(1e-6));
    }
}

TEST_CASE("zero scalar gives identically zero flux") {
    auto u = shear_x_2d(0.0);
    auto g = make_scalar(2, {Wavevector(1, 0)});
    g.coeffs = {0.0};
    StructureFunctionOptions opt;
    opt.n_ell = 10;
    opt.n_base = 4;
    auto tab = structure_functions({{u, g}}, ForcingSpec{}, opt);
    for (double v : tab.Dbar) CHECK(v == 0.0);
}

TEST_CASE("KHM residual vanishes for the u = 0 diffusive scalar") {
    auto empty_u = make_velocity(2, {});
    ScalarSolver solver(2, 4, empty_u);
    double kappa = 0.5;
    ScalarState s = solver.initial_state(kappa, unit_source2(), 81);
    double dt = 0.05;
    for (int i = 0; i < 800; ++i) solver.step(s, empty_u, dt);  // burn
    std::vector<std::pair<SpectralField, SpectralField>> snaps;
    for (int k = 0; k < 12; ++k) {
        for (int i = 0; i < 200; ++i) solver.step(s, empty_u, dt);
        snaps.push_back({empty_u, s.g});
    }
    StructureFunctionOptions opt;
    opt.ell_max = 2.8;
    opt.n_ell = 40;
    opt.n_base = 6;
    opt.n_dirs = 16;
    auto rep = khm_residual(snaps, unit_source2(), kappa, 2.5, opt);
    CHECK(std::abs(rep.residual) < std::max(3 * rep.residual_se, 0.01));
    CHECK_THROWS(khm_residual(snaps, unit_source2(), kappa, 3.5, opt));
}

TEST_CASE("KHM residual on the full stationary Stokes + scalar run") {
    auto cfg = stokes2d();
    ScalarRunOptions ropt;
    ropt.burn_in = 40;
    ropt.horizon = 600;
    ropt.sample_spacing = 0.5;
    ropt.n_snapshots = 40;
    ropt.seed = 82;
    double kappa = 0.25;
    auto run = run_stationary_scalar(cfg, 10, kappa, unit_source2(), ropt);
    REQUIRE(run.snapshots.size() == 40);
    StructureFunctionOptions opt;
    opt.ell_max = 2.8;
    opt.n_ell = 40;
    opt.n_base = 8;
    opt.n_dirs = 24;
    opt.seed = 82;
    auto rep = khm_residual(run.snapshots, unit_source2(), kappa, 2.5, opt);
    CHECK(std::abs(rep.residual) < std::max(3 * rep.residual_se, 0.05));

    SECTION("MC flux matches the ODE-implied flux") {
        auto tab = structure_functions(run.snapshots, unit_source2(), opt);
        // the prediction is linear in the mode moments, so its MC error is
        // the cross-snapshot spread of per-snapshot predictions
        size_t ns = run.snapshots.size();
        std::vector<std::vector<double>> preds;
        for (const auto& p : run.snapshots) {
            auto mm1 = ModeMoments::from_snapshots({p.second});
            preds.push_back(integrate_khm_ode(mm1, unit_source2(), kappa, 2, tab.ell));
        }
        for (int j : {8, 16, 24, 32}) {
            double mp = 0;
            for (const auto& p : preds) mp += p[j];
            mp /= ns;
            double vp = 0;
            for (const auto& p : preds) vp += (p[j] - mp) * (p[j] - mp);
            double se_pred = std::sqrt(vp / (ns - 1) / ns);
            double tol = 4 * (tab.Dbar_se[j] + se_pred) + 0.05;
            CHECK(std::abs(tab.Dbar[j] - mp) < tol);
        }
    }
}

TEST_CASE("yaglom_check window logic") {
    // synthetic d = 3 table realizing the exact law Dbar = -(4/3) epsbar l
    ForcingSpec src3 = ForcingSpec::uniform(
        3, {Wavevector(1, 0, 0), Wavevector(0, 1, 0), Wavevector(0, 0, 1)}, 1.0);
    double epsbar = scalar_injection_rate(src3);
    StructureFunctionTable tab;
    tab.d = 3;
    for (int j = 0; j <= 50; ++j) {
        double l = 0.06 * j;
        tab.ell.push_back(l);
        tab.Dbar.push_back(-(4.0 / 3.0) * epsbar * l);
    }
    ModeMoments mm;  // weak small-scale content: tiny dissipative range
    mm.knorm = {1.0};
    mm.m2 = {1.0};
    auto rep = yaglom_check(tab, mm, src3, 1e-4, 2.5);
    CHECK(rep.window_nonempty);
    CHECK(rep.worst_dev < 1e-12);
    CHECK(rep.plateau_ref == Catch::Approx(-(4.0 / 3.0) * epsbar));
    CHECK(rep.plateau_ref_dim == Catch::Approx(-(4.0 / 3.0) * epsbar));  // d = 3

    // huge kappa: diffusion dominates everywhere, empty window reported
    auto rep2 = yaglom_check(tab, mm, src3, 50.0, 2.5);
    CHECK_FALSE(rep2.window_nonempty);
    CHECK_FALSE(rep2.pass);

    // ell_D grows with kappa
    double lD_prev = 0;
    for (double kap : {1e-3, 1e-2, 1e-1}) {
        auto r = yaglom_check(tab, mm, src3, kap, 2.5);
        CHECK(r.ell_D >= lD_prev);
        lD_prev = r.ell_D;
    }
}
