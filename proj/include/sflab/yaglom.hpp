#pragma once

// Two-point statistics of the advected scalar, the stationary KHM balance,
// and the inertial-range flux law.  Conventions (fixed across the library):
//   G(y) = 2 E avg_x g(x) g(x+y)          (so G(0) = E sum of coeffs^2)
//   D(y) = 2 E avg_x |delta_y g|^2 delta_y u
//   a(y) = (1/2) sum_k qtilde_k^2 cos(k.y)   (so a(0) = epsbar)
// Sphere (d=3) / circle (d=2) averages are denoted Dbar, Gbar, abar.
// Stationary identity, weak form over radial test functions eta:
//   (1/2) int grad eta . D = 2 kappa int (Lap eta) G + 2 int eta a
// and its sphere-averaged ODE:
//   d/dl (l^{d-1} Dbar) = -l^{d-1} [ 4 kappa (Gbar'' + (d-1) Gbar'/l) + 4 abar ]
// whose source-dominated regime gives the plateau Dbar/l -> -(4/d) abar(0).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "lyapunov.hpp"  // direction_grid
#include "scalar.hpp"

namespace sflab {

// average of cos(k . l n) over directions n: J0 (d=2) or sinc (d=3)
inline double sphere_avg_basis(int d, double z) {
    if (d == 2) return std::cyl_bessel_j(0, z);
    return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
}
inline double sphere_avg_basis_d1(int d, double z) {
    if (d == 2) return -std::cyl_bessel_j(1, z);
    if (std::abs(z) < 1e-4) return -z / 3.0 + z * z * z / 30.0;
    return (z * std::cos(z) - std::sin(z)) / (z * z);
}
inline double sphere_avg_basis_d2(int d, double z) {
    if (d == 2) {
        if (std::abs(z) < 1e-8) return -0.5;
        // J0'' = -J1' = -(J0 - J1/z)
        return -std::cyl_bessel_j(0, z) + std::cyl_bessel_j(1, z) / z;
    }
    if (std::abs(z) < 1e-4) return -1.0 / 3.0 + z * z / 10.0;
    return (2 * std::sin(z) - 2 * z * std::cos(z) - z * z * std::sin(z)) / (z * z * z);
}

// abar(l) in closed form from the source table
inline double abar_closed(const ForcingSpec& source, double ell) {
    double s = 0;
    for (const auto& [k, q] : source.table) s += 0.5 * q * q * sphere_avg_basis(source.d, k.norm() * ell);
    return s;
}

// per-mode second moments E c_k^2, averaged over an ensemble of snapshots
struct ModeMoments {
    std::vector<double> knorm;
    std::vector<double> m2;

    static ModeMoments from_snapshots(const std::vector<SpectralField>& gs) {
        if (gs.empty()) throw std::invalid_argument("no snapshots");
        ModeMoments mm;
        size_t n = gs[0].n_modes();
        mm.knorm.resize(n);
        mm.m2.assign(n, 0.0);
        for (size_t m = 0; m < n; ++m) mm.knorm[m] = gs[0].modes[m].norm();
        for (const auto& g : gs)
            for (size_t m = 0; m < n; ++m) mm.m2[m] += g.coeffs[m] * g.coeffs[m];
        for (auto& v : mm.m2) v /= gs.size();
        return mm;
    }

    double gbar(int d, double ell) const {
        double s = 0;
        for (size_t m = 0; m < m2.size(); ++m) s += m2[m] * sphere_avg_basis(d, knorm[m] * ell);
        return s;
    }
    double gbar_d1(int d, double ell) const {
        double s = 0;
        for (size_t m = 0; m < m2.size(); ++m)
            s += m2[m] * knorm[m] * sphere_avg_basis_d1(d, knorm[m] * ell);
        return s;
    }
    // radial Laplacian of Gbar: Gbar'' + (d-1) Gbar'/l; equals
    // -sum m2 |k|^2 Phi(|k| l) since Phi solves the radial Helmholtz equation
    double gbar_radial_lap(int d, double ell) const {
        double s = 0;
        for (size_t m = 0; m < m2.size(); ++m)
            s += m2[m] * knorm[m] * knorm[m] * sphere_avg_basis(d, knorm[m] * ell);
        return -s;
    }
};

struct StructureFunctionTable {
    std::vector<double> ell;
    std::vector<double> Dbar, Dbar_se;
    std::vector<double> Gbar, Gbar_se;
    std::vector<double> abar;  // closed form
    int d = 2;
    int n_samples = 0;
};

struct StructureFunctionOptions {
    double ell_max = 3.0;
    int n_ell = 60;
    int n_base = 8;       // random base points per snapshot (grid if base_grid > 0)
    int base_grid = 0;    // M: use an M^d equispaced base grid (exact quadrature)
    int n_dirs = 64;      // equispaced (d=2) / Fibonacci (d=3) directions
    uint64_t seed = 1;
};

// Mixed structure functions by ray evaluation with per-mode phase recurrence.
// Directions are deterministic quadrature nodes; base points are Monte-Carlo
// (or an exact grid); the standard error is taken across snapshots.
inline StructureFunctionTable structure_functions(
    const std::vector<std::pair<SpectralField, SpectralField>>& snapshots,
    const ForcingSpec& source, const StructureFunctionOptions& opt) {
    if (snapshots.empty()) throw std::invalid_argument("no snapshots");
    const int d = snapshots[0].second.d;
    const int nl = opt.n_ell;
    const double dl = opt.ell_max / nl;
    StructureFunctionTable tab;
    tab.d = d;
    for (int j = 0; j <= nl; ++j) tab.ell.push_back(j * dl);
    auto dirs = direction_grid(d, opt.n_dirs);  // projective; signs covered by symmetry
    std::vector<Eigen::VectorXd> bases;
    if (opt.base_grid > 0) {
        int M = opt.base_grid;
        Eigen::VectorXd x(d);
        if (d == 2) {
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j) {
                    x << kTwoPi * i / M, kTwoPi * j / M;
                    bases.push_back(x);
                }
        } else {
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j)
                    for (int l = 0; l < M; ++l) {
                        x << kTwoPi * i / M, kTwoPi * j / M, kTwoPi * l / M;
                        bases.push_back(x);
                    }
        }
    }
    const size_t ns = snapshots.size();
    std::vector<std::vector<double>> Dsnap(ns), Gsnap(ns);
    for (size_t is = 0; is < ns; ++is) {
        const SpectralField& u = snapshots[is].first;
        const SpectralField& g = snapshots[is].second;
        const size_t ng = g.n_modes();
        // per-site velocity vector amplitudes
        std::vector<std::array<double, 3>> w(u.n_modes(), {0, 0, 0});
        for (size_t m = 0; m < u.n_modes(); ++m) {
            GammaFrame gf = gamma_frame(u.modes[m]);
            for (int c = 0; c < d - 1; ++c)
                for (int i = 0; i < d; ++i) w[m][i] += u.at(m, c) * gf.columns(i, c);
        }
        std::vector<double> Dacc(nl + 1, 0.0), Gacc(nl + 1, 0.0);
        long count = 0;
        std::vector<Eigen::VectorXd> pts = bases;
        if (pts.empty()) {
            NoiseStream bs{opt.seed, is, 0x0BA5E, 0};
            for (int b = 0; b < opt.n_base; ++b) {
                Eigen::VectorXd x(d);
                for (int i = 0; i < d; ++i) x[i] = kTwoPi * bs.uniform();
                pts.push_back(x);
            }
        }
        std::vector<std::complex<double>> E(ng), W(ng);
        for (const auto& x : pts) {
            for (const auto& n0 : dirs) {
                // both orientations of each projective direction
                for (int sgn : {+1, -1}) {
                    Eigen::VectorXd n = sgn * n0;
                    // scalar modes: phase state and per-step rotation
                    for (size_t m = 0; m < ng; ++m) {
                        double ph = 0, dph = 0;
                        for (int i = 0; i < d; ++i) {
                            ph += g.modes[m][i] * x[i];
                            dph += g.modes[m][i] * n[i];
                        }
                        E[m] = std::polar(1.0, ph);
                        W[m] = std::polar(1.0, dph * dl);
                    }
                    double g0 = 0;
                    for (size_t m = 0; m < ng; ++m)
                        g0 += g.coeffs[m] *
                              (positive_half(g.modes[m]) ? E[m].imag() : E[m].real());
                    // velocity along the ray (sparse, direct)
                    auto u_dot_n = [&](const Eigen::VectorXd& y) {
                        double s = 0;
                        for (size_t m = 0; m < u.n_modes(); ++m) {
                            double ph = 0;
                            for (int i = 0; i < d; ++i) ph += u.modes[m][i] * y[i];
                            double e = positive_half(u.modes[m]) ? std::sin(ph) : std::cos(ph);
                            double wn = 0;
                            for (int i = 0; i < d; ++i) wn += w[m][i] * n[i];
                            s += wn * e;
                        }
                        return s;
                    };
                    double un0 = u_dot_n(x);
                    for (int j = 1; j <= nl; ++j) {
                        double gl = 0;
                        for (size_t m = 0; m < ng; ++m) {
                            E[m] *= W[m];
                            gl += g.coeffs[m] *
                                  (positive_half(g.modes[m]) ? E[m].imag() : E[m].real());
                        }
                        double dg = gl - g0;
                        double du = u_dot_n(x + tab.ell[j] * n) - un0;
                        Dacc[j] += dg * dg * du;
                        Gacc[j] += g0 * gl;
                    }
                    Gacc[0] += g0 * g0;
                    ++count;
                }
            }
        }
        Dsnap[is].resize(nl + 1);
        Gsnap[is].resize(nl + 1);
        for (int j = 0; j <= nl; ++j) {
            Dsnap[is][j] = 2.0 * Dacc[j] / count;  // convention factor 2
            Gsnap[is][j] = 2.0 * Gacc[j] / count;
        }
        tab.n_samples += int(count);
    }
    tab.Dbar.assign(nl + 1, 0.0);
    tab.Gbar.assign(nl + 1, 0.0);
    tab.Dbar_se.assign(nl + 1, 0.0);
    tab.Gbar_se.assign(nl + 1, 0.0);
    for (int j = 0; j <= nl; ++j) {
        double md = 0, mg = 0;
        for (size_t is = 0; is < ns; ++is) {
            md += Dsnap[is][j];
            mg += Gsnap[is][j];
        }
        md /= ns;
        mg /= ns;
        double vd = 0, vg = 0;
        for (size_t is = 0; is < ns; ++is) {
            vd += (Dsnap[is][j] - md) * (Dsnap[is][j] - md);
            vg += (Gsnap[is][j] - mg) * (Gsnap[is][j] - mg);
        }
        tab.Dbar[j] = md;
        tab.Gbar[j] = mg;
        if (ns > 1) {
            tab.Dbar_se[j] = std::sqrt(vd / (ns - 1) / ns);
            tab.Gbar_se[j] = std::sqrt(vg / (ns - 1) / ns);
        }
    }
    for (double l : tab.ell) tab.abar.push_back(abar_closed(source, l));
    return tab;
}

// default radial test function: eta(r) = (1 - (r/R)^2)^3 on r < R
inline double eta_bump(double r, double R) {
    if (r >= R) return 0;
    double s = 1 - (r / R) * (r / R);
    return s * s * s;
}
inline double eta_bump_d1(double r, double R) {
    if (r >= R) return 0;
    double s = 1 - (r / R) * (r / R);
    return -6.0 * r / (R * R) * s * s;
}

struct KhmReport {
    double residual = 0;      // mean over snapshots, normalized by the source term
    double residual_se = 0;   // across snapshots
    double source_term = 0;   // 4 int eta l^{d-1} abar dl (normalization)
};

// Weak-form stationary balance on the radial test function:
//   -int eta' l^{d-1} Dbar - 4 kappa int eta' l^{d-1} Gbar' + 4 int eta l^{d-1} abar = 0
// evaluated per snapshot (MC Dbar, spectral Gbar'), trapezoid on the l-grid.
inline KhmReport khm_residual(
    const std::vector<std::pair<SpectralField, SpectralField>>& snapshots,
    const ForcingSpec& source, double kappa, double R, const StructureFunctionOptions& opt) {
    if (R > 3.14159265358979323846)
        throw std::invalid_argument("khm_residual: test support exceeds the box half-width");
    if (R > opt.ell_max) throw std::invalid_argument("khm_residual: R exceeds the ell grid");
    const int d = snapshots[0].second.d;
    std::vector<double> residuals;
    double source_term = 0;
    for (const auto& snap : snapshots) {
        std::vector<std::pair<SpectralField, SpectralField>> one = {snap};
        auto tab = structure_functions(one, source, opt);
        auto mm = ModeMoments::from_snapshots({snap.second});
        double t_adv = 0, t_diff = 0, t_src = 0;
        for (size_t j = 0; j + 1 < tab.ell.size(); ++j) {
            double l0 = tab.ell[j], l1 = tab.ell[j + 1];
            auto term = [&](double l, double Db) {
                double w = std::pow(l, d - 1);
                return std::array<double, 3>{-eta_bump_d1(l, R) * w * Db,
                                             -4 * kappa * eta_bump_d1(l, R) * w * mm.gbar_d1(d, l),
                                             4 * eta_bump(l, R) * w * abar_closed(source, l)};
            };
            auto a = term(l0, tab.Dbar[j]), b = term(l1, tab.Dbar[j + 1]);
            double h = 0.5 * (l1 - l0);
            t_adv += h * (a[0] + b[0]);
            t_diff += h * (a[1] + b[1]);
            t_src += h * (a[2] + b[2]);
        }
        residuals.push_back((t_adv + t_diff + t_src) / std::abs(t_src));
        source_term = t_src;
    }
    KhmReport rep;
    rep.source_term = source_term;
    for (double r : residuals) rep.residual += r;
    rep.residual /= residuals.size();
    double var = 0;
    for (double r : residuals) var += (r - rep.residual) * (r - rep.residual);
    rep.residual_se = residuals.size() > 1
                          ? std::sqrt(var / (residuals.size() - 1) / residuals.size())
                          : 0.0;
    return rep;
}

// Integrates the sphere-averaged balance ODE for the flux the statistics
// imply:  Dbar_pred(l) = -l^{1-d} int_0^l s^{d-1} (4 kappa LapGbar + 4 abar) ds
inline std::vector<double> integrate_khm_ode(const ModeMoments& mm, const ForcingSpec& source,
                                             double kappa, int d,
                                             const std::vector<double>& ell) {
    std::vector<double> out(ell.size(), 0.0);
    double acc = 0;
    for (size_t j = 1; j < ell.size(); ++j) {
        double l0 = ell[j - 1], l1 = ell[j];
        auto f = [&](double l) {
            return std::pow(l, d - 1) *
                   (4 * kappa * mm.gbar_radial_lap(d, l) + 4 * abar_closed(source, l));
        };
        acc += 0.5 * (l1 - l0) * (f(l0) + f(l1));
        out[j] = -acc / std::pow(l1, d - 1);
    }
    return out;
}

struct YaglomReport {
    double ell_D = 0;          // dissipative cutoff (kappa term 10% of source)
    double ell_I = 0;          // integral-scale end of the window
    std::vector<double> ell, compensated;  // Dbar/l over the window
    double plateau_ref = 0;    // -(4/3) abar(0): the d = 3 law
    double plateau_ref_dim = 0;  // -(4/d) abar(0): dimensional version
    double worst_dev = 0;      // max | compensated/plateau_ref - 1 | over the window
    double decades = 0;        // log10(ell_I / ell_D)
    bool window_nonempty = false;
    bool pass = false;         // within 25% of -(4/3) abar(0) over >= half a decade
};

inline YaglomReport yaglom_check(const StructureFunctionTable& tab, const ModeMoments& mm,
                                 const ForcingSpec& source, double kappa, double ell_I) {
    const int d = tab.d;
    YaglomReport rep;
    double epsbar = abar_closed(source, 0.0);
    rep.plateau_ref = -(4.0 / 3.0) * epsbar;
    rep.plateau_ref_dim = -(4.0 / d) * epsbar;
    rep.ell_I = ell_I;
    // dissipative scale: largest l where the kappa term is >= 10% of the source
    rep.ell_D = 0;
    for (size_t j = 1; j < tab.ell.size(); ++j) {
        double l = tab.ell[j];
        if (l > ell_I) break;
        double diff_term = 4 * kappa * std::abs(mm.gbar_radial_lap(d, l));
        double src_term = 4 * std::abs(abar_closed(source, l));
        if (diff_term >= 0.1 * src_term) rep.ell_D = l;
    }
    for (size_t j = 1; j < tab.ell.size(); ++j) {
        double l = tab.ell[j];
        if (l <= rep.ell_D || l > ell_I) continue;
        rep.ell.push_back(l);
        rep.compensated.push_back(tab.Dbar[j] / l);
        rep.worst_dev = std::max(
            rep.worst_dev, std::abs(tab.Dbar[j] / l / rep.plateau_ref - 1.0));
    }
    rep.window_nonempty = !rep.ell.empty();
    if (rep.window_nonempty && rep.ell_D > 0) {
        rep.decades = std::log10(rep.ell.back() / rep.ell.front());
        rep.pass = rep.worst_dev < 0.25 && rep.decades >= 0.5;
    }
    return rep;
}

}  // namespace sflab
