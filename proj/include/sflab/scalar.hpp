#pragma once

// Passive scalar advected by a spectral velocity field:
//   dg = (-u . grad g + kappa Lap g) dt + Qtilde dWtilde
// stepped by a splitting scheme: the advection term is integrated with RK4
// on the frozen velocity (exact Galerkin convolution, alias-free), then the
// diffusion factor and the source noise are applied exactly per mode.
// The kappa = 0 equation is never stepped spectrally; gradient growth at
// kappa = 0 uses the inverse-transpose cocycle instead.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fluid.hpp"
#include "lagrangian.hpp"

namespace sflab {

struct ScalarState {
    double t = 0;
    SpectralField g;       // scalar, mean-zero by construction (no k = 0 mode)
    double kappa = 0;
    ForcingSpec source;    // Qtilde
    double epsbar = 0;     // 1/2 sum qtilde^2
    uint64_t noise_step = 0;
    uint64_t seed = 0, trajectory = 0;
};

inline constexpr uint64_t kScalarStreamBase = uint64_t(1) << 40;

// f = sqrt(kappa) g; its stationary balance reads E|grad f|^2 = epsbar.
inline ScalarState renormalized_scalar(const ScalarState& s) {
    if (s.kappa <= 0) throw std::invalid_argument("renormalized_scalar: kappa must be > 0");
    ScalarState out = s;
    double r = std::sqrt(s.kappa);
    for (auto& c : out.g.coeffs) c *= r;
    return out;
}

// Fraction of |grad g|^2 carried by modes above 2/3 of the cutoff; a large
// value flags an under-resolved (Batchelor-limited) run.
inline double resolution_tail_fraction(const SpectralField& g, int N) {
    double tail = 0, total = 0;
    for (size_t m = 0; m < g.n_modes(); ++m) {
        double w = g.modes[m].norm2() * g.coeffs[m] * g.coeffs[m];
        total += w;
        if (g.modes[m].linf() * 3 > 2 * N) tail += w;
    }
    return total > 0 ? tail / total : 0.0;
}

// Exact-convolution advection of a dense scalar mode ball by a sparse
// velocity mode set, with tables precomputed at construction.
class ScalarSolver {
  public:
    ScalarSolver(int d, int Ng, const SpectralField& u_template)
        : d_(d), Ng_(Ng), nu_modes_(u_template.n_modes()) {
        if (!u_template.is_velocity())
            throw std::invalid_argument("ScalarSolver: velocity template required");
        modes_ = modes_in_ball(d, Ng);
        for (size_t i = 0; i < modes_.size(); ++i) index_[modes_[i]] = int(i);
        // sin/cos pair layout of the scalar ball
        for (size_t i = 0; i < modes_.size(); ++i) {
            if (!positive_half(modes_[i])) continue;
            pairs_.push_back({int(i), index_.at(-modes_[i])});
        }
        // velocity sites: gamma columns flattened, pairing for the
        // complex-amplitude conversion
        u_gamma_.resize(nu_modes_ * (d - 1) * 3, 0.0);
        u_partner_.assign(nu_modes_, -1);
        std::unordered_map<Wavevector, int> uindex;
        for (size_t m = 0; m < nu_modes_; ++m) uindex[u_template.modes[m]] = int(m);
        for (size_t m = 0; m < nu_modes_; ++m) {
            GammaFrame gf = gamma_frame(u_template.modes[m]);
            for (int c = 0; c < d - 1; ++c)
                for (int i = 0; i < d; ++i)
                    u_gamma_[(m * (d - 1) + c) * 3 + i] = gf.columns(i, c);
            auto it = uindex.find(-u_template.modes[m]);
            if (it != uindex.end()) u_partner_[m] = it->second;
            u_modes_.push_back(u_template.modes[m]);
        }
        // convolution targets: for each velocity site p and scalar site q,
        // the index of p + q in the ball (or -1)
        qvec_.resize(modes_.size() * 3, 0.0);
        for (size_t j = 0; j < modes_.size(); ++j)
            for (int i = 0; i < d; ++i) qvec_[j * 3 + i] = modes_[j][i];
        target_.resize(nu_modes_);
        for (size_t m = 0; m < nu_modes_; ++m) {
            target_[m].assign(modes_.size(), -1);
            for (size_t j = 0; j < modes_.size(); ++j) {
                Wavevector k = u_modes_[m] + modes_[j];
                auto it = index_.find(k);
                if (it != index_.end()) target_[m][j] = it->second;
            }
        }
        zc_.resize(modes_.size());
        out_.resize(modes_.size());
        uc_.resize(nu_modes_ * 3);
        stage_.resize(modes_.size());
        k1_.resize(modes_.size());
        k2_.resize(modes_.size());
        k3_.resize(modes_.size());
        k4_.resize(modes_.size());
    }

    const std::vector<Wavevector>& modes() const { return modes_; }
    int Ng() const { return Ng_; }

    SpectralField make_zero_scalar() const { return make_scalar(d_, modes_); }

    ScalarState initial_state(double kappa, const ForcingSpec& source, uint64_t seed,
                              uint64_t trajectory = 0) const {
        if (kappa < 0) throw std::invalid_argument("kappa must be >= 0");
        if (kappa == 0 && !source.table.empty())
            throw std::invalid_argument("kappa = 0 with a source is not steppable spectrally");
        for (const auto& [k, q] : source.table)
            if (index_.find(k) == index_.end())
                throw std::invalid_argument("source mode outside the scalar ball");
        ScalarState s;
        s.g = make_zero_scalar();
        s.kappa = kappa;
        s.source = source;
        s.epsbar = source.table.empty() ? 0.0 : scalar_injection_rate(source);
        s.seed = seed;
        s.trajectory = trajectory;
        return s;
    }

    // tendency of pure advection: out = -(u . grad g), Galerkin-truncated
    void advection_tendency(const std::vector<double>& g, const SpectralField& u,
                            std::vector<double>& out) const {
        if (u.n_modes() != nu_modes_) throw std::invalid_argument("velocity mode set changed");
        const std::complex<double> I(0, 1);
        // scalar complex amplitudes
        for (auto& z : zc_) z = 0;
        for (const auto& [ip, im] : pairs_) {
            std::complex<double> a(0.5 * g[im], -0.5 * g[ip]);
            zc_[ip] = a;
            zc_[im] = std::conj(a);
        }
        // velocity complex amplitudes per site
        std::vector<std::array<double, 3>> w(nu_modes_, {0, 0, 0});
        for (size_t m = 0; m < nu_modes_; ++m)
            for (int c = 0; c < d_ - 1; ++c)
                for (int i = 0; i < d_; ++i)
                    w[m][i] += u.at(m, c) * u_gamma_[(m * (d_ - 1) + c) * 3 + i];
        for (size_t m = 0; m < nu_modes_; ++m) {
            bool pos = positive_half(u_modes_[m]);
            const auto& s = w[m];
            std::array<double, 3> p = {0, 0, 0};
            if (u_partner_[m] >= 0) p = w[u_partner_[m]];
            for (int i = 0; i < d_; ++i)
                uc_[m * 3 + i] = pos ? std::complex<double>(0.5 * p[i], -0.5 * s[i])
                                     : std::complex<double>(0.5 * s[i], 0.5 * p[i]);
        }
        for (auto& z : out_) z = 0;
        for (size_t m = 0; m < nu_modes_; ++m) {
            const std::complex<double>* up = &uc_[m * 3];
            const int* tgt = target_[m].data();
            for (size_t j = 0; j < modes_.size(); ++j) {
                int t = tgt[j];
                if (t < 0) continue;
                std::complex<double> dot = up[0] * qvec_[j * 3] + up[1] * qvec_[j * 3 + 1] +
                                           up[2] * qvec_[j * 3 + 2];
                out_[t] += I * dot * zc_[j];  // (u . grad g)^hat at p + q
            }
        }
        out.assign(modes_.size(), 0.0);
        for (const auto& [ip, im] : pairs_) {
            out[ip] = 2.0 * out_[ip].imag();   // -( -2 Im ) of u.grad g
            out[im] = -2.0 * out_[ip].real();  // minus sign: tendency is -u.grad g
        }
    }

    // One step: RK4 advection on frozen u, then exact diffusion + source.
    void step(ScalarState& s, const SpectralField& u, double dt) const {
        auto& c = s.g.coeffs;
        advection_tendency(c, u, k1_);
        stage_.assign(c.begin(), c.end());
        for (size_t i = 0; i < c.size(); ++i) stage_[i] = c[i] + 0.5 * dt * k1_[i];
        advection_tendency(stage_, u, k2_);
        for (size_t i = 0; i < c.size(); ++i) stage_[i] = c[i] + 0.5 * dt * k2_[i];
        advection_tendency(stage_, u, k3_);
        for (size_t i = 0; i < c.size(); ++i) stage_[i] = c[i] + dt * k3_[i];
        advection_tendency(stage_, u, k4_);
        for (size_t i = 0; i < c.size(); ++i)
            c[i] += (dt / 6.0) * (k1_[i] + 2 * k2_[i] + 2 * k3_[i] + k4_[i]);
        if (s.kappa > 0) {
            for (size_t i = 0; i < c.size(); ++i)
                c[i] *= std::exp(-s.kappa * modes_[i].norm2() * dt);
            uint64_t idx = 0;
            for (const auto& [k, q] : s.source.table) {
                int i = index_.at(k);
                double lam = s.kappa * modes_[i].norm2();
                double var = q * q * (1 - std::exp(-2 * lam * dt)) / (2 * lam);
                NoiseStream ns{s.seed, s.trajectory, kScalarStreamBase + idx, s.noise_step};
                c[i] += std::sqrt(var) * ns.normal();
                ++idx;
            }
        }
        s.t += dt;
        ++s.noise_step;
    }

  private:
    int d_, Ng_;
    size_t nu_modes_;
    std::vector<Wavevector> modes_, u_modes_;
    std::unordered_map<Wavevector, int> index_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<double> u_gamma_, qvec_;
    std::vector<int> u_partner_;
    std::vector<std::vector<int>> target_;
    mutable std::vector<std::complex<double>> zc_, out_, uc_;
    mutable std::vector<double> stage_, k1_, k2_, k3_, k4_;
};

struct ScalarRunResult {
    std::vector<double> times;
    std::vector<double> energy;        // |g|^2
    std::vector<double> grad_energy;   // |grad g|^2
    std::vector<std::pair<SpectralField, SpectralField>> snapshots;  // (u, g)
    double kappa = 0, epsbar = 0;
    double mean_grad_energy = 0, grad_energy_se = 0;  // batch-means SE
    double tail_fraction = 0;  // resolution guard, max over samples

    // kappa E|grad g|^2 vs epsbar, relative
    double balance_error() const { return kappa * mean_grad_energy / epsbar - 1.0; }
    double balance_se() const { return kappa * grad_energy_se / epsbar; }
};

struct ScalarRunOptions {
    double burn_in = 20;
    double horizon = 100;
    double sample_spacing = 0.5;
    int n_snapshots = 0;       // evenly spread over the horizon
    int n_batches = 20;
    uint64_t seed = 1, trajectory = 0;
};

// Co-evolve fluid and scalar; record the stationary balance diagnostics.
inline ScalarRunResult run_stationary_scalar(const FluidModelConfig& fcfg, int Ng, double kappa,
                                             const ForcingSpec& source,
                                             const ScalarRunOptions& opt) {
    FluidModel fluid(fcfg, opt.seed, opt.trajectory);
    FluidState f = (fcfg.variant == FluidVariant::Stokes) ? fluid.stationary_draw(0)
                                                          : fluid.initial_state();
    ScalarSolver solver(fcfg.d, Ng, f.u);
    ScalarState s = solver.initial_state(kappa, source, opt.seed, opt.trajectory);
    double dt = fcfg.dt;
    long burn = long(opt.burn_in / dt + 0.5);
    for (long i = 0; i < burn; ++i) {
        fluid.step(f);
        solver.step(s, f.u, dt);
    }
    ScalarRunResult out;
    out.kappa = kappa;
    out.epsbar = s.epsbar;
    long steps = long(opt.horizon / dt + 0.5);
    long spacing = std::max(1l, long(opt.sample_spacing / dt + 0.5));
    long snap_every = opt.n_snapshots > 0 ? std::max(1l, steps / opt.n_snapshots) : steps + 1;
    for (long i = 0; i < steps; ++i) {
        fluid.step(f);
        solver.step(s, f.u, dt);
        if ((i + 1) % spacing == 0) {
            out.times.push_back(s.t);
            out.energy.push_back(s.g.norm2());
            out.grad_energy.push_back(s.g.sobolev_norm2(1));
            out.tail_fraction = std::max(out.tail_fraction, resolution_tail_fraction(s.g, Ng));
        }
        if ((i + 1) % snap_every == 0 && long(out.snapshots.size()) < opt.n_snapshots)
            out.snapshots.push_back({f.u, s.g});
    }
    // batch means over the grad-energy series
    size_t n = out.grad_energy.size();
    size_t blen = std::max<size_t>(1, n / opt.n_batches);
    std::vector<double> bm;
    for (size_t b = 0; b + blen <= n; b += blen) {
        double m = 0;
        for (size_t i = b; i < b + blen; ++i) m += out.grad_energy[i];
        bm.push_back(m / blen);
    }
    double mean = 0;
    for (double v : bm) mean += v;
    mean /= bm.size();
    double var = 0;
    for (double v : bm) var += (v - mean) * (v - mean);
    out.mean_grad_energy = mean;
    out.grad_energy_se = bm.size() > 1 ? std::sqrt(var / (bm.size() - 1) / bm.size()) : 0.0;
    return out;
}

struct GradientGrowthReport {
    std::vector<double> times;
    std::vector<double> log_l1;  // log of the MC estimate of |grad f_t|_{L^1}
    double rate = 0, rate_se = 0;
    int n_particles = 0;
};

// Frozen-field variant with caller-chosen particle positions (useful for
// pinned stagnation-point oracles).
template <typename GradF0>
GradientGrowthReport inviscid_gradient_growth_frozen(const SpectralField& u, GradF0&& grad_f0,
                                                     double horizon, double dt,
                                                     const std::vector<Eigen::VectorXd>& x0s,
                                                     double sample_spacing = 0.5) {
    const int d = u.d;
    GradientGrowthReport rep;
    rep.n_particles = int(x0s.size());
    FieldEvaluator ev(u);
    std::vector<LagrangianState> ls;
    std::vector<Eigen::VectorXd> w0;
    for (const auto& x0 : x0s) {
        ls.push_back(LagrangianState::start(d, x0, Eigen::VectorXd::Unit(d, 0)));
        w0.push_back(grad_f0(x0));
    }
    long steps = long(horizon / dt + 0.5);
    long spacing = std::max(1l, long(sample_spacing / dt + 0.5));
    for (long i = 0; i < steps; ++i) {
        for (auto& s : ls) flow_step(s, ev, dt);
        if ((i + 1) % spacing == 0) {
            double mx = -1e300;
            std::vector<double> logs(ls.size());
            for (size_t p = 0; p < ls.size(); ++p) {
                logs[p] = w0[p].norm() > 0 ? log_pullback_gradient_norm(ls[p], w0[p]) : -1e300;
                mx = std::max(mx, logs[p]);
            }
            double acc = 0;
            for (double l : logs) acc += std::exp(l - mx);
            rep.times.push_back((i + 1) * dt);
            rep.log_l1.push_back(mx + std::log(acc / double(ls.size())));
        }
    }
    size_t n = rep.times.size(), half = n / 2;
    if (n - half >= 3) {
        std::vector<double> t(rep.times.begin() + half, rep.times.end());
        std::vector<double> y(rep.log_l1.begin() + half, rep.log_l1.end());
        double mt = 0, my = 0;
        for (size_t i = 0; i < t.size(); ++i) {
            mt += t[i];
            my += y[i];
        }
        mt /= t.size();
        my /= t.size();
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < t.size(); ++i) {
            sxx += (t[i] - mt) * (t[i] - mt);
            sxy += (t[i] - mt) * (y[i] - my);
        }
        rep.rate = sxy / sxx;
    }
    return rep;
}

// kappa = 0 gradient growth through the inverse-transpose cocycle:
// |grad f_t|_{L^1} = MC average of |A_t^{-T} grad f_0(x_0)| over uniform
// particles (volume preservation makes the average unbiased).
template <typename GradF0>
GradientGrowthReport inviscid_gradient_growth(const FluidModelConfig& cfg, GradF0&& grad_f0,
                                              double horizon, int n_particles, uint64_t seed,
                                              double sample_spacing = 0.5) {
    const int d = cfg.d;
    GradientGrowthReport rep;
    rep.n_particles = n_particles;
    std::vector<FluidModel> models;
    std::vector<FluidState> fs;
    std::vector<LagrangianState> ls;
    std::vector<Eigen::VectorXd> w0;
    for (int p = 0; p < n_particles; ++p) {
        models.emplace_back(cfg, seed, uint64_t(p));
        fs.push_back(cfg.variant == FluidVariant::Stokes ? models[p].stationary_draw(p)
                                                         : models[p].initial_state());
        NoiseStream init{seed ^ 0xF00D, uint64_t(p), 0xFFFF, 0};
        Eigen::VectorXd x0(d);
        for (int i = 0; i < d; ++i) x0[i] = kTwoPi * init.uniform();
        ls.push_back(LagrangianState::start(d, x0, Eigen::VectorXd::Unit(d, 0)));
        w0.push_back(grad_f0(x0));
    }
    long steps = long(horizon / cfg.dt + 0.5);
    long spacing = std::max(1l, long(sample_spacing / cfg.dt + 0.5));
    std::vector<FieldEvaluator> evs;
    for (int p = 0; p < n_particles; ++p) evs.emplace_back(fs[p].u);
    for (long i = 0; i < steps; ++i) {
        for (int p = 0; p < n_particles; ++p) {
            models[p].step(fs[p]);
            evs[p].update_coeffs(fs[p].u);
            flow_step(ls[p], evs[p], cfg.dt);
        }
        if ((i + 1) % spacing == 0) {
            // log-sum-exp over particles for overflow safety
            double mx = -1e300;
            std::vector<double> logs(n_particles);
            for (int p = 0; p < n_particles; ++p) {
                logs[p] = w0[p].norm() > 0 ? log_pullback_gradient_norm(ls[p], w0[p]) : -1e300;
                mx = std::max(mx, logs[p]);
            }
            double acc = 0;
            for (double l : logs) acc += std::exp(l - mx);
            rep.times.push_back((i + 1) * cfg.dt);
            rep.log_l1.push_back(mx + std::log(acc / n_particles));
        }
    }
    // fit the exponential rate over the second half (transient discarded)
    size_t n = rep.times.size(), half = n / 2;
    std::vector<double> t(rep.times.begin() + half, rep.times.end());
    std::vector<double> y(rep.log_l1.begin() + half, rep.log_l1.end());
    if (t.size() >= 3) {
        double mt = 0, my = 0;
        for (size_t i = 0; i < t.size(); ++i) {
            mt += t[i];
            my += y[i];
        }
        mt /= t.size();
        my /= t.size();
        double sxx = 0, sxy = 0, sse = 0;
        for (size_t i = 0; i < t.size(); ++i) {
            sxx += (t[i] - mt) * (t[i] - mt);
            sxy += (t[i] - mt) * (y[i] - my);
        }
        rep.rate = sxy / sxx;
        double a = my - rep.rate * mt;
        for (size_t i = 0; i < t.size(); ++i) {
            double r = y[i] - a - rep.rate * t[i];
            sse += r * r;
        }
        rep.rate_se = std::sqrt(sse / double(t.size() - 2) / sxx);
    }
    return rep;
}

}  // namespace sflab
