#pragma once

// Time integration of the four velocity systems:
//   1. Stokes (finite forced mode set): every coefficient is an independent
//      OU process with rate |k|^2 -- integrated exactly in law at any dt.
//   2. Galerkin Navier-Stokes at cutoff N (|k|_inf ball).
//   3. 2D Navier-Stokes and 4. 3D hyperviscous Navier-Stokes, simulated as
//      their |k|_inf <= N truncations (same integrator as 2, eta >= 0).
// Nonlinear systems use an exponential Euler-Maruyama step: explicit
// Leray-projected truncated nonlinearity, exact linear decay, exact per-mode
// OU noise quadrature.

#include <stdexcept>
#include <string>
#include <vector>

#include "forcing.hpp"
#include "operators.hpp"

namespace sflab {

enum class FluidVariant { Stokes, GalerkinNSE, NSE2D, HyperNSE3D };

inline std::string to_string(FluidVariant v) {
    switch (v) {
        case FluidVariant::Stokes: return "stokes";
        case FluidVariant::GalerkinNSE: return "galerkin";
        case FluidVariant::NSE2D: return "nse2d";
        case FluidVariant::HyperNSE3D: return "hyper3d";
    }
    return "?";
}

struct FluidModelConfig {
    FluidVariant variant = FluidVariant::Stokes;
    int d = 2;
    double nu = 1.0;
    double eta = 0.0;  // hyperviscosity (3D)
    int N = 0;         // Galerkin / truncation cutoff (|k|_inf); 0 for Stokes
    ForcingSpec forcing;
    double dt = 0.01;

    bool nonlinear() const { return variant != FluidVariant::Stokes; }

    void check() const {
        if (d != 2 && d != 3) throw std::invalid_argument("fluid: d must be 2 or 3");
        if (nu <= 0) throw std::invalid_argument("fluid: nu must be > 0");
        if (variant == FluidVariant::Stokes && forcing.table.empty())
            throw std::invalid_argument("fluid: Stokes variant requires a finite forced set");
        if (variant == FluidVariant::GalerkinNSE && N < 3)
            throw std::invalid_argument("fluid: Galerkin variant requires N >= 3");
        if (nonlinear() && N < 1)
            throw std::invalid_argument("fluid: truncation cutoff N required");
        if (d == 3 && nonlinear() && eta <= 0)
            throw std::invalid_argument("fluid: 3D nonlinear variant requires eta > 0");
        if (forcing.d != d) throw std::invalid_argument("fluid: forcing dimension mismatch");
    }

    double dissipation_rate(const Wavevector& k) const {
        double k2 = k.norm2();
        return nonlinear() ? nu * k2 + eta * k2 * k2 : k2;  // Stokes: A = -Lap
    }
    static double default_dt(double nu, int N) { return 0.5 / (nu * double(N) * double(N)); }
    double cfl_bound(double u_inf) const {
        int n = std::max(N, 1);
        return 0.1 * (kTwoPi / n) / std::max(u_inf, 1e-30);
    }
};

struct FluidState {
    double t = 0;
    SpectralField u;
    uint64_t noise_step = 0;  // counter for the per-mode noise streams
};

class FluidModel {
  public:
    FluidModel(FluidModelConfig cfg, uint64_t seed, uint64_t trajectory = 0)
        : cfg_(std::move(cfg)), seed_(seed), trajectory_(trajectory) {
        cfg_.check();
        std::vector<Wavevector> modes;
        if (cfg_.variant == FluidVariant::Stokes) {
            for (const auto& [k, q] : cfg_.forcing.table) modes.push_back(k);
        } else {
            modes = modes_in_ball(cfg_.d, cfg_.N);
        }
        template_ = make_velocity(cfg_.d, modes);
        q_.assign(modes.size(), 0.0);
        for (size_t m = 0; m < modes.size(); ++m) {
            auto it = cfg_.forcing.table.find(modes[m]);
            if (it != cfg_.forcing.table.end()) q_[m] = it->second;
        }
    }

    const FluidModelConfig& config() const { return cfg_; }
    uint64_t seed() const { return seed_; }
    uint64_t trajectory() const { return trajectory_; }

    FluidState initial_state() const {
        FluidState s;
        s.u = template_;
        return s;
    }

    // Draw u from the exact stationary law (Stokes only).
    FluidState stationary_draw(uint64_t draw_index) const {
        if (cfg_.variant != FluidVariant::Stokes)
            throw std::logic_error("stationary_draw: exact law known only for Stokes");
        FluidState s = initial_state();
        s.noise_step = draw_index;  // one counter slot per draw
        for (size_t m = 0; m < s.u.n_modes(); ++m) {
            double lam = s.u.modes[m].norm2();
            for (int i = 0; i < s.u.ncomp; ++i) {
                NoiseStream ns{seed_ ^ 0xA076u, trajectory_, stream_id(m, i) | (1ull << 62),
                               draw_index};
                s.u.at(m, i) = ou_stationary_draw(lam, q_[m], ns);
            }
        }
        s.noise_step = 0;
        return s;
    }

    void step(FluidState& s) const {
        if (cfg_.variant == FluidVariant::Stokes)
            step_stokes(s);
        else
            step_nse(s);
    }

    void step_stokes(FluidState& s) const {
        const double dt = cfg_.dt;
        for (size_t m = 0; m < s.u.n_modes(); ++m) {
            double lam = s.u.modes[m].norm2();
            for (int i = 0; i < s.u.ncomp; ++i) {
                NoiseStream ns{seed_, trajectory_, stream_id(m, i), s.noise_step};
                s.u.at(m, i) = ou_exact_step(s.u.at(m, i), lam, q_[m], dt, ns);
            }
        }
        s.noise_step += 1;
        s.t += dt;
    }

    void step_nse(FluidState& s) const {
        const double dt = cfg_.dt;
        SpectralField B = euler_nonlinearity(s.u, cfg_.N);  // same mode order as u
        const double energy_before = s.u.norm2();
        double B2 = B.norm2();
        bool noise_off = true;
        for (double q : q_)
            if (q != 0) noise_off = false;
        for (size_t m = 0; m < s.u.n_modes(); ++m) {
            double lam = cfg_.dissipation_rate(s.u.modes[m]);
            double decay = std::exp(-lam * dt);
            double amp = q_[m] * std::sqrt((1.0 - decay * decay) / (2.0 * lam));
            for (int i = 0; i < s.u.ncomp; ++i) {
                double drift = (s.u.at(m, i) - dt * B.at(m, i)) * decay;
                double xi = 0;
                if (q_[m] != 0) {
                    NoiseStream ns{seed_, trajectory_, stream_id(m, i), s.noise_step};
                    xi = amp * ns.normal();
                }
                s.u.at(m, i) = drift + xi;
            }
        }
        s.noise_step += 1;
        s.t += dt;
        double energy_after = s.u.norm2();
        if (noise_off && energy_after > energy_before + dt * dt * B2 + 1e-10 * energy_before)
            throw std::runtime_error("fluid: energy increased on a noise-free step");
        if (!std::isfinite(energy_after) || std::sqrt(energy_after) > 1e8)
            throw std::runtime_error("fluid: blow-up guard tripped at t=" + std::to_string(s.t) +
                                     " (||u|| = " + std::to_string(std::sqrt(energy_after)) + ")");
    }

    // n states after burn-in, spaced `spacing` model time apart.
    std::vector<FluidState> sample_stationary(double burn_in, int n, double spacing) const {
        if (burn_in <= 0) throw std::invalid_argument("sample_stationary: burn_in must be > 0");
        FluidState s = (cfg_.variant == FluidVariant::Stokes) ? stationary_draw(0) : initial_state();
        std::vector<FluidState> out;
        long burn_steps = long(burn_in / cfg_.dt + 0.5);
        long gap_steps = std::max(1l, long(spacing / cfg_.dt + 0.5));
        for (long i = 0; i < burn_steps; ++i) step(s);
        for (int j = 0; j < n; ++j) {
            for (long i = 0; i < gap_steps; ++i) step(s);
            out.push_back(s);
        }
        return out;
    }

  private:
    FluidModelConfig cfg_;
    uint64_t seed_, trajectory_;
    SpectralField template_;
    std::vector<double> q_;
};

}  // namespace sflab
