#pragma once

// Spectral representation of divergence-free velocity fields and mean-zero
// scalars: a finite set of wavevectors (both halves stored explicitly, since
// e_k and e_{-k} are independent real basis functions) and real amplitudes
// (u)_k^i along the frame columns gamma_k^i (velocity, i = 1..d-1) or a
// single amplitude per mode (scalar).
//
// Norm convention: ||u||^2 := sum of squared coefficients, i.e. the basis
// functions e_k gamma_k^i are treated as orthonormal.  The physical-space
// integral is int |u|^2 dx = pi (2pi)^{d-1} ||u||^2.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wavevector.hpp"

namespace sflab {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Normalization constant pi (2pi)^{d-1} = int e_k^2 dx.
inline double basis_norm2(int d) {
    double c = kTwoPi / 2.0;
    for (int i = 1; i < d; ++i) c *= kTwoPi;
    return c;
}

enum class FieldKind { velocity, scalar };

struct SpectralField {
    int d = 2;
    int ncomp = 1;  // d-1 for velocity, 1 for scalar
    FieldKind kind = FieldKind::scalar;
    std::vector<Wavevector> modes;
    std::vector<double> coeffs;  // modes.size() * ncomp, mode-major

    bool is_velocity() const { return kind == FieldKind::velocity; }
    size_t n_modes() const { return modes.size(); }

    double& at(size_t m, int i) { return coeffs[m * ncomp + i]; }
    double at(size_t m, int i) const { return coeffs[m * ncomp + i]; }

    double norm2() const {
        double s = 0;
        for (double c : coeffs) s += c * c;
        return s;
    }
    // Sobolev-type weighted norms: sum |k|^{2s} c^2 (diagnostic).
    double sobolev_norm2(double s) const {
        double acc = 0;
        for (size_t m = 0; m < modes.size(); ++m) {
            double w = std::pow(modes[m].norm2(), s);
            for (int i = 0; i < ncomp; ++i) acc += w * at(m, i) * at(m, i);
        }
        return acc;
    }
    double linf_estimate() const {
        // Triangle-inequality bound: sum of |coefficients| (each basis
        // function has sup norm 1).  Used for CFL checks.
        double s = 0;
        for (double c : coeffs) s += std::abs(c);
        return s;
    }

    void set_zero() { std::fill(coeffs.begin(), coeffs.end(), 0.0); }

    int find_mode(const Wavevector& k) const {
        for (size_t m = 0; m < modes.size(); ++m)
            if (modes[m] == k) return int(m);
        return -1;
    }
};

// All nonzero modes in the ball |k|_inf <= N, deterministic order.
inline std::vector<Wavevector> modes_in_ball(int d, int N) {
    std::vector<Wavevector> out;
    if (d == 2) {
        for (int k1 = -N; k1 <= N; ++k1)
            for (int k2 = -N; k2 <= N; ++k2)
                if (k1 || k2) out.push_back(Wavevector(k1, k2));
    } else {
        for (int k1 = -N; k1 <= N; ++k1)
            for (int k2 = -N; k2 <= N; ++k2)
                for (int k3 = -N; k3 <= N; ++k3)
                    if (k1 || k2 || k3) out.push_back(Wavevector(k1, k2, k3));
    }
    return out;
}

inline SpectralField make_field(int d, int ncomp, std::vector<Wavevector> modes,
                                FieldKind kind) {
    SpectralField f;
    f.d = d;
    f.ncomp = ncomp;
    f.kind = kind;
    f.modes = std::move(modes);
    f.coeffs.assign(f.modes.size() * ncomp, 0.0);
    return f;
}
inline SpectralField make_velocity(int d, std::vector<Wavevector> modes) {
    return make_field(d, d - 1, std::move(modes), FieldKind::velocity);
}
inline SpectralField make_scalar(int d, std::vector<Wavevector> modes) {
    return make_field(d, 1, std::move(modes), FieldKind::scalar);
}

// Flattened per-mode tables for fast repeated pointwise evaluation.
// Rebuild is cheap; update_coeffs refreshes amplitudes only.
class FieldEvaluator {
  public:
    explicit FieldEvaluator(const SpectralField& f) : d_(f.d), ncomp_(f.ncomp) {
        n_ = f.n_modes();
        kx_.resize(n_ * 3);
        sin_flag_.resize(n_);
        dir_.resize(n_ * 3 * ncomp_);
        amp_.resize(n_ * ncomp_);
        for (size_t m = 0; m < n_; ++m) {
            for (int i = 0; i < 3; ++i) kx_[m * 3 + i] = (i < d_) ? f.modes[m][i] : 0.0;
            sin_flag_[m] = positive_half(f.modes[m]);
            if (f.is_velocity()) {
                GammaFrame g = gamma_frame(f.modes[m]);
                for (int c = 0; c < ncomp_; ++c)
                    for (int i = 0; i < d_; ++i)
                        dir_[(m * ncomp_ + c) * 3 + i] = g.columns(i, c);
            } else {
                dir_[m * 3] = 1.0;  // scalar: unit "direction" in component 0
            }
        }
        update_coeffs(f);
    }

    void update_coeffs(const SpectralField& f) {
        for (size_t m = 0; m < n_; ++m)
            for (int c = 0; c < ncomp_; ++c) amp_[m * ncomp_ + c] = f.at(m, c);
    }

    // Velocity value; out must hold d doubles.
    void velocity(const double* x, double* out) const {
        for (int i = 0; i < d_; ++i) out[i] = 0.0;
        for (size_t m = 0; m < n_; ++m) {
            double phase = kx_[m * 3] * x[0] + kx_[m * 3 + 1] * x[1] + kx_[m * 3 + 2] * x[2];
            double e = sin_flag_[m] ? std::sin(phase) : std::cos(phase);
            for (int c = 0; c < ncomp_; ++c) {
                double a = amp_[m * ncomp_ + c] * e;
                const double* g = &dir_[(m * ncomp_ + c) * 3];
                for (int i = 0; i < d_; ++i) out[i] += a * g[i];
            }
        }
    }

    // Gradient (grad u)_{ij} = d u_i / d x_j; out row-major d x d.
    void gradient(const double* x, double* out) const {
        for (int i = 0; i < d_ * d_; ++i) out[i] = 0.0;
        for (size_t m = 0; m < n_; ++m) {
            double phase = kx_[m * 3] * x[0] + kx_[m * 3 + 1] * x[1] + kx_[m * 3 + 2] * x[2];
            // derivative of sin is cos, of cos is -sin
            double de = sin_flag_[m] ? std::cos(phase) : -std::sin(phase);
            for (int c = 0; c < ncomp_; ++c) {
                double a = amp_[m * ncomp_ + c] * de;
                const double* g = &dir_[(m * ncomp_ + c) * 3];
                for (int i = 0; i < d_; ++i)
                    for (int j = 0; j < d_; ++j)
                        out[i * d_ + j] += a * g[i] * kx_[m * 3 + j];
            }
        }
    }

    // Scalar value and gradient.
    double scalar(const double* x) const {
        double s = 0;
        for (size_t m = 0; m < n_; ++m) {
            double phase = kx_[m * 3] * x[0] + kx_[m * 3 + 1] * x[1] + kx_[m * 3 + 2] * x[2];
            s += amp_[m] * (sin_flag_[m] ? std::sin(phase) : std::cos(phase));
        }
        return s;
    }
    void scalar_gradient(const double* x, double* out) const {
        for (int i = 0; i < d_; ++i) out[i] = 0.0;
        for (size_t m = 0; m < n_; ++m) {
            double phase = kx_[m * 3] * x[0] + kx_[m * 3 + 1] * x[1] + kx_[m * 3 + 2] * x[2];
            double de = sin_flag_[m] ? std::cos(phase) : -std::sin(phase);
            for (int i = 0; i < d_; ++i) out[i] += amp_[m] * de * kx_[m * 3 + i];
        }
    }

    int dim() const { return d_; }

  private:
    int d_, ncomp_;
    size_t n_ = 0;
    std::vector<double> kx_;
    std::vector<char> sin_flag_;
    std::vector<double> dir_;
    std::vector<double> amp_;
};

inline Eigen::VectorXd eval_velocity(const SpectralField& u, const Eigen::VectorXd& x) {
    FieldEvaluator ev(u);
    Eigen::VectorXd out(u.d);
    ev.velocity(x.data(), out.data());
    return out;
}
inline Eigen::MatrixXd eval_gradient(const SpectralField& u, const Eigen::VectorXd& x) {
    FieldEvaluator ev(u);
    Eigen::MatrixXd out(u.d, u.d);
    std::vector<double> buf(u.d * u.d);
    ev.gradient(x.data(), buf.data());
    for (int i = 0; i < u.d; ++i)
        for (int j = 0; j < u.d; ++j) out(i, j) = buf[i * u.d + j];
    return out;
}
inline double eval_scalar(const SpectralField& g, const Eigen::VectorXd& x) {
    return FieldEvaluator(g).scalar(x.data());
}

// JSON serialization: {d, ncomp, modes, coeffs}.
inline nlohmann::json field_to_json(const SpectralField& f) {
    nlohmann::json j;
    j["d"] = f.d;
    j["ncomp"] = f.ncomp;
    j["kind"] = f.is_velocity() ? "velocity" : "scalar";
    auto& jm = j["modes"] = nlohmann::json::array();
    for (const auto& k : f.modes) {
        nlohmann::json kk = nlohmann::json::array();
        for (int i = 0; i < f.d; ++i) kk.push_back(k[i]);
        jm.push_back(kk);
    }
    j["coeffs"] = f.coeffs;
    return j;
}
inline SpectralField field_from_json(const nlohmann::json& j) {
    SpectralField f;
    f.d = j.at("d").get<int>();
    f.ncomp = j.at("ncomp").get<int>();
    f.kind = (j.at("kind").get<std::string>() == "velocity") ? FieldKind::velocity : FieldKind::scalar;
    for (const auto& kk : j.at("modes")) {
        Wavevector k;
        k.d = f.d;
        for (int i = 0; i < f.d; ++i) k[i] = kk.at(i).get<int>();
        f.modes.push_back(k);
    }
    f.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (f.coeffs.size() != f.modes.size() * size_t(f.ncomp))
        throw std::runtime_error("field_from_json: coeffs size mismatch");
    return f;
}

}  // namespace sflab
