#pragma once

// Real Fourier basis on the torus [0,2pi]^d and the per-mode orthonormal
// frames gamma_k used to span the divergence-free directions.
//
// Basis: e_k(x) = sin(k.x) for k in the positive half-lattice Z^d_+,
//        e_k(x) = cos(k.x) for k in Z^d_- = -Z^d_+.
// Useful identity: e_k(x)^2 + e_{-k}(x)^2 = 1 for every x.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace sflab {

struct Wavevector {
    int d = 2;                      // 2 or 3
    std::array<int, 3> k{0, 0, 0};  // k[2] unused (0) when d == 2

    Wavevector() = default;
    Wavevector(int k1, int k2) : d(2), k{k1, k2, 0} {}
    Wavevector(int k1, int k2, int k3) : d(3), k{k1, k2, k3} {}

    int operator[](int i) const { return k[i]; }
    int& operator[](int i) { return k[i]; }

    bool is_zero() const { return k[0] == 0 && k[1] == 0 && k[2] == 0; }

    Wavevector operator-() const {
        Wavevector m = *this;
        for (int i = 0; i < d; ++i) m.k[i] = -m.k[i];
        return m;
    }
    Wavevector operator+(const Wavevector& o) const {
        Wavevector r = *this;
        for (int i = 0; i < d; ++i) r.k[i] += o.k[i];
        return r;
    }
    Wavevector operator-(const Wavevector& o) const {
        Wavevector r = *this;
        for (int i = 0; i < d; ++i) r.k[i] -= o.k[i];
        return r;
    }
    bool operator==(const Wavevector& o) const { return d == o.d && k == o.k; }
    bool operator!=(const Wavevector& o) const { return !(*this == o); }
    bool operator<(const Wavevector& o) const { return k < o.k; }

    double norm2() const {
        double s = 0;
        for (int i = 0; i < d; ++i) s += double(k[i]) * k[i];
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }
    int linf() const {
        int m = 0;
        for (int i = 0; i < d; ++i) m = std::max(m, std::abs(k[i]));
        return m;
    }
    Eigen::VectorXd as_vector() const {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = k[i];
        return v;
    }
};

// Membership in the positive half-lattice.  Rule: k_d > 0, or k_d == 0 and
// the first nonzero of k_1..k_{d-1} is positive.  (For d=2 this is exactly
// "k_2 > 0 or (k_2 == 0 and k_1 > 0)".)
inline bool positive_half(const Wavevector& k) {
    if (k.is_zero()) throw std::invalid_argument("positive_half: zero wavevector");
    int kd = k[k.d - 1];
    if (kd != 0) return kd > 0;
    for (int i = 0; i < k.d - 1; ++i)
        if (k[i] != 0) return k[i] > 0;
    return false;  // unreachable: k nonzero
}

// e_k(x): sin for the positive half, cos for the negative half.
inline double basis_eval(const Wavevector& k, const double* x) {
    if (k.is_zero()) throw std::invalid_argument("basis_eval: zero wavevector");
    double phase = 0;
    for (int i = 0; i < k.d; ++i) phase += k[i] * x[i];
    return positive_half(k) ? std::sin(phase) : std::cos(phase);
}
inline double basis_eval(const Wavevector& k, const Eigen::VectorXd& x) {
    return basis_eval(k, x.data());
}

// Orthonormal frame of k-perp: d x (d-1) matrix with columns gamma_k^i,
// gamma_k^i . k = 0, and the antisymmetry gamma_{-k} = -gamma_k.
//
// d=2: gamma_k = k_perp/|k|, k_perp = (-k2, k1), for the positive half.
// d=3: gamma^1 = normalize(k x e3) (e1 when k is parallel to e3),
//      gamma^2 = normalize(k x gamma^1), computed for the positive-half
//      representative and negated on the other half.
struct GammaFrame {
    Wavevector k;
    Eigen::MatrixXd columns;  // d x (d-1)
};

inline GammaFrame gamma_frame(const Wavevector& k) {
    if (k.is_zero()) throw std::invalid_argument("gamma_frame: zero wavevector");
    const bool pos = positive_half(k);
    const Wavevector kp = pos ? k : -k;  // positive-half representative
    GammaFrame f;
    f.k = k;
    f.columns.resize(k.d, k.d - 1);
    if (k.d == 2) {
        const double n = kp.norm();
        f.columns(0, 0) = -kp[1] / n;
        f.columns(1, 0) = kp[0] / n;
    } else {
        Eigen::Vector3d kv{double(kp[0]), double(kp[1]), double(kp[2])};
        Eigen::Vector3d axis = (kp[0] == 0 && kp[1] == 0) ? Eigen::Vector3d::UnitX()
                                                          : Eigen::Vector3d::UnitZ();
        Eigen::Vector3d g1 = kv.cross(axis).normalized();
        Eigen::Vector3d g2 = kv.cross(g1).normalized();
        f.columns.col(0) = g1;
        f.columns.col(1) = g2;
    }
    if (!pos) f.columns = -f.columns;
    return f;
}

}  // namespace sflab

template <>
struct std::hash<sflab::Wavevector> {
    size_t operator()(const sflab::Wavevector& k) const {
        size_t h = std::hash<int>()(k.d);
        for (int i = 0; i < 3; ++i) h = h * 1000003u + std::hash<int>()(k.k[i] + 512);
        return h;
    }
};
