#pragma once

// Explicit low-frequency flow shapes: phase-shifted shears and cellular
// flows.  All are steady Euler flows (B(shape, shape) = 0) and
// eigenfunctions of the dissipation operator, which is what makes them
// usable as exactly trackable control targets.

#include "spectral_field.hpp"

namespace sflab {

// Ensure the field carries mode k; return its index.
inline size_t ensure_mode(SpectralField& f, const Wavevector& k) {
    int idx = f.find_mode(k);
    if (idx >= 0) return size_t(idx);
    f.modes.push_back(k);
    f.coeffs.resize(f.modes.size() * f.ncomp, 0.0);
    return f.modes.size() - 1;
}

// Add v * cos(k.x - c) to a velocity field; k must be in the positive half
// and v orthogonal to k.
inline void add_cos_wave(SpectralField& f, const Wavevector& k, const Eigen::VectorXd& v,
                         double c) {
    if (!positive_half(k)) throw std::invalid_argument("add_cos_wave: use the Z^d_+ representative");
    GammaFrame g = gamma_frame(k);
    size_t mp = ensure_mode(f, k);
    size_t mm = ensure_mode(f, -k);
    for (int i = 0; i < f.ncomp; ++i) {
        double proj = g.columns.col(i).dot(v);
        f.at(mp, i) += std::sin(c) * proj;
        f.at(mm, i) += -std::cos(c) * proj;  // gamma_{-k} = -gamma_k
    }
}

// Add v * sin(k.x - c).
inline void add_sin_wave(SpectralField& f, const Wavevector& k, const Eigen::VectorXd& v,
                         double c) {
    // sin(k.x - c) = cos(k.x - (c + pi/2))
    add_cos_wave(f, k, v, c + kTwoPi / 4.0);
}

inline Eigen::VectorXd unit_axis(int d, int axis) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[axis] = 1.0;
    return e;
}

// d=2 shapes ----------------------------------------------------------------

// (cos(y2 - b), 0)
inline SpectralField shear_x_2d(double b) {
    SpectralField f = make_velocity(2, {});
    add_cos_wave(f, Wavevector(0, 1), unit_axis(2, 0), b);
    return f;
}
// (0, cos(y1 - a))
inline SpectralField shear_y_2d(double a) {
    SpectralField f = make_velocity(2, {});
    add_cos_wave(f, Wavevector(1, 0), unit_axis(2, 1), a);
    return f;
}
// (sin(y2 - b), -sin(y1 - a)): rigid rotation near the stagnation point (a, b)
inline SpectralField cellular_2d(double a, double b) {
    SpectralField f = make_velocity(2, {});
    add_sin_wave(f, Wavevector(0, 1), unit_axis(2, 0), b);
    add_sin_wave(f, Wavevector(1, 0), -unit_axis(2, 1), a);
    return f;
}
// (sin(y2 - b), sin(y1 - a)): hyperbolic stagnation point at (a, b)
inline SpectralField hyperbolic_2d(double a, double b) {
    SpectralField f = make_velocity(2, {});
    add_sin_wave(f, Wavevector(0, 1), unit_axis(2, 0), b);
    add_sin_wave(f, Wavevector(1, 0), unit_axis(2, 1), a);
    return f;
}

// d=3 shapes ----------------------------------------------------------------

// Shear moving axis `move` as a function of coordinate `dep`:
// u = e_move * cos(y_dep - c).
inline SpectralField shear_3d(int move, int dep, double c) {
    SpectralField f = make_velocity(3, {});
    Wavevector k(0, 0, 0);
    k.d = 3;
    k[dep] = 1;
    if (!positive_half(k)) k = -k;
    add_cos_wave(f, k, unit_axis(3, move), c);
    return f;
}

// Cellular flow rotating in the plane of axes (p, q), constant along the
// third axis; stagnation line through (y_p, y_q) = (a, b):
// u_p = -sin(y_q - b), u_q = sin(y_p - a).  At the stagnation line the
// velocity gradient is the rotation generator of the (p, q)-plane.
inline SpectralField cellular_plane_3d(int p, int q, double a, double b) {
    SpectralField f = make_velocity(3, {});
    Wavevector kq(0, 0, 0), kp(0, 0, 0);
    kq.d = kp.d = 3;
    kq[q] = 1;
    kp[p] = 1;
    if (!positive_half(kq)) kq = -kq;
    if (!positive_half(kp)) kp = -kp;
    add_sin_wave(f, kq, -unit_axis(3, p), b);
    add_sin_wave(f, kp, unit_axis(3, q), a);
    return f;
}

}  // namespace sflab
