#pragma once

// Shared test utilities: independent quadrature oracles and deterministic
// random field generation.  Oracles here are written from first principles
// (plain grid sums, no reuse of the library's spectral machinery) so they
// can catch systematic errors in the library paths.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sflab/rng.hpp"
#include "sflab/spectral_field.hpp"

namespace testutil {

inline constexpr double kPi = 3.14159265358979323846;

// Uniform tensor-grid quadrature of f over [0,2pi]^d (exact for trig
// polynomials of degree < M in each variable).
inline double quadrature(int d, int M, const std::function<double(const Eigen::VectorXd&)>& f) {
    double h = 2 * kPi / M;
    double sum = 0;
    Eigen::VectorXd x(d);
    if (d == 2) {
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                x << i * h, j * h;
                sum += f(x);
            }
        return sum * h * h;
    }
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            for (int l = 0; l < M; ++l) {
                x << i * h, j * h, l * h;
                sum += f(x);
            }
    return sum * h * h * h;
}

// Independent evaluation of e_k(x) using only the convention definition.
inline double basis_oracle(const sflab::Wavevector& k, const Eigen::VectorXd& x) {
    double phase = 0;
    for (int i = 0; i < k.d; ++i) phase += k[i] * x[i];
    return sflab::positive_half(k) ? std::sin(phase) : std::cos(phase);
}

// Deterministic random point in the box.
inline Eigen::VectorXd random_point(int d, sflab::NoiseStream& s) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = 2 * kPi * s.uniform();
    return x;
}

// Random velocity field on the ball |k|_inf <= N with N(0,1) coefficients.
inline sflab::SpectralField random_velocity(int d, int N, sflab::NoiseStream& s) {
    auto f = sflab::make_velocity(d, sflab::modes_in_ball(d, N));
    for (auto& c : f.coeffs) c = s.normal();
    return f;
}
inline sflab::SpectralField random_scalar(int d, int N, sflab::NoiseStream& s) {
    auto f = sflab::make_scalar(d, sflab::modes_in_ball(d, N));
    for (auto& c : f.coeffs) c = s.normal();
    return f;
}

// Coefficient recovery by quadrature: <F, e_k gamma_k^i> / (pi (2pi)^{d-1})
// for an arbitrary analytic vector field F.
inline double project_coefficient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F, const sflab::Wavevector& k,
    const Eigen::VectorXd& gamma_col, int M) {
    double ip = quadrature(k.d, M, [&](const Eigen::VectorXd& x) {
        return F(x).dot(gamma_col) * basis_oracle(k, x);
    });
    return ip / sflab::basis_norm2(k.d);
}

// Simple linear regression y = a + b t; returns (b, stderr of b).
inline std::pair<double, double> fit_slope(const std::vector<double>& t,
                                           const std::vector<double>& y) {
    size_t n = t.size();
    double mt = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (t[i] - mt) * (t[i] - mt);
        sxy += (t[i] - mt) * (y[i] - my);
    }
    double b = sxy / sxx;
    double a = my - b * mt;
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
        double r = y[i] - a - b * t[i];
        sse += r * r;
    }
    double se = (n > 2) ? std::sqrt(sse / double(n - 2) / sxx) : 0.0;
    return {b, se};
}

// Regularized incomplete beta I_x(a,b) via Lentz's continued fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    auto cf = [](double a, double b, double x) {
        const double eps = 1e-14, fpmin = 1e-300;
        double qab = a + b, qap = a + 1, qam = a - 1;
        double c = 1, d = 1 - qab * x / qap;
        if (std::abs(d) < fpmin) d = fpmin;
        d = 1 / d;
        double h = d;
        for (int m = 1; m <= 200; ++m) {
            int m2 = 2 * m;
            double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1 / d;
            h *= d * c;
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1) < eps) break;
        }
        return h;
    };
    double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    double front = std::exp(a * std::log(x) + b * std::log(1 - x) - lbeta);
    if (x < (a + 1) / (a + b + 2)) return front * cf(a, b, x) / a;
    return 1 - std::exp(b * std::log(1 - x) + a * std::log(x) - lbeta) * cf(b, a, 1 - x) / b;
}

// Upper tail p-value of an F statistic with (d1, d2) degrees of freedom.
inline double f_test_pvalue(double F, double d1, double d2) {
    if (F <= 0) return 1;
    return incomplete_beta(d2 / 2, d1 / 2, d2 / (d2 + d1 * F));
}

// One-way ANOVA F statistic for equally sized groups.
inline double anova_f(const std::vector<std::vector<double>>& groups) {
    size_t k = groups.size(), n = groups[0].size();
    double grand = 0;
    std::vector<double> means(k, 0.0);
    for (size_t g = 0; g < k; ++g) {
        for (double v : groups[g]) means[g] += v;
        means[g] /= n;
        grand += means[g];
    }
    grand /= k;
    double ssb = 0, ssw = 0;
    for (size_t g = 0; g < k; ++g) {
        ssb += n * (means[g] - grand) * (means[g] - grand);
        for (double v : groups[g]) ssw += (v - means[g]) * (v - means[g]);
    }
    double msb = ssb / (k - 1);
    double msw = ssw / (k * (n - 1));
    return msb / msw;
}

}  // namespace testutil
