#pragma once

// Numerical verification of the Lie-bracket spanning conditions behind the
// hypoellipticity of the (u, x, v) and (u, x, A) processes.
//
// Structure exploited throughout: the drift is X0 = U(u) + V(u,x,v) with U
// affine-quadratic in u and V linear in u.  Hence
//   [e_k gamma, X0](x,v)   = (dissipation + nonlinear terms, V(e_k gamma)(x,v))
//   [w', [w, X0]]          = -(B(w,w') + B(w',w), 0)   (a new constant field)
// so the closure only ever produces two kinds of fields:
//   type A: constant u-direction w, zero manifold part
//   type B: ( -L w - B(w,u) - B(u,w),  (w(x), Pi_v grad w(x) v) )
// with B(w,w') + B(w',w) obtained by polarizing the quadratic nonlinearity.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fluid.hpp"
#include "operators.hpp"

namespace sflab {

enum class ClosureTarget { projective, projective_check, matrix };

inline int manifold_tangent_dim(ClosureTarget t, int d) {
    return t == ClosureTarget::matrix ? d + d * d - 1 : d + (d - 1);
}

// tangent value of a single noise bracket at (x, v) or (x, A); x-part first
struct BracketVector {
    Eigen::VectorXd x_part;   // in T_x T^d = R^d
    Eigen::VectorXd m_part;   // ambient: R^d (projective) or R^{d^2} (sl_d, row-major)
};

// [e_k gamma_k^i, V](x, v) = (e_k(x) gamma_k^i, (k.v) e_{-k}(x) Pi_v gamma_k^i)
inline BracketVector projective_bracket(const Wavevector& k, int i, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& v) {
    const int d = k.d;
    GammaFrame gf = gamma_frame(k);
    Eigen::VectorXd gamma = gf.columns.col(i).head(d);
    BracketVector b;
    b.x_part = basis_eval(k, x.data()) * gamma;
    double kv = k.as_vector().head(d).dot(v);
    Eigen::VectorXd pg = gamma - v.dot(gamma) * v;
    b.m_part = kv * basis_eval(-k, x.data()) * pg;
    return b;
}

// dual (v-check) variant: (e_k(x) gamma, -(gamma.v) e_{-k}(x) Pi_v k)
inline BracketVector projective_check_bracket(const Wavevector& k, int i,
                                              const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& v) {
    const int d = k.d;
    GammaFrame gf = gamma_frame(k);
    Eigen::VectorXd gamma = gf.columns.col(i).head(d);
    BracketVector b;
    b.x_part = basis_eval(k, x.data()) * gamma;
    Eigen::VectorXd kvec = k.as_vector().head(d);
    Eigen::VectorXd pk = kvec - v.dot(kvec) * v;
    b.m_part = -gamma.dot(v) * basis_eval(-k, x.data()) * pk;
    return b;
}

// [e_k gamma_k^i, G](x, A) = (e_k(x) gamma, e_{-k}(x) (gamma (x) k) A);
// reported right-translated to sl_d, i.e. without the trailing A.
inline BracketVector matrix_bracket(const Wavevector& k, int i, const Eigen::VectorXd& x) {
    const int d = k.d;
    GammaFrame gf = gamma_frame(k);
    Eigen::VectorXd gamma = gf.columns.col(i).head(d);
    Eigen::VectorXd kvec = k.as_vector().head(d);
    BracketVector b;
    b.x_part = basis_eval(k, x.data()) * gamma;
    Eigen::MatrixXd outer = gamma * kvec.transpose();  // trace-free: gamma.k = 0
    b.m_part.resize(d * d);  // row-major flat
    double e = basis_eval(-k, x.data());
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) b.m_part[r * d + c] = e * outer(r, c);
    return b;
}

namespace detail {

// orthonormal basis of the tangent space at the sample point, as columns of
// an (ambient x tangent-dim) matrix; ambient = d + d (projective) or d + d^2
inline Eigen::MatrixXd tangent_basis(ClosureTarget target, int d, const Eigen::VectorXd& v) {
    if (target != ClosureTarget::matrix) {
        // R^d plus the orthogonal complement of v
        Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(2 * d, 2 * d - 1);
        basis.topLeftCorner(d, d).setIdentity();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
        Eigen::MatrixXd Q = qr.householderQ();
        basis.bottomRightCorner(d, d - 1) = Q.rightCols(d - 1);
        return basis;
    }
    // R^d plus an orthonormal basis of trace-free matrices (row-major flat)
    int n = d * d - 1;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d + d * d, d + n);
    basis.topLeftCorner(d, d).setIdentity();
    int col = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) {
                basis(d + i * d + j, col) = 1.0;
                ++col;
            }
    for (int l = 1; l < d; ++l) {  // diag traceless: (1,..,1,-l,0,..)/sqrt(l(l+1))
        double norm = std::sqrt(double(l) * (l + 1));
        for (int i = 0; i < l; ++i) basis(d + i * d + i, col) = 1.0 / norm;
        basis(d + l * d + l, col) = -double(l) / norm;
        ++col;
    }
    return basis;
}

struct RankResult {
    int rank = 0;
    double gap = 0;  // sigma_rank / sigma_rank+1 (inf when full rank)
    Eigen::VectorXd null_direction;  // tangent coordinates, when deficient
};

// numerical rank with relative threshold and gap diagnostics
inline RankResult numerical_rank(const Eigen::MatrixXd& rows, int dim_tangent) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    double tol = 1e-8 * s[0];
    RankResult r;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > tol) r.rank = i + 1;
    if (r.rank < int(s.size()) && r.rank > 0)
        r.gap = s[r.rank - 1] / std::max(s[r.rank], 1e-300);
    else
        r.gap = 1e300;
    if (r.rank < dim_tangent) r.null_direction = svd.matrixV().col(s.size() - 1);
    return r;
}

inline Eigen::VectorXd random_sphere(int d, NoiseStream& s) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = s.normal();
    return v.normalized();
}

}  // namespace detail

struct RankReport {
    int dim_tangent = 0;
    int min_rank = 0;
    bool pass = false;
    bool inconclusive = false;  // singular value gap below 10^3 at the cut
    std::vector<int> failed_points;
    std::vector<Eigen::VectorXd> null_directions;  // tangent coordinates
};

// Rank of the noise brackets (and their e_k / e_{-k} recombinations) over
// random sample points on the manifold.
inline RankReport spanning_rank(int d, const std::vector<Wavevector>& K, ClosureTarget target,
                                int n_samples, uint64_t seed) {
    RankReport rep;
    rep.dim_tangent = manifold_tangent_dim(target, d);
    rep.min_rank = rep.dim_tangent;
    rep.pass = true;
    NoiseStream s{seed, 0, 0xAB, 0};
    for (int p = 0; p < n_samples; ++p) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x[i] = kTwoPi * s.uniform();
        Eigen::VectorXd v = detail::random_sphere(d, s);
        Eigen::MatrixXd basis = detail::tangent_basis(target, d, v);
        std::vector<Eigen::VectorXd> rows;
        auto push = [&](const BracketVector& b) {
            Eigen::VectorXd amb(b.x_part.size() + b.m_part.size());
            amb << b.x_part, b.m_part;
            rows.push_back(basis.transpose() * amb);
        };
        for (const auto& k : K)
            for (int i = 0; i < d - 1; ++i) {
                BracketVector b1, b2;
                if (target == ClosureTarget::projective) {
                    b1 = projective_bracket(k, i, x, v);
                    b2 = projective_bracket(-k, i, x, v);
                } else if (target == ClosureTarget::projective_check) {
                    b1 = projective_check_bracket(k, i, x, v);
                    b2 = projective_check_bracket(-k, i, x, v);
                } else {
                    b1 = matrix_bracket(k, i, x);
                    b2 = matrix_bracket(-k, i, x);
                }
                push(b1);
                push(b2);
                // the e_k / e_{-k} recombinations isolating x- and m-parts
                double ek = basis_eval(k, x.data()), emk = basis_eval(-k, x.data());
                BracketVector comb1{ek * b1.x_part - emk * b2.x_part,
                                    ek * b1.m_part - emk * b2.m_part};
                BracketVector comb2{emk * b1.x_part + ek * b2.x_part,
                                    emk * b1.m_part + ek * b2.m_part};
                push(comb1);
                push(comb2);
            }
        Eigen::MatrixXd M(rows.size(), rep.dim_tangent);
        for (size_t r = 0; r < rows.size(); ++r) M.row(r) = rows[r];
        auto rr = detail::numerical_rank(M, rep.dim_tangent);
        rep.min_rank = std::min(rep.min_rank, rr.rank);
        if (rr.rank < rep.dim_tangent) {
            rep.pass = false;
            rep.failed_points.push_back(p);
            rep.null_directions.push_back(rr.null_direction);
        } else if (rr.gap < 1e3) {
            rep.inconclusive = true;
        }
    }
    if (rep.inconclusive) rep.pass = false;
    return rep;
}

struct ClosureConfig {
    int d = 2;
    FluidVariant variant = FluidVariant::Stokes;
    int N = 3;                      // Galerkin ball radius
    std::vector<Wavevector> K;      // forced sites (must satisfy K = -K)
    ClosureTarget target = ClosureTarget::projective;
    int depth = 6;
    int n_samples = 20;
    double nu = 1.0, eta = 0.0;
    uint64_t seed = 1;
};

struct ClosureReport {
    int dim_total = 0;              // u-space + manifold tangent
    int dim_u = 0;
    std::vector<int> rank_by_depth; // at the worst sample point
    int final_rank = 0;
    int residual_codim = 0;
    bool pass = false;
    bool inconclusive = false;
    Eigen::VectorXd worst_null;  // (u-coeffs, tangent coords) when deficient
};

// Iterated-bracket closure for (u, x, v) / (u, x, A) with Stokes or
// Galerkin drift, on the exact polarized quadratic form.
inline ClosureReport hormander_closure(const ClosureConfig& cc) {
    const int d = cc.d;
    std::vector<Wavevector> umodes =
        (cc.variant == FluidVariant::Stokes) ? cc.K : modes_in_ball(d, cc.N);
    auto proto = make_velocity(d, umodes);
    const int nc = d - 1;
    const int nH = int(umodes.size()) * nc;
    ClosureReport rep;
    rep.dim_u = nH;
    rep.dim_total = nH + manifold_tangent_dim(cc.target, d);

    auto to_field = [&](const Eigen::VectorXd& w) {
        SpectralField f = proto;
        for (int i = 0; i < nH; ++i) f.coeffs[i] = w[i];
        return f;
    };
    auto to_vec = [&](const SpectralField& f) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(nH);
        for (size_t m = 0; m < proto.n_modes(); ++m) {
            int idx = f.find_mode(proto.modes[m]);
            if (idx >= 0)
                for (int c = 0; c < nc; ++c) w[m * nc + c] = f.at(idx, c);
        }
        return w;
    };
    // polarized quadratic drift: S(a, b) = B(a,b) + B(b,a) in coefficients
    int Ncap = (cc.variant == FluidVariant::Stokes) ? 1000 : cc.N;
    auto S = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> Eigen::VectorXd {
        auto fa = to_field(a), fb = to_field(b), fab = to_field(a + b);
        auto n_ab = euler_nonlinearity(fab, Ncap);
        auto n_a = euler_nonlinearity(fa, Ncap);
        auto n_b = euler_nonlinearity(fb, Ncap);
        return to_vec(n_ab) - to_vec(n_a) - to_vec(n_b);
    };
    bool stokes = (cc.variant == FluidVariant::Stokes);

    // grow the type-A set from the noise directions
    std::vector<Eigen::VectorXd> A_dirs;
    std::vector<Eigen::VectorXd> ortho;  // Gram-Schmidt shadow of A_dirs
    auto try_add = [&](Eigen::VectorXd w) {
        double n0 = w.norm();
        if (n0 < 1e-12) return false;
        Eigen::VectorXd r = w;
        for (const auto& q : ortho) r -= q.dot(r) * q;
        if (r.norm() < 1e-8 * n0) return false;
        A_dirs.push_back(w / n0);  // keep unit scale: S(a,b) norms compound fast
        ortho.push_back(r.normalized());
        return true;
    };
    for (const auto& k : cc.K) {
        int idx = proto.find_mode(k);
        if (idx < 0) throw std::invalid_argument("forced mode outside ball");
        for (int c = 0; c < nc; ++c)
            try_add(Eigen::VectorXd::Unit(nH, int(idx) * nc + c));
    }
    size_t n_noise = A_dirs.size();

    // sample points
    NoiseStream s{cc.seed, 0, 0xC1, 0};
    struct Sample {
        Eigen::VectorXd u, x, v;
        Eigen::MatrixXd basis;
    };
    std::vector<Sample> pts(cc.n_samples);
    for (auto& p : pts) {
        p.u = Eigen::VectorXd(nH);
        for (int i = 0; i < nH; ++i) p.u[i] = s.normal();
        p.x = Eigen::VectorXd(d);
        for (int i = 0; i < d; ++i) p.x[i] = kTwoPi * s.uniform();
        p.v = detail::random_sphere(d, s);
        p.basis = detail::tangent_basis(cc.target, d, p.v);
    }

    // manifold part of the type-B field for direction w: (w(x), Pi_v grad w v)
    // or (w(x), grad w) for the matrix target
    auto manifold_part = [&](const SpectralField& w, const Sample& p) {
        FieldEvaluator ev(w);
        Eigen::VectorXd uval(d);
        ev.velocity(p.x.data(), uval.data());
        Eigen::MatrixXd G(d, d);
        std::vector<double> gbuf(d * d);
        ev.gradient(p.x.data(), gbuf.data());
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) G(i, j) = gbuf[i * d + j];
        int md = (cc.target == ClosureTarget::matrix) ? d * d : d;
        Eigen::VectorXd out(d + md);
        out.head(d) = uval;
        if (cc.target == ClosureTarget::projective) {
            Eigen::VectorXd gv = G * p.v;
            out.tail(d) = gv - p.v.dot(gv) * p.v;
        } else if (cc.target == ClosureTarget::projective_check) {
            Eigen::VectorXd gtv = G.transpose() * p.v;
            out.tail(d) = -(gtv - p.v.dot(gtv) * p.v);
        } else {
            for (int i = 0; i < d; ++i)  // row-major flat, matching the sl basis
                for (int j = 0; j < d; ++j) out[d + i * d + j] = G(i, j);
        }
        return out;
    };
    auto dissipation = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd out = w;
        for (size_t m = 0; m < proto.n_modes(); ++m) {
            double k2 = proto.modes[m].norm2();
            double lam = cc.nu * k2 + cc.eta * k2 * k2;
            for (int c = 0; c < nc; ++c) out[m * nc + c] *= -lam;
        }
        return out;
    };

    // rank at the worst point for a given A-set (with/without type-B fields)
    auto eval_rank = [&](bool with_B, detail::RankResult* worst) {
        int min_rank = rep.dim_total;
        for (const auto& p : pts) {
            std::vector<Eigen::VectorXd> rows;
            int mt = int(p.basis.cols());
            for (const auto& w : A_dirs) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nH + mt);
                row.head(nH) = w;
                rows.push_back(row);
            }
            if (with_B) {
                for (const auto& w : A_dirs) {
                    Eigen::VectorXd upart = dissipation(w);
                    if (!stokes) upart -= S(w, p.u);
                    Eigen::VectorXd m = manifold_part(to_field(w), p);
                    Eigen::VectorXd row(nH + mt);
                    row.head(nH) = upart;
                    row.tail(mt) = p.basis.transpose() * m;
                    if (row.norm() > 1e-12) rows.push_back(row.normalized());
                }
            }
            Eigen::MatrixXd M(rows.size(), nH + mt);
            for (size_t r = 0; r < rows.size(); ++r) M.row(r) = rows[r];
            auto rr = detail::numerical_rank(M, rep.dim_total);
            if (rr.rank < min_rank) {
                min_rank = rr.rank;
                if (worst) *worst = rr;
            }
            if (rr.rank == rep.dim_total && rr.gap < 1e3) rep.inconclusive = true;
        }
        return min_rank;
    };

    detail::RankResult worst;
    rep.rank_by_depth.push_back(eval_rank(false, &worst));  // depth 0: noise only
    for (int depth = 1; depth <= cc.depth; ++depth) {
        if (depth >= 2 && !stokes) {
            // new constant directions from polarized brackets of the A-set
            size_t before = A_dirs.size();
            std::vector<Eigen::VectorXd> snapshot = A_dirs;
            for (size_t a = 0; a < snapshot.size(); ++a)
                for (size_t b = a; b < snapshot.size(); ++b)
                    try_add(S(snapshot[a], snapshot[b]));
            if (A_dirs.size() == before && depth > 2) {
                rep.rank_by_depth.push_back(rep.rank_by_depth.back());
                continue;  // saturated
            }
        }
        rep.rank_by_depth.push_back(eval_rank(true, &worst));
        if (rep.rank_by_depth.back() == rep.dim_total) break;
    }
    rep.final_rank = rep.rank_by_depth.back();
    rep.residual_codim = rep.dim_total - rep.final_rank;
    if (rep.residual_codim > 0) rep.worst_null = worst.null_direction;
    rep.pass = (rep.residual_codim == 0) && !rep.inconclusive;
    (void)n_noise;
    return rep;
}

}  // namespace sflab
