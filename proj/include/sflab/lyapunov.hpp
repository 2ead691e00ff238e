#pragma once

// Lyapunov exponent estimation by periodic QR re-orthonormalization of the
// matrix cocycle, growth-rate checks over direction grids, and empirical
// projective occupation measures.

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "fluid.hpp"
#include "lagrangian.hpp"

namespace sflab {

struct ExponentEstimate {
    Eigen::VectorXd lambda;     // per-exponent point estimates
    Eigen::VectorXd stderr_;    // standard errors
    Eigen::VectorXd ci_low, ci_high;  // 95% interval
    double horizon = 0;
    int n_traj = 0;
    bool ci_too_wide = false;   // flagged when the CI is wider than requested
    std::vector<Eigen::VectorXd> per_traj;  // per-trajectory rates
    Eigen::VectorXd batch_stderr;           // within-trajectory batch-means SE (traj 0)

    double sum_lambda() const { return lambda.sum(); }
};

namespace detail {

// QR re-orthonormalization with positive diagonal; accumulates log R_ii.
inline void qr_renorm(Eigen::Matrix3d& A, int d, Eigen::VectorXd& logs) {
    Eigen::MatrixXd M = A.topLeftCorner(d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
        double r = R(i, i);
        if (r < 0) Q.col(i) = -Q.col(i);
        logs[i] += std::log(std::abs(r));
    }
    A.topLeftCorner(d, d) = Q;
}

inline Eigen::VectorXd random_unit(int d, NoiseStream& s) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = s.normal();
    return v.normalized();
}

// Run a simple index-parallel loop on up to n_threads workers.  Results must
// be written to pre-sized slots so the reduction order is fixed.
template <typename F>
void parallel_for(int n, int n_threads, F&& body) {
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (int w = 0; w < n_threads; ++w)
        futs.push_back(std::async(std::launch::async, [&]() {
            int i;
            while ((i = next.fetch_add(1)) < n) body(i);
        }));
    for (auto& f : futs) f.get();
}

}  // namespace detail

struct LyapunovOptions {
    double horizon = 1000;
    int n_traj = 16;
    int qr_cadence = 10;       // Lagrangian steps between re-orthonormalizations
    int n_batches = 50;
    double burn_in = 5.0;      // fluid burn-in when no exact stationary draw exists
    double requested_ci_width = 0;  // 0 = no flag
    int n_threads = 1;
    uint64_t seed = 1;
    uint64_t init_seed = 0;  // 0: derive initial (x, v) stream from `seed`

    uint64_t init_stream_seed() const { return init_seed ? init_seed : (seed ^ 0xBEEF); }
};

// One trajectory's QR rates, plus optional per-batch rates.
inline Eigen::VectorXd qr_rates_single(const FluidModel& model, const LyapunovOptions& opt,
                                       uint64_t traj, std::vector<Eigen::VectorXd>* batches) {
    const auto& cfg = model.config();
    const int d = cfg.d;
    FluidState f = (cfg.variant == FluidVariant::Stokes) ? model.stationary_draw(traj)
                                                         : model.initial_state();
    long burn_steps = (cfg.variant == FluidVariant::Stokes)
                          ? 0
                          : long(opt.burn_in / cfg.dt + 0.5);
    for (long i = 0; i < burn_steps; ++i) model.step(f);
    NoiseStream init{opt.init_stream_seed(), traj, 0xFFFF, 0};
    Eigen::VectorXd x0(d);
    for (int i = 0; i < d; ++i) x0[i] = kTwoPi * init.uniform();
    auto ls = LagrangianState::start(d, x0, detail::random_unit(d, init));
    FieldEvaluator ev(f.u);
    long steps = long(opt.horizon / cfg.dt + 0.5);
    Eigen::VectorXd logs = Eigen::VectorXd::Zero(d);
    long batch_len = std::max(1l, steps / opt.n_batches);
    Eigen::VectorXd batch_start = logs;
    double t_accum = 0;
    for (long i = 0; i < steps; ++i) {
        model.step(f);
        ev.update_coeffs(f.u);
        flow_step(ls, ev, cfg.dt);
        if ((i + 1) % opt.qr_cadence == 0 || i + 1 == steps)
            detail::qr_renorm(ls.A, d, logs);
        t_accum += cfg.dt;
        if (batches && ((i + 1) % batch_len == 0)) {
            batches->push_back((logs - batch_start) / (batch_len * cfg.dt));
            batch_start = logs;
        }
    }
    return logs / t_accum;
}

// QR-based exponent estimation over an ensemble of independent
// (fluid, Lagrangian) trajectories.
inline ExponentEstimate estimate_exponents(const FluidModelConfig& cfg,
                                           const LyapunovOptions& opt) {
    const int d = cfg.d;
    ExponentEstimate est;
    est.horizon = opt.horizon;
    est.n_traj = opt.n_traj;
    est.per_traj.assign(opt.n_traj, Eigen::VectorXd());
    std::vector<std::vector<Eigen::VectorXd>> batches(opt.n_traj);
    detail::parallel_for(opt.n_traj, opt.n_threads, [&](int tr) {
        FluidModel model(cfg, opt.seed, uint64_t(tr));
        est.per_traj[tr] =
            qr_rates_single(model, opt, uint64_t(tr), tr == 0 ? &batches[0] : nullptr);
    });
    est.lambda = Eigen::VectorXd::Zero(d);
    for (const auto& r : est.per_traj) est.lambda += r;
    est.lambda /= opt.n_traj;
    est.stderr_ = Eigen::VectorXd::Zero(d);
    if (opt.n_traj > 1) {
        for (const auto& r : est.per_traj) {
            Eigen::VectorXd dd = r - est.lambda;
            est.stderr_ += dd.cwiseProduct(dd);
        }
        est.stderr_ = (est.stderr_ / double(opt.n_traj - 1) / double(opt.n_traj)).cwiseSqrt();
    }
    // within-trajectory batch-means SE (robust to time correlation)
    est.batch_stderr = Eigen::VectorXd::Zero(d);
    if (!batches[0].empty()) {
        Eigen::VectorXd bm = Eigen::VectorXd::Zero(d);
        for (const auto& b : batches[0]) bm += b;
        bm /= double(batches[0].size());
        for (const auto& b : batches[0]) {
            Eigen::VectorXd dd = b - bm;
            est.batch_stderr += dd.cwiseProduct(dd);
        }
        size_t nb = batches[0].size();
        if (nb > 1)
            est.batch_stderr = (est.batch_stderr / double(nb - 1) / double(nb)).cwiseSqrt();
    }
    if (opt.n_traj == 1) est.stderr_ = est.batch_stderr;
    est.ci_low = est.lambda - 1.96 * est.stderr_;
    est.ci_high = est.lambda + 1.96 * est.stderr_;
    if (opt.requested_ci_width > 0)
        est.ci_too_wide = (est.ci_high - est.ci_low).maxCoeff() > opt.requested_ci_width;
    return est;
}

// Exponents of a frozen (time-independent) velocity field along one orbit.
inline Eigen::VectorXd frozen_field_exponents(const SpectralField& u, const Eigen::VectorXd& x0,
                                              double horizon, double dt, int qr_cadence = 10) {
    const int d = u.d;
    FieldEvaluator ev(u);
    auto ls = LagrangianState::start(d, x0, Eigen::VectorXd::Unit(d, 0));
    long steps = long(horizon / dt + 0.5);
    Eigen::VectorXd logs = Eigen::VectorXd::Zero(d);
    for (long i = 0; i < steps; ++i) {
        flow_step(ls, ev, dt);
        if ((i + 1) % qr_cadence == 0 || i + 1 == steps) detail::qr_renorm(ls.A, d, logs);
    }
    return logs / (steps * dt);
}

struct DirectionGrowthReport {
    std::vector<Eigen::VectorXd> directions;
    std::vector<double> rates;        // ensemble-mean fitted rate per direction
    std::vector<double> rate_stderr;  // cross-trajectory SE
    std::vector<double> rates_invt;   // same for the inverse-transpose cocycle
    double max_deviation = 0;         // max |rate - lambda1|
};

inline std::vector<Eigen::VectorXd> direction_grid(int d, int n) {
    std::vector<Eigen::VectorXd> out;
    if (d == 2) {
        for (int j = 0; j < n; ++j) {
            double th = 3.14159265358979323846 * j / n;  // projective: half circle
            out.push_back(Eigen::Vector2d(std::cos(th), std::sin(th)));
        }
    } else {
        // Fibonacci hemisphere
        double golden = (1 + std::sqrt(5.0)) / 2;
        for (int j = 0; j < n; ++j) {
            double z = (j + 0.5) / n;  // upper hemisphere (projective)
            double r = std::sqrt(1 - z * z);
            double th = kTwoPi * j / golden;
            out.push_back(Eigen::Vector3d(r * std::cos(th), r * std::sin(th), z));
        }
    }
    return out;
}

// (1/T) log |A_T v| for every v in a direction grid (and the -T cocycle),
// averaged over trajectories.
inline DirectionGrowthReport expansion_all_directions(const FluidModelConfig& cfg,
                                                      const LyapunovOptions& opt, int n_dirs,
                                                      double lambda1) {
    const int d = cfg.d;
    DirectionGrowthReport rep;
    rep.directions = direction_grid(d, n_dirs);
    std::vector<std::vector<double>> rates(n_dirs), rates_invt(n_dirs);
    for (auto& r : rates) r.resize(opt.n_traj);
    for (auto& r : rates_invt) r.resize(opt.n_traj);
    detail::parallel_for(opt.n_traj, opt.n_threads, [&](int tr) {
        FluidModel model(cfg, opt.seed, uint64_t(tr));
        FluidState f = (cfg.variant == FluidVariant::Stokes) ? model.stationary_draw(tr)
                                                             : model.initial_state();
        NoiseStream init{opt.init_stream_seed(), uint64_t(tr), 0xFFFF, 0};
        Eigen::VectorXd x0(d);
        for (int i = 0; i < d; ++i) x0[i] = kTwoPi * init.uniform();
        auto ls = LagrangianState::start(d, x0, Eigen::VectorXd::Unit(d, 0));
        FieldEvaluator ev(f.u);
        long steps = long(opt.horizon / cfg.dt + 0.5);
        for (long i = 0; i < steps; ++i) {
            model.step(f);
            ev.update_coeffs(f.u);
            flow_step(ls, ev, cfg.dt);
        }
        double T = steps * cfg.dt;
        for (int j = 0; j < n_dirs; ++j) {
            Eigen::VectorXd v = rep.directions[j];
            rates[j][tr] = (std::log((ls.A_active() * v).norm()) + ls.logNorm) / T;
            rates_invt[j][tr] =
                (std::log((ls.Ainvt_active() * v).norm()) + ls.logNormInvT) / T;
        }
    });
    for (int j = 0; j < n_dirs; ++j) {
        double m = std::accumulate(rates[j].begin(), rates[j].end(), 0.0) / opt.n_traj;
        double mi = std::accumulate(rates_invt[j].begin(), rates_invt[j].end(), 0.0) / opt.n_traj;
        double var = 0;
        for (double r : rates[j]) var += (r - m) * (r - m);
        var = (opt.n_traj > 1) ? var / (opt.n_traj - 1) / opt.n_traj : 0;
        rep.rates.push_back(m);
        rep.rate_stderr.push_back(std::sqrt(var));
        rep.rates_invt.push_back(mi);
        rep.max_deviation = std::max(rep.max_deviation, std::abs(m - lambda1));
    }
    return rep;
}

// Occupation histogram of (x, v) with the projective identification v ~ -v.
// x is binned per coordinate; v by angle (d=2) or (z, azimuth) (d=3).
struct ProjectiveHistogram {
    int nx = 8, nv = 16;
    int d = 2;
    std::vector<double> density;  // normalized to sum 1

    static double tv_distance(const ProjectiveHistogram& a, const ProjectiveHistogram& b) {
        double s = 0;
        for (size_t i = 0; i < a.density.size(); ++i) s += std::abs(a.density[i] - b.density[i]);
        return 0.5 * s;
    }
    // marginal over x bins (flattened over v)
    std::vector<double> x_marginal() const {
        int nxb = (d == 2) ? nx * nx : nx * nx * nx;
        std::vector<double> out(nxb, 0.0);
        for (size_t i = 0; i < density.size(); ++i) out[i / nv] += density[i];
        return out;
    }
};

inline ProjectiveHistogram projective_measure_histogram(const FluidModelConfig& cfg,
                                                        const LyapunovOptions& opt, int nx,
                                                        int nv) {
    const int d = cfg.d;
    ProjectiveHistogram h;
    h.nx = nx;
    h.nv = nv;
    h.d = d;
    int nxb = (d == 2) ? nx * nx : nx * nx * nx;
    h.density.assign(size_t(nxb) * nv, 0.0);
    FluidModel model(cfg, opt.seed, 0);
    FluidState f = (cfg.variant == FluidVariant::Stokes) ? model.stationary_draw(0)
                                                         : model.initial_state();
    NoiseStream init{opt.init_stream_seed(), 0, 0xFFFF, 0};
    Eigen::VectorXd x0(d);
    for (int i = 0; i < d; ++i) x0[i] = kTwoPi * init.uniform();
    auto ls = LagrangianState::start(d, x0, detail::random_unit(d, init));
    FieldEvaluator ev(f.u);
    long steps = long(opt.horizon / cfg.dt + 0.5);
    long count = 0;
    for (long i = 0; i < steps; ++i) {
        model.step(f);
        ev.update_coeffs(f.u);
        flow_step(ls, ev, cfg.dt);
        // bin
        int xb = 0;
        for (int c = 0; c < d; ++c) {
            int b = std::min(nx - 1, int(std::fmod(ls.x[c] + kTwoPi, kTwoPi) / kTwoPi * nx));
            xb = xb * nx + b;
        }
        Eigen::Vector3d v = ls.v;
        // projective identification: fold to a canonical representative
        if ((d == 2 && v[1] < 0) || (d == 3 && v[2] < 0)) v = -v;
        int vb;
        if (d == 2) {
            double th = std::atan2(v[1], v[0]);  // in [0, pi)
            if (th < 0) th += 3.14159265358979323846;
            vb = std::min(nv - 1, int(th / 3.14159265358979323846 * nv));
        } else {
            int nz = std::max(1, nv / 4);
            int na = nv / nz;
            int zb = std::min(nz - 1, int(v[2] * nz));
            double az = std::atan2(v[1], v[0]) + 3.14159265358979323846;
            int ab = std::min(na - 1, int(az / kTwoPi * na));
            vb = std::min(nv - 1, zb * na + ab);
        }
        h.density[size_t(xb) * nv + vb] += 1.0;
        ++count;
    }
    for (auto& c : h.density) c /= double(count);
    return h;
}

}  // namespace sflab
