#pragma once

// Experiment driver: parse a TOML config into a typed experiment description,
// run it reproducibly (same config + seed => byte-identical summary), and
// write the standard artifact set into an output directory:
//   summary.json   deterministic results (no timestamps)
//   manifest.json  run metadata (config hash, version, wall time)
//   series.csv     primary time series / tables, kind-dependent
//   *.jsonl        streamed records where the kind produces them
//   checkpoint.json  (simulate) resumable fluid state

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sflab/control.hpp"
#include "sflab/fluid.hpp"
#include "sflab/hypoellipticity.hpp"
#include "sflab/lyapunov.hpp"
#include "sflab/scalar.hpp"
#include "sflab/toml.hpp"
#include "sflab/yaglom.hpp"

namespace sflab {

inline constexpr const char* kVersion = "sflab 0.1.0";

struct SimulateParams {
    double horizon = 10;
    double checkpoint_interval = 0;  // 0: final checkpoint only
    int sample_every = 1;            // CSV cadence in steps
};

struct LyapunovParams {
    double horizon = 100;
    int n_traj = 8;
    int qr_cadence = 10;
    int n_batches = 20;
    double burn_in = 5.0;
    double requested_ci_width = 0;
};

struct ScalarParams {
    double kappa = 0.1;
    int grid = 16;  // scalar truncation |k|_inf
    ForcingSpec source;
    double burn_in = 20, horizon = 100, sample_spacing = 0.5;
    int n_snapshots = 0, n_batches = 20;
    // yaglom extras
    double ell_max = 3.0, R = 3.0;
    int n_ell = 60, n_base = 8, base_grid = 0, n_dirs = 64;
    double ell_I = 1.0;
};

struct HormanderParams {
    ClosureTarget target = ClosureTarget::projective;
    int n_points = 1000;
    int depth = 6;
    int n_samples = 20;
};

struct ControlParams {
    Eigen::VectorXd x0, v0, x1, v1;
    double M = 10;
    int N = 2;  // ball radius for the PDE residual check
};

struct ExperimentConfig {
    std::string kind;  // simulate | lyapunov | scalar | yaglom | hormander | control
    uint64_t seed = 1;
    int threads = 1;
    FluidModelConfig fluid;
    SimulateParams simulate;
    LyapunovParams lyapunov;
    ScalarParams scalar;
    HormanderParams hormander;
    ControlParams control;
};

namespace experiments_detail {

inline nlohmann::json wavevector_json(const Wavevector& k) {
    nlohmann::json j = nlohmann::json::array();
    for (int i = 0; i < k.d; ++i) j.push_back(k[i]);
    return j;
}

inline nlohmann::json forcing_json(const ForcingSpec& f) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& [k, q] : f.table) {
        nlohmann::json e;
        e["k"] = wavevector_json(k);
        e["q"] = q;
        modes.push_back(e);
    }
    return {{"d", f.d},
            {"modes", modes},
            {"alpha", f.alpha},
            {"assumption_low_modes", f.assumption_low_modes},
            {"assumption_high_modes", f.assumption_high_modes},
            {"L", f.L}};
}

inline Wavevector parse_mode(const TomlValue& v, int d, const std::string& key) {
    if (v.type != TomlValue::Type::array || int(v.arr.size()) != d)
        throw TomlError("field '" + key + "' entries must be length-" + std::to_string(d) +
                        " integer arrays");
    Wavevector k = (d == 2) ? Wavevector(0, 0) : Wavevector(0, 0, 0);
    for (int i = 0; i < d; ++i) {
        if (v.arr[i].type != TomlValue::Type::integer)
            throw TomlError("field '" + key + "' entries must be integer arrays");
        k[i] = int(v.arr[i].i);
    }
    return k;
}

inline ForcingSpec parse_forcing(const TomlTable& t, const std::string& prefix, int d) {
    ForcingSpec f;
    f.d = d;
    const auto& modes = t.get_array(prefix + ".modes");
    double q = t.get_double(prefix + ".amplitude");
    for (const auto& mv : modes) {
        Wavevector k = parse_mode(mv, d, prefix + ".modes");
        f.table[k] = q;
        f.table[-k] = q;
    }
    f.alpha = t.get_double_or(prefix + ".alpha", 0.0);
    f.assumption_low_modes = t.get_bool_or(prefix + ".assumption_low_modes", false);
    f.assumption_high_modes = t.get_bool_or(prefix + ".assumption_high_modes", false);
    f.L = int(t.get_int_or(prefix + ".L", 1));
    return f;
}

inline Eigen::VectorXd parse_point(const TomlTable& t, const std::string& key, int d) {
    const auto& a = t.get_array(key);
    if (int(a.size()) != d)
        throw TomlError("field '" + key + "' must have " + std::to_string(d) + " entries");
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = a[i].as_double();
    return x;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

inline void write_json_file(const std::filesystem::path& p, const nlohmann::json& j) {
    write_text(p, j.dump(2) + "\n");
}

}  // namespace experiments_detail

inline FluidVariant parse_variant(const std::string& s) {
    if (s == "stokes") return FluidVariant::Stokes;
    if (s == "galerkin") return FluidVariant::GalerkinNSE;
    if (s == "nse2d") return FluidVariant::NSE2D;
    if (s == "hyper3d") return FluidVariant::HyperNSE3D;
    throw TomlError("field 'fluid.variant' must be one of stokes, galerkin, nse2d, hyper3d");
}

inline ExperimentConfig parse_experiment(const TomlTable& t) {
    using namespace experiments_detail;
    ExperimentConfig c;
    c.kind = t.get_string("kind");
    c.seed = uint64_t(t.get_int_or("seed", 1));
    c.threads = int(t.get_int_or("threads", 1));

    c.fluid.variant = parse_variant(t.get_string("fluid.variant"));
    c.fluid.d = int(t.get_int("fluid.d"));
    c.fluid.nu = t.get_double_or("fluid.nu", 1.0);
    c.fluid.eta = t.get_double_or("fluid.eta", 0.0);
    c.fluid.N = int(t.get_int_or("fluid.N", 0));
    c.fluid.dt = t.get_double_or("fluid.dt", 0.01);
    c.fluid.forcing = parse_forcing(t, "forcing", c.fluid.d);

    if (c.kind == "simulate") {
        c.simulate.horizon = t.get_double("simulate.horizon");
        c.simulate.checkpoint_interval = t.get_double_or("simulate.checkpoint_interval", 0.0);
        c.simulate.sample_every = int(t.get_int_or("simulate.sample_every", 1));
    } else if (c.kind == "lyapunov") {
        c.lyapunov.horizon = t.get_double("lyapunov.horizon");
        c.lyapunov.n_traj = int(t.get_int_or("lyapunov.n_traj", 8));
        c.lyapunov.qr_cadence = int(t.get_int_or("lyapunov.qr_cadence", 10));
        c.lyapunov.n_batches = int(t.get_int_or("lyapunov.n_batches", 20));
        c.lyapunov.burn_in = t.get_double_or("lyapunov.burn_in", 5.0);
        c.lyapunov.requested_ci_width = t.get_double_or("lyapunov.requested_ci_width", 0.0);
    } else if (c.kind == "scalar" || c.kind == "yaglom") {
        c.scalar.kappa = t.get_double("scalar.kappa");
        c.scalar.grid = int(t.get_int("scalar.grid"));
        c.scalar.source = parse_forcing(t, "source", c.fluid.d);
        c.scalar.burn_in = t.get_double_or("scalar.burn_in", 20.0);
        c.scalar.horizon = t.get_double("scalar.horizon");
        c.scalar.sample_spacing = t.get_double_or("scalar.sample_spacing", 0.5);
        c.scalar.n_snapshots = int(t.get_int_or("scalar.n_snapshots", 0));
        c.scalar.n_batches = int(t.get_int_or("scalar.n_batches", 20));
        c.scalar.ell_max = t.get_double_or("yaglom.ell_max", 3.0);
        c.scalar.R = t.get_double_or("yaglom.R", 3.0);
        c.scalar.n_ell = int(t.get_int_or("yaglom.n_ell", 60));
        c.scalar.n_base = int(t.get_int_or("yaglom.n_base", 8));
        c.scalar.base_grid = int(t.get_int_or("yaglom.base_grid", 0));
        c.scalar.n_dirs = int(t.get_int_or("yaglom.n_dirs", 64));
        c.scalar.ell_I = t.get_double_or("yaglom.ell_I", 1.0);
        if (c.kind == "yaglom" && c.scalar.n_snapshots <= 0)
            throw TomlError("field 'scalar.n_snapshots' must be positive for yaglom runs");
    } else if (c.kind == "hormander") {
        std::string tgt = t.get_string_or("hormander.target", "projective");
        if (tgt == "projective")
            c.hormander.target = ClosureTarget::projective;
        else if (tgt == "projective_check")
            c.hormander.target = ClosureTarget::projective_check;
        else if (tgt == "matrix")
            c.hormander.target = ClosureTarget::matrix;
        else
            throw TomlError(
                "field 'hormander.target' must be projective, projective_check, or matrix");
        c.hormander.n_points = int(t.get_int_or("hormander.n_points", 1000));
        c.hormander.depth = int(t.get_int_or("hormander.depth", 6));
        c.hormander.n_samples = int(t.get_int_or("hormander.n_samples", 20));
    } else if (c.kind == "control") {
        int d = c.fluid.d;
        c.control.x0 = parse_point(t, "control.x0", d);
        c.control.v0 = parse_point(t, "control.v0", d).normalized();
        c.control.x1 = parse_point(t, "control.x1", d);
        c.control.v1 = parse_point(t, "control.v1", d).normalized();
        c.control.M = t.get_double_or("control.M", 10.0);
        c.control.N = int(t.get_int_or("control.N", 2));
    } else if (c.kind != "validate") {
        throw TomlError("field 'kind' has unknown value '" + c.kind + "'");
    }
    return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse_experiment(parse_toml(in));
}

// Canonical JSON of the physics-determining part of the config.  The hash
// deliberately excludes run horizons and output options so that a checkpoint
// can be resumed under an extended horizon but never under different physics.
inline nlohmann::json physics_json(const ExperimentConfig& c) {
    return {{"kind", c.kind},
            {"seed", c.seed},
            {"fluid",
             {{"variant", to_string(c.fluid.variant)},
              {"d", c.fluid.d},
              {"nu", c.fluid.nu},
              {"eta", c.fluid.eta},
              {"N", c.fluid.N},
              {"dt", c.fluid.dt},
              {"forcing", experiments_detail::forcing_json(c.fluid.forcing)}}}};
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(physics_json(c).dump());
    return os.str();
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
    std::vector<std::string> failures, warnings, notes;
    bool ok() const { return failures.empty(); }

    nlohmann::json to_json() const {
        return {{"result", ok() ? "PASS" : "FAIL"},
                {"failures", failures},
                {"warnings", warnings},
                {"notes", notes}};
    }
};

inline ValidationReport validate_experiment(const ExperimentConfig& c) {
    ValidationReport r;
    try {
        c.fluid.check();
    } catch (const std::exception& e) {
        r.failures.push_back(e.what());
    }
    for (const auto& p : c.fluid.forcing.validate()) r.failures.push_back(p);

    if (c.fluid.variant == FluidVariant::Stokes && c.fluid.forcing.symmetric() &&
        !c.fluid.forcing.table.empty() && r.failures.empty()) {
        bool axes_only = true;
        for (const auto& [k, q] : c.fluid.forcing.table) {
            int nz = 0, kinf = 0;
            for (int i = 0; i < k.d; ++i) {
                if (k[i] != 0) ++nz;
                kinf = std::max(kinf, std::abs(k[i]));
            }
            if (nz != 1 || kinf != 1) axes_only = false;
        }
        if (axes_only && c.fluid.forcing.table.size() == size_t(2 * c.fluid.d))
            r.notes.push_back("forcing: minimal axis set under the Stokes model is admissible");
    }

    double u_scale = 0;
    for (const auto& [k, q] : c.fluid.forcing.table) u_scale += q * q / (2 * c.fluid.dissipation_rate(k));
    u_scale = std::sqrt(u_scale);
    if (c.fluid.nonlinear()) {
        double bound = FluidModelConfig::default_dt(c.fluid.nu, std::max(c.fluid.N, 1));
        if (c.fluid.dt > bound) {
            std::ostringstream os;
            os << "dt = " << c.fluid.dt << " exceeds the stability bound " << bound
               << " (= 0.5 / (nu N^2))";
            r.warnings.push_back(os.str());
        }
    } else {
        double bound = c.fluid.cfl_bound(std::max(u_scale, 1e-3));
        if (c.fluid.dt > bound) {
            std::ostringstream os;
            os << "dt = " << c.fluid.dt << " exceeds the advection bound " << bound
               << " for the expected stationary amplitude";
            r.warnings.push_back(os.str());
        }
    }

    if (c.kind == "scalar" || c.kind == "yaglom") {
        if (c.scalar.kappa <= 0) r.failures.push_back("scalar: kappa must be > 0");
        if (c.scalar.grid < 1) r.failures.push_back("scalar: grid cutoff must be >= 1");
        for (const auto& p : c.scalar.source.validate()) r.failures.push_back("source " + p);
    }
    if (c.kind == "hormander" && c.fluid.variant == FluidVariant::GalerkinNSE && c.fluid.N < 3)
        r.failures.push_back("hormander: Galerkin closure requires N >= 3");
    return r;
}

// ---------------------------------------------------------------------------
// Checkpoints (simulate)

inline nlohmann::json checkpoint_json(const ExperimentConfig& c, const FluidState& s) {
    return {{"config_hash", config_hash(c)},
            {"t", s.t},
            {"noise_step", s.noise_step},
            {"u", field_to_json(s.u)}};
}

inline FluidState checkpoint_load(const ExperimentConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    nlohmann::json j;
    in >> j;
    std::string h = j.at("config_hash").get<std::string>();
    if (h != config_hash(c))
        throw std::runtime_error("checkpoint refused: config hash " + h +
                                 " does not match the current config " + config_hash(c));
    FluidState s;
    s.t = j.at("t").get<double>();
    s.noise_step = j.at("noise_step").get<uint64_t>();
    s.u = field_from_json(j.at("u"));
    return s;
}

// ---------------------------------------------------------------------------
// Runners.  Each returns the deterministic summary; artifacts land in out_dir.

namespace experiments_detail {

inline std::ofstream open_csv(const std::filesystem::path& p, const std::string& header) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << header << "\n" << std::setprecision(17);
    return out;
}

inline nlohmann::json run_simulate(const ExperimentConfig& c, const std::filesystem::path& dir,
                                   bool resume) {
    FluidModel model(c.fluid, c.seed);
    auto ckpt_path = dir / "checkpoint.json";
    FluidState s;
    if (resume) {
        s = checkpoint_load(c, ckpt_path);
    } else {
        s = model.initial_state();
    }
    auto csv = open_csv(dir / "series.csv", "t,energy");
    std::ofstream events(dir / "events.jsonl");
    long n_steps = std::llround((c.simulate.horizon - s.t) / c.fluid.dt);
    double next_ckpt = c.simulate.checkpoint_interval > 0
                           ? s.t + c.simulate.checkpoint_interval
                           : std::numeric_limits<double>::infinity();
    csv << s.t << "," << s.u.norm2() << "\n";
    for (long i = 0; i < n_steps; ++i) {
        model.step(s);
        if ((i + 1) % c.simulate.sample_every == 0 || i + 1 == n_steps)
            csv << s.t << "," << s.u.norm2() << "\n";
        if (s.t >= next_ckpt - c.fluid.dt / 2 && i + 1 < n_steps) {
            write_json_file(ckpt_path, checkpoint_json(c, s));
            events << nlohmann::json{{"event", "checkpoint"}, {"t", s.t}}.dump() << "\n";
            next_ckpt += c.simulate.checkpoint_interval;
        }
    }
    write_json_file(ckpt_path, checkpoint_json(c, s));
    events << nlohmann::json{{"event", "checkpoint"}, {"t", s.t}}.dump() << "\n";
    return {{"t_final", s.t},
            {"noise_step", s.noise_step},
            {"energy_final", s.u.norm2()},
            {"u_final", field_to_json(s.u)}};
}

inline nlohmann::json run_lyapunov(const ExperimentConfig& c, const std::filesystem::path& dir) {
    LyapunovOptions opt;
    opt.horizon = c.lyapunov.horizon;
    opt.n_traj = c.lyapunov.n_traj;
    opt.qr_cadence = c.lyapunov.qr_cadence;
    opt.n_batches = c.lyapunov.n_batches;
    opt.burn_in = c.lyapunov.burn_in;
    opt.requested_ci_width = c.lyapunov.requested_ci_width;
    opt.n_threads = c.threads;
    opt.seed = c.seed;
    auto est = estimate_exponents(c.fluid, opt);
    auto csv = open_csv(dir / "series.csv", "trajectory,exponent,rate");
    for (size_t j = 0; j < est.per_traj.size(); ++j)
        for (int i = 0; i < est.per_traj[j].size(); ++i)
            csv << j << "," << i << "," << est.per_traj[j][i] << "\n";
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    return {{"lambda", vec(est.lambda)},
            {"stderr", vec(est.stderr_)},
            {"ci_low", vec(est.ci_low)},
            {"ci_high", vec(est.ci_high)},
            {"sum_lambda", est.sum_lambda()},
            {"horizon", est.horizon},
            {"n_traj", est.n_traj},
            {"ci_too_wide", est.ci_too_wide}};
}

inline ScalarRunResult scalar_run(const ExperimentConfig& c) {
    ScalarRunOptions opt;
    opt.burn_in = c.scalar.burn_in;
    opt.horizon = c.scalar.horizon;
    opt.sample_spacing = c.scalar.sample_spacing;
    opt.n_snapshots = c.scalar.n_snapshots;
    opt.n_batches = c.scalar.n_batches;
    opt.seed = c.seed;
    return run_stationary_scalar(c.fluid, c.scalar.grid, c.scalar.kappa, c.scalar.source, opt);
}

inline nlohmann::json run_scalar(const ExperimentConfig& c, const std::filesystem::path& dir) {
    auto res = scalar_run(c);
    auto csv = open_csv(dir / "series.csv", "t,energy,grad_energy");
    for (size_t i = 0; i < res.times.size(); ++i)
        csv << res.times[i] << "," << res.energy[i] << "," << res.grad_energy[i] << "\n";
    std::ofstream snaps(dir / "snapshots.jsonl");
    for (size_t i = 0; i < res.snapshots.size(); ++i)
        snaps << nlohmann::json{{"index", i},
                                {"u", field_to_json(res.snapshots[i].first)},
                                {"g", field_to_json(res.snapshots[i].second)}}
                     .dump()
              << "\n";
    return {{"kappa", res.kappa},
            {"epsbar", res.epsbar},
            {"mean_grad_energy", res.mean_grad_energy},
            {"grad_energy_se", res.grad_energy_se},
            {"balance_error", res.balance_error()},
            {"balance_se", res.balance_se()},
            {"tail_fraction", res.tail_fraction}};
}

inline nlohmann::json run_yaglom(const ExperimentConfig& c, const std::filesystem::path& dir) {
    auto res = scalar_run(c);
    StructureFunctionOptions sopt;
    sopt.ell_max = c.scalar.ell_max;
    sopt.n_ell = c.scalar.n_ell;
    sopt.n_base = c.scalar.n_base;
    sopt.base_grid = c.scalar.base_grid;
    sopt.n_dirs = c.scalar.n_dirs;
    sopt.seed = c.seed;
    auto tab = structure_functions(res.snapshots, c.scalar.source, sopt);
    std::vector<SpectralField> gs;
    for (const auto& [u, g] : res.snapshots) gs.push_back(g);
    auto mm = ModeMoments::from_snapshots(gs);
    auto khm = khm_residual(res.snapshots, c.scalar.source, c.scalar.kappa, c.scalar.R, sopt);
    auto yag = yaglom_check(tab, mm, c.scalar.source, c.scalar.kappa, c.scalar.ell_I);
    auto csv = open_csv(dir / "series.csv", "ell,Dbar,Dbar_se,Gbar,abar");
    for (size_t i = 0; i < tab.ell.size(); ++i)
        csv << tab.ell[i] << "," << tab.Dbar[i] << "," << tab.Dbar_se[i] << "," << tab.Gbar[i]
            << "," << tab.abar[i] << "\n";
    return {{"ell_D", yag.ell_D},
            {"ell_I", yag.ell_I},
            {"plateau_ref", yag.plateau_ref},
            {"worst_dev", yag.worst_dev},
            {"decades", yag.decades},
            {"window_nonempty", yag.window_nonempty},
            {"pass", yag.pass},
            {"khm_residual", khm.residual},
            {"khm_residual_se", khm.residual_se},
            {"balance_error", res.balance_error()},
            {"tail_fraction", res.tail_fraction}};
}

inline nlohmann::json run_hormander(const ExperimentConfig& c, const std::filesystem::path& dir) {
    std::vector<Wavevector> K;
    for (const auto& [k, q] : c.fluid.forcing.table)
        if (q != 0) K.push_back(k);
    auto span = spanning_rank(c.fluid.d, K, c.hormander.target, c.hormander.n_points, c.seed);
    ClosureConfig cc;
    cc.d = c.fluid.d;
    cc.variant = c.fluid.variant;
    cc.N = c.fluid.N;
    cc.K = K;
    cc.target = c.hormander.target;
    cc.depth = c.hormander.depth;
    cc.n_samples = c.hormander.n_samples;
    cc.nu = c.fluid.nu;
    cc.eta = c.fluid.eta;
    cc.seed = c.seed;
    auto clo = hormander_closure(cc);
    std::ofstream nulls(dir / "null_directions.jsonl");
    for (const auto& v : span.null_directions)
        nulls << nlohmann::json(std::vector<double>(v.data(), v.data() + v.size())).dump() << "\n";
    return {{"spanning",
             {{"dim_tangent", span.dim_tangent},
              {"min_rank", span.min_rank},
              {"pass", span.pass},
              {"inconclusive", span.inconclusive},
              {"n_failed_points", span.failed_points.size()}}},
            {"closure",
             {{"dim_total", clo.dim_total},
              {"dim_u", clo.dim_u},
              {"rank_by_depth", clo.rank_by_depth},
              {"final_rank", clo.final_rank},
              {"residual_codim", clo.residual_codim},
              {"pass", clo.pass},
              {"inconclusive", clo.inconclusive}}}};
}

inline nlohmann::json run_control(const ExperimentConfig& c, const std::filesystem::path& dir) {
    auto plan = synthesize_control(c.control.x0, c.control.v0, c.control.x1, c.control.v1);
    auto rep = control_endpoint_errors(plan);
    double resid = controlled_pde_residual(plan, c.control.N);
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : plan.phases)
        phases.push_back({{"t0", p.t0}, {"t1", p.t1}, {"integral", p.integral}});
    nlohmann::json out = {{"x_error", rep.x_error},
                          {"v_error", rep.v_error},
                          {"pde_residual", resid},
                          {"phases", phases}};
    if (c.fluid.d == 2) {
        auto g = jacobian_growth_demo(c.control.M, Eigen::Vector2d(c.control.x1));
        out["jacobian_norm"] = g.norm_A;
        out["jacobian_x_drift"] = g.x_drift;
        out["M"] = c.control.M;
    }
    return out;
}

}  // namespace experiments_detail

struct RunResult {
    nlohmann::json summary;
    nlohmann::json manifest;
};

inline RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir,
                                bool resume = false) {
    using namespace experiments_detail;
    namespace fs = std::filesystem;
    fs::path dir(out_dir);
    fs::create_directories(dir);
    auto t0 = std::chrono::steady_clock::now();

    nlohmann::json results;
    if (c.kind == "simulate")
        results = run_simulate(c, dir, resume);
    else if (c.kind == "lyapunov")
        results = run_lyapunov(c, dir);
    else if (c.kind == "scalar")
        results = run_scalar(c, dir);
    else if (c.kind == "yaglom")
        results = run_yaglom(c, dir);
    else if (c.kind == "hormander")
        results = run_hormander(c, dir);
    else if (c.kind == "control")
        results = run_control(c, dir);
    else if (c.kind == "validate")
        results = validate_experiment(c).to_json();
    else
        throw std::runtime_error("unknown experiment kind '" + c.kind + "'");

    RunResult r;
    r.summary = {{"kind", c.kind},
                 {"seed", c.seed},
                 {"config_hash", config_hash(c)},
                 {"results", results}};
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<std::string> outputs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json" &&
            e.path().filename() != "summary.json")
            outputs.push_back(e.path().filename().string());
    std::sort(outputs.begin(), outputs.end());
    r.manifest = {{"version", kVersion},
                  {"kind", c.kind},
                  {"config_hash", config_hash(c)},
                  {"seed", c.seed},
                  {"threads", c.threads},
                  {"resumed", resume},
                  {"wall_seconds", wall},
                  {"outputs", outputs}};
    write_json_file(dir / "summary.json", r.summary);
    write_json_file(dir / "manifest.json", r.manifest);
    return r;
}

}  // namespace sflab
