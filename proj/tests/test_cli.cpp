#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sflab/experiments.hpp"

using namespace sflab;
namespace fs = std::filesystem;

namespace {

const char* kSimulateConfig = R"(
kind = "simulate"
seed = 7

[fluid]
variant = "stokes"
d = 2
dt = 0.01

[forcing]
modes = [[1, 0], [0, 1], [1, 1], [1, -1]]
amplitude = 0.3

[simulate]
horizon = 2.0
checkpoint_interval = 0.5
sample_every = 10
)";

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("sflab_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("toml parser covers the config subset") {
    auto t = parse_toml_string(R"(
# top comment
title = "run A"   # trailing comment
count = 12
rate = 2.5e-1
flag = true

[fluid]
d = 3
modes = [[1, 0, 0], [0, -1, 1]]
empty = []
)");
    CHECK(t.get_string("title") == "run A");
    CHECK(t.get_int("count") == 12);
    CHECK(t.get_double("rate") == Catch::Approx(0.25));
    CHECK(t.get_double("count") == 12.0);  // int promotes
    CHECK(t.get_bool("flag"));
    CHECK(t.get_int("fluid.d") == 3);
    const auto& modes = t.get_array("fluid.modes");
    REQUIRE(modes.size() == 2);
    REQUIRE(modes[1].arr.size() == 3);
    CHECK(modes[1].arr[1].i == -1);
    CHECK(t.get_array("fluid.empty").empty());
    CHECK(t.get_int_or("fluid.absent", 9) == 9);

    SECTION("lookup errors name the field") {
        CHECK_THROWS_WITH(t.require("fluid.nu"), "missing required field 'fluid.nu'");
        CHECK_THROWS_WITH(t.get_int("title"), "field 'title' must be an integer");
    }
    SECTION("syntax errors carry line numbers") {
        CHECK_THROWS_AS(parse_toml_string("a = 1 junk"), TomlError);
        CHECK_THROWS_AS(parse_toml_string("a = [1, 2"), TomlError);
        CHECK_THROWS_AS(parse_toml_string("= 3"), TomlError);
        CHECK_THROWS_AS(parse_toml_string("a = 1.2.3"), TomlError);
    }
}

TEST_CASE("experiment configs parse and report missing fields by name") {
    auto c = parse_experiment(parse_toml_string(kSimulateConfig));
    CHECK(c.kind == "simulate");
    CHECK(c.seed == 7);
    CHECK(c.fluid.variant == FluidVariant::Stokes);
    CHECK(c.fluid.d == 2);
    CHECK(c.fluid.forcing.table.size() == 8);  // both halves filled
    CHECK(c.simulate.horizon == 2.0);
    CHECK(c.simulate.checkpoint_interval == 0.5);

    SECTION("missing required field") {
        std::string broken = kSimulateConfig;
        broken.replace(broken.find("d = 2"), 5, "# d  ");
        CHECK_THROWS_WITH(parse_experiment(parse_toml_string(broken)),
                          "missing required field 'fluid.d'");
        CHECK_THROWS_WITH(parse_experiment(parse_toml_string("kind = \"scalar\"\n"
                                                             "[fluid]\n"
                                                             "variant = \"stokes\"\n"
                                                             "d = 2\n"
                                                             "[forcing]\n"
                                                             "modes = [[1, 0], [0, 1]]\n"
                                                             "amplitude = 0.3\n")),
                          "missing required field 'scalar.kappa'");
    }
    SECTION("bad variant and bad mode shape") {
        std::string bad = kSimulateConfig;
        bad.replace(bad.find("\"stokes\""), 8, "\"euler\" ");
        CHECK_THROWS_AS(parse_experiment(parse_toml_string(bad)), TomlError);
        std::string bad2 = kSimulateConfig;
        bad2.replace(bad2.find("[1, 0],"), 7, "[1],   ");
        CHECK_THROWS_AS(parse_experiment(parse_toml_string(bad2)), TomlError);
    }
}

TEST_CASE("same config and seed give byte-identical summaries") {
    auto c = parse_experiment(parse_toml_string(kSimulateConfig));
    auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    run_experiment(c, d1.string());
    run_experiment(c, d2.string());
    CHECK(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));
    CHECK(slurp(d1 / "series.csv") == slurp(d2 / "series.csv"));

    auto c2 = c;
    c2.seed = 8;
    auto d3 = fresh_dir("det3");
    run_experiment(c2, d3.string());
    CHECK(slurp(d1 / "summary.json") != slurp(d3 / "summary.json"));
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run") {
    auto c = parse_experiment(parse_toml_string(kSimulateConfig));
    auto full = fresh_dir("resume_full"), split = fresh_dir("resume_split");
    run_experiment(c, full.string());

    auto chalf = c;
    chalf.simulate.horizon = 1.0;
    run_experiment(chalf, split.string());
    REQUIRE(fs::exists(split / "checkpoint.json"));
    run_experiment(c, split.string(), /*resume=*/true);
    CHECK(slurp(full / "summary.json") == slurp(split / "summary.json"));

    SECTION("a config mismatch is refused") {
        auto cbad = c;
        for (auto& [k, q] : cbad.fluid.forcing.table) q = 0.4;
        CHECK_THROWS_WITH(run_experiment(cbad, split.string(), true),
                          Catch::Matchers::ContainsSubstring("checkpoint refused"));
        auto cseed = c;
        cseed.seed = 99;
        CHECK_THROWS_AS(run_experiment(cseed, split.string(), true), std::runtime_error);
    }
}

TEST_CASE("config validation") {
    auto c = parse_experiment(parse_toml_string(kSimulateConfig));
    SECTION("the minimal symmetric axis set passes with a note") {
        c.fluid.forcing = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 0.3);
        auto rep = validate_experiment(c);
        CHECK(rep.ok());
        REQUIRE_FALSE(rep.notes.empty());
    }
    SECTION("a missing low mode fails and is listed") {
        c.fluid.forcing = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(1, 1)}, 0.3);
        c.fluid.forcing.assumption_low_modes = true;
        auto rep = validate_experiment(c);
        CHECK_FALSE(rep.ok());
        bool listed = false;
        for (const auto& f : rep.failures)
            if (f.find("(0,1)") != std::string::npos) listed = true;
        CHECK(listed);
    }
    SECTION("an unstable dt warns with the computed bound") {
        c.fluid.variant = FluidVariant::GalerkinNSE;
        c.fluid.N = 4;
        c.fluid.nu = 1.0;
        c.fluid.dt = 0.1;  // bound = 0.5 / 16
        auto rep = validate_experiment(c);
        REQUIRE_FALSE(rep.warnings.empty());
        CHECK(rep.warnings[0].find("0.03125") != std::string::npos);
    }
    SECTION("a non-symmetric set fails") {
        c.fluid.forcing.table.erase(Wavevector(-1, 0));
        auto rep = validate_experiment(c);
        CHECK_FALSE(rep.ok());
    }
}

TEST_CASE("experiment kinds produce their artifact sets") {
    SECTION("lyapunov") {
        auto c = parse_experiment(parse_toml_string(R"(
kind = "lyapunov"
seed = 5
[fluid]
variant = "stokes"
d = 2
dt = 0.01
[forcing]
modes = [[1, 0], [0, 1], [1, 1], [1, -1]]
amplitude = 0.5
[lyapunov]
horizon = 5.0
n_traj = 2
n_batches = 4
burn_in = 0.5
)"));
        auto dir = fresh_dir("lyap");
        auto res = run_experiment(c, dir.string());
        CHECK(res.summary["results"]["lambda"].size() == 2);
        CHECK(res.summary["results"]["n_traj"] == 2);
        CHECK(fs::exists(dir / "series.csv"));
        CHECK(fs::exists(dir / "manifest.json"));
        auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
        CHECK(manifest["config_hash"] == res.summary["config_hash"]);
        CHECK(manifest["outputs"] == nlohmann::json({"series.csv"}));
    }
    SECTION("scalar") {
        auto c = parse_experiment(parse_toml_string(R"(
kind = "scalar"
seed = 5
[fluid]
variant = "stokes"
d = 2
dt = 0.01
[forcing]
modes = [[1, 0], [0, 1], [1, 1], [1, -1]]
amplitude = 0.5
[scalar]
kappa = 0.2
grid = 4
horizon = 4.0
burn_in = 1.0
sample_spacing = 0.25
n_snapshots = 2
n_batches = 4
[source]
modes = [[1, 0], [0, 1]]
amplitude = 0.4
)"));
        auto dir = fresh_dir("scalar");
        auto res = run_experiment(c, dir.string());
        CHECK(res.summary["results"]["epsbar"].get<double>() ==
              Catch::Approx(scalar_injection_rate(c.scalar.source)));
        CHECK(res.summary["results"]["mean_grad_energy"].get<double>() > 0);
        CHECK(fs::exists(dir / "snapshots.jsonl"));
        std::istringstream lines(slurp(dir / "snapshots.jsonl"));
        std::string line;
        int n = 0;
        while (std::getline(lines, line)) {
            auto j = nlohmann::json::parse(line);
            CHECK(field_from_json(j["g"]).d == 2);
            ++n;
        }
        CHECK(n == 2);
    }
    SECTION("hormander") {
        auto c = parse_experiment(parse_toml_string(R"(
kind = "hormander"
seed = 5
[fluid]
variant = "stokes"
d = 2
[forcing]
modes = [[1, 0], [0, 1]]
amplitude = 0.5
[hormander]
n_points = 100
n_samples = 8
)"));
        auto dir = fresh_dir("horm");
        auto res = run_experiment(c, dir.string());
        CHECK(res.summary["results"]["spanning"]["pass"] == true);
        CHECK(res.summary["results"]["closure"]["final_rank"] == 7);
    }
    SECTION("control") {
        auto c = parse_experiment(parse_toml_string(R"(
kind = "control"
seed = 5
[fluid]
variant = "stokes"
d = 2
[forcing]
modes = [[1, 0], [0, 1]]
amplitude = 0.5
[control]
x0 = [1.0, 2.0]
v0 = [1.0, 0.0]
x1 = [2.5, 0.5]
v1 = [0.0, 1.0]
M = 10.0
)"));
        auto dir = fresh_dir("ctrl");
        auto res = run_experiment(c, dir.string());
        CHECK(res.summary["results"]["x_error"].get<double>() < 1e-6);
        CHECK(res.summary["results"]["v_error"].get<double>() < 1e-6);
        CHECK(res.summary["results"]["jacobian_norm"].get<double>() ==
              Catch::Approx(10.0).epsilon(1e-4));
    }
}

TEST_CASE("the installed binary runs end to end") {
    auto dir = fresh_dir("bin");
    auto cfgpath = dir / "config.toml";
    std::ofstream(cfgpath) << kSimulateConfig;
    std::string cmd = "./sflab simulate --config " + cfgpath.string() + " --out " +
                      (dir / "run").string() + " > " + (dir / "stdout.json").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    auto out = nlohmann::json::parse(slurp(dir / "stdout.json"));
    CHECK(out["kind"] == "simulate");
    CHECK(fs::exists(dir / "run" / "summary.json"));

    std::string vcmd = "./sflab validate --config " + cfgpath.string() + " > " +
                       (dir / "validate.json").string();
    CHECK(std::system(vcmd.c_str()) == 0);
    auto vrep = nlohmann::json::parse(slurp(dir / "validate.json"));
    CHECK(vrep["result"] == "PASS");
}
