#include <catch2/catch_amalgamated.hpp>

#include "sflab/forcing.hpp"
#include "sflab/operators.hpp"

#include "helpers.hpp"

using namespace sflab;

TEST_CASE("wiener_increment: moments and determinism") {
    NoiseStream s{12345, 0, 0, 0};
    const int n = 1000000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        double w = wiener_increment(s, 1.0);
        sum += w;
    }
    CHECK(std::abs(sum / n) < 4e-3);  // 3 sigma band for dt=1

    NoiseStream s2{12345, 0, 1, 0};
    for (int i = 0; i < n; ++i) {
        double w = wiener_increment(s2, 0.25);
        sum2 += w * w;
    }
    CHECK(std::abs(sum2 / n - 0.25) < 1.5e-3);

    NoiseStream a{99, 3, 7, 42}, b{99, 3, 7, 42};
    CHECK(wiener_increment(a, 0.1) == wiener_increment(b, 0.1));
    CHECK_THROWS(wiener_increment(a, 0.0));
}

TEST_CASE("counter-based streams are schedule-independent") {
    // drawing steps 0..9 in any order gives the same set of values
    std::vector<double> forward, backward;
    for (uint64_t i = 0; i < 10; ++i) {
        NoiseStream s{5, 2, 3, i};
        forward.push_back(s.normal());
    }
    for (uint64_t i = 10; i-- > 0;) {
        NoiseStream s{5, 2, 3, i};
        backward.push_back(s.normal());
    }
    std::reverse(backward.begin(), backward.end());
    CHECK(forward == backward);
    // distinct (trajectory, stream) channels decorrelate
    NoiseStream t1{5, 1, 3, 0}, t2{5, 2, 3, 0};
    CHECK(t1.normal() != t2.normal());
}

TEST_CASE("ou_exact_step") {
    SECTION("pure decay with q = 0") {
        NoiseStream s{1, 0, 0, 0};
        double z = ou_exact_step(2.0, 1.5, 0.0, 0.8, s);
        CHECK(z == Catch::Approx(2.0 * std::exp(-1.5 * 0.8)));
    }
    SECTION("stationary variance q^2 / (2 lambda)") {
        NoiseStream s{2, 0, 0, 0};
        double lambda = 2.0, q = 1.3, dt = 0.05;
        double z = 0, sum2 = 0;
        const int n = 1000000, burn = 1000;
        for (int i = 0; i < burn; ++i) z = ou_exact_step(z, lambda, q, dt, s);
        for (int i = 0; i < n; ++i) {
            z = ou_exact_step(z, lambda, q, dt, s);
            sum2 += z * z;
        }
        double target = q * q / (2 * lambda);
        // autocorrelated samples: effective sample size n * lambda * dt
        double se = target * std::sqrt(2.0 / (n * lambda * dt));
        CHECK(std::abs(sum2 / n - target) < 3 * se);
    }
    SECTION("dt -> 0 freezes the state") {
        NoiseStream s{3, 0, 0, 0};
        double z = ou_exact_step(1.0, 1.0, 1.0, 1e-12, s);
        CHECK(z == Catch::Approx(1.0).margin(1e-5));
    }
    SECTION("lambda <= 0 rejected") {
        NoiseStream s{4, 0, 0, 0};
        CHECK_THROWS(ou_exact_step(1.0, 0.0, 1.0, 0.1, s));
    }
}

TEST_CASE("scalar injection rate epsbar = 1/2 sum q^2") {
    ForcingSpec one = ForcingSpec::uniform(2, {Wavevector(1, 0)}, 1.0);
    // uniform() fills both halves; a genuinely single-mode table:
    ForcingSpec single;
    single.d = 2;
    single.table[Wavevector(1, 0)] = 1.0;
    CHECK(scalar_injection_rate(single) == Catch::Approx(0.5));

    ForcingSpec two;
    two.d = 2;
    two.table[Wavevector(1, 0)] = 1.0;
    two.table[Wavevector(0, 1)] = 2.0;
    CHECK(scalar_injection_rate(two) == Catch::Approx(2.5));

    // power law |k|^{-4} over the ball, against an independent sum
    ForcingSpec pl = ForcingSpec::power_law(2, 1.0, 4.0, 8);
    double expect = 0;
    for (const auto& k : modes_in_ball(2, 8)) {
        double q = std::pow(k.norm(), -4.0);
        expect += 0.5 * q * q;
    }
    CHECK(scalar_injection_rate(pl) == Catch::Approx(expect).epsilon(1e-12));

    ForcingSpec empty;
    CHECK_THROWS(scalar_injection_rate(empty));
    (void)one;
}

TEST_CASE("forcing validation flags") {
    ForcingSpec s = ForcingSpec::uniform(2, {Wavevector(1, 0), Wavevector(0, 1)}, 1.0);
    CHECK(s.validate().empty());
    s.assumption_low_modes = true;
    auto problems = s.validate();  // (1,1) and (1,-1) pairs missing
    CHECK(problems.size() == 4);
    ForcingSpec full = ForcingSpec::uniform(
        2, {Wavevector(1, 0), Wavevector(0, 1), Wavevector(1, 1), Wavevector(1, -1)}, 1.0);
    full.assumption_low_modes = true;
    CHECK(full.validate().empty());

    ForcingSpec asym;
    asym.d = 2;
    asym.table[Wavevector(1, 0)] = 1.0;
    CHECK_FALSE(asym.validate().empty());
}

TEST_CASE("divergence-free forcing directions") {
    // injected increments lie along gamma frames: divergence-free
    ForcingSpec s = ForcingSpec::power_law(2, 1.0, ForcingSpec::default_alpha(2), 2);
    auto f = make_velocity(2, {});
    NoiseStream ns{7, 0, 0, 0};
    size_t m = 0;
    for (const auto& [k, q] : s.table) {
        f.modes.push_back(k);
        f.coeffs.push_back(q * ns.normal());
        ++m;
    }
    for (int p = 0; p < 10; ++p) {
        Eigen::VectorXd x = testutil::random_point(2, ns);
        CHECK(std::abs(eval_gradient(f, x).trace()) < 1e-12);
    }
}
