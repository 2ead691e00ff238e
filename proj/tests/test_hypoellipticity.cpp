#include <catch2/catch_amalgamated.hpp>

#include "sflab/flows.hpp"
#include "sflab/hypoellipticity.hpp"

#include "helpers.hpp"

using namespace sflab;
using testutil::kPi;

namespace {

// manifold component of the drift at (x, v) for a given velocity field
Eigen::VectorXd drift_manifold(const SpectralField& u, ClosureTarget t,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const int d = u.d;
    Eigen::MatrixXd G = eval_gradient(u, x);
    if (t == ClosureTarget::projective) {
        Eigen::VectorXd gv = G * v;
        return gv - v.dot(gv) * v;
    }
    if (t == ClosureTarget::projective_check) {
        Eigen::VectorXd gtv = G.transpose() * v;
        return Eigen::VectorXd(-(gtv - v.dot(gtv) * v));
    }
    Eigen::VectorXd out(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i * d + j] = G(i, j);
    return out;
}

std::vector<Wavevector> with_inversions(std::vector<Wavevector> K) {
    size_t n = K.size();
    for (size_t i = 0; i < n; ++i) K.push_back(-K[i]);
    return K;
}

}  // namespace

TEST_CASE("pinned bracket values") {
    SECTION("projective, k = (1,0), frame gamma = (0,1)") {
        Eigen::Vector2d x(kPi / 2, 0), v(0, 1);
        auto b = projective_bracket(Wavevector(1, 0), 0, x, v);
        // e_k(x) = sin(pi/2) = 1, k.v = 0 so the v-component vanishes
        CHECK(b.x_part[0] == Catch::Approx(0.0).margin(1e-15));
        CHECK(b.x_part[1] == Catch::Approx(1.0));
        CHECK(b.m_part.norm() == Catch::Approx(0.0).margin(1e-15));

        // at x = 0 with v = (1,0): e_k = 0, e_{-k} = 1, k.v = 1, Pi_v gamma = gamma
        Eigen::Vector2d x0(0, 0), v0(1, 0);
        auto b0 = projective_bracket(Wavevector(1, 0), 0, x0, v0);
        CHECK(b0.x_part.norm() == Catch::Approx(0.0).margin(1e-15));
        CHECK(b0.m_part[0] == Catch::Approx(0.0).margin(1e-15));
        CHECK(b0.m_part[1] == Catch::Approx(1.0));
    }
    SECTION("matrix, k = (1,1): gamma (x) k = (1/sqrt2) [[-1,-1],[1,1]]") {
        Eigen::Vector2d x(0, 0);  // e_{-k}(x) = cos 0 = 1, e_k(x) = 0
        auto b = matrix_bracket(Wavevector(1, 1), 0, x);
        CHECK(b.x_part.norm() == Catch::Approx(0.0).margin(1e-15));
        double s = 1.0 / std::sqrt(2.0);
        CHECK(b.m_part[0] == Catch::Approx(-s));
        CHECK(b.m_part[1] == Catch::Approx(-s));
        CHECK(b.m_part[2] == Catch::Approx(s));
        CHECK(b.m_part[3] == Catch::Approx(s));
        CHECK(b.m_part[0] + b.m_part[3] == Catch::Approx(0.0).margin(1e-15));  // sl_2
    }
}

TEST_CASE("bracket formulas against finite differences of the drift") {
    // the noise direction w = e_k gamma is constant in u, so [w, X0] equals
    // the derivative of the drift along w; difference the manifold component
    for (int d : {2, 3}) {
        NoiseStream ns{uint64_t(31 + d), 0, 0, 0};
        auto u = testutil::random_velocity(d, 2, ns);
        Eigen::VectorXd x(d), v(d);
        for (int i = 0; i < d; ++i) x[i] = kTwoPi * ns.uniform();
        for (int i = 0; i < d; ++i) v[i] = ns.normal();
        v.normalize();
        std::vector<Wavevector> probes =
            (d == 2) ? std::vector<Wavevector>{Wavevector(1, 0), Wavevector(-1, 1),
                                               Wavevector(2, -1)}
                     : std::vector<Wavevector>{Wavevector(1, 0, 0), Wavevector(0, 1, -1),
                                               Wavevector(1, -1, 1)};
        const double eps = 1e-6;
        for (const auto& k : probes)
            for (int i = 0; i < d - 1; ++i) {
                int idx = u.find_mode(k);
                REQUIRE(idx >= 0);
                for (auto target : {ClosureTarget::projective, ClosureTarget::projective_check,
                                    ClosureTarget::matrix}) {
                    BracketVector b;
                    if (target == ClosureTarget::projective)
                        b = projective_bracket(k, i, x, v);
                    else if (target == ClosureTarget::projective_check)
                        b = projective_check_bracket(k, i, x, v);
                    else
                        b = matrix_bracket(k, i, x);
                    SpectralField up = u, um = u;
                    up.at(idx, i) += eps;
                    um.at(idx, i) -= eps;
                    Eigen::VectorXd fd =
                        (drift_manifold(up, target, x, v) - drift_manifold(um, target, x, v)) /
                        (2 * eps);
                    double scale = std::max(1.0, fd.norm());
                    CHECK((b.m_part - fd).norm() / scale < 1e-6);
                    // x-part is the field value itself
                    SpectralField w = make_velocity(d, {k});
                    w.at(0, i) = 1.0;
                    CHECK((b.x_part - eval_velocity(w, x)).norm() < 1e-12);
                }
            }
    }
}

TEST_CASE("spanning rank of the noise brackets") {
    SECTION("d = 2 projective: two independent directions span, rank 3") {
        auto rep = spanning_rank(2, with_inversions({Wavevector(1, 0), Wavevector(0, 1)}),
                                 ClosureTarget::projective, 1000, 11);
        CHECK(rep.dim_tangent == 3);
        CHECK(rep.min_rank == 3);
        CHECK(rep.pass);
        CHECK_FALSE(rep.inconclusive);
    }
    SECTION("d = 2 projective: a single +/- pair is deficient") {
        auto rep = spanning_rank(2, with_inversions({Wavevector(1, 0)}),
                                 ClosureTarget::projective, 1000, 11);
        CHECK_FALSE(rep.pass);
        CHECK(rep.min_rank < 3);
        REQUIRE_FALSE(rep.null_directions.empty());
        // gamma = (0,1): the x_1 tangent direction is never produced
        for (size_t j = 0; j < std::min<size_t>(rep.null_directions.size(), 20); ++j)
            CHECK(std::abs(rep.null_directions[j][0]) == Catch::Approx(1.0).margin(1e-8));
    }
    SECTION("d = 2 dual variant behaves identically on the spanning set") {
        auto rep = spanning_rank(2, with_inversions({Wavevector(1, 0), Wavevector(0, 1)}),
                                 ClosureTarget::projective_check, 1000, 12);
        CHECK(rep.min_rank == 3);
        CHECK(rep.pass);
    }
    SECTION("d = 3 projective: three independent directions span, rank 5") {
        auto rep = spanning_rank(
            3,
            with_inversions({Wavevector(1, 0, 0), Wavevector(0, 1, 0), Wavevector(0, 0, 1)}),
            ClosureTarget::projective, 200, 13);
        CHECK(rep.dim_tangent == 5);
        CHECK(rep.min_rank == 5);
        CHECK(rep.pass);
    }
    SECTION("d = 2 matrix: three sites give rank 2 + 3 = 5") {
        auto rep = spanning_rank(
            2, with_inversions({Wavevector(1, 0), Wavevector(0, 1), Wavevector(1, 1)}),
            ClosureTarget::matrix, 1000, 14);
        CHECK(rep.dim_tangent == 5);
        CHECK(rep.min_rank == 5);
        CHECK(rep.pass);
    }
    SECTION("d = 2 matrix: dropping (1,1) loses the sl_2 span") {
        auto rep = spanning_rank(2, with_inversions({Wavevector(1, 0), Wavevector(0, 1)}),
                                 ClosureTarget::matrix, 1000, 14);
        CHECK_FALSE(rep.pass);
        CHECK(rep.min_rank < 5);
        CHECK_FALSE(rep.null_directions.empty());
    }
    SECTION("result is seed-independent on spanning sets") {
        for (uint64_t seed : {101u, 202u}) {
            auto rep = spanning_rank(2, with_inversions({Wavevector(1, 0), Wavevector(0, 1)}),
                                     ClosureTarget::projective, 200, seed);
            CHECK(rep.pass);
        }
    }
}

TEST_CASE("bracket closure for the Stokes drift") {
    ClosureConfig cc;
    cc.d = 2;
    cc.variant = FluidVariant::Stokes;
    cc.K = with_inversions({Wavevector(1, 0), Wavevector(0, 1)});
    cc.target = ClosureTarget::projective;
    cc.n_samples = 20;
    cc.seed = 21;
    auto rep = hormander_closure(cc);
    CHECK(rep.dim_u == 4);
    CHECK(rep.dim_total == 7);
    // depth 0 sees only the constant noise directions
    CHECK(rep.rank_by_depth.front() == 4);
    CHECK(rep.rank_by_depth.front() < rep.dim_total);
    CHECK(rep.final_rank == 7);
    CHECK(rep.residual_codim == 0);
    CHECK(rep.pass);

    SECTION("matrix target with the three-site set") {
        cc.K = with_inversions({Wavevector(1, 0), Wavevector(0, 1), Wavevector(1, 1)});
        cc.target = ClosureTarget::matrix;
        auto r = hormander_closure(cc);
        CHECK(r.dim_total == 6 + 2 + 3);
        CHECK(r.final_rank == r.dim_total);
        CHECK(r.pass);
    }
}

TEST_CASE("bracket closure for the Galerkin drift") {
    ClosureConfig cc;
    cc.d = 2;
    cc.variant = FluidVariant::GalerkinNSE;
    cc.N = 3;
    cc.K = with_inversions({Wavevector(1, 0), Wavevector(1, 1)});
    cc.target = ClosureTarget::projective;
    cc.depth = 8;
    cc.n_samples = 12;
    cc.seed = 22;
    auto rep = hormander_closure(cc);
    CHECK(rep.dim_u == int(modes_in_ball(2, 3).size()));  // (d-1) = 1 comp per mode
    CHECK(rep.rank_by_depth.front() == 4);  // the 4 noise directions
    CHECK(rep.final_rank == rep.dim_total);
    CHECK(rep.pass);

    SECTION("collinear forcing never closes") {
        cc.K = with_inversions({Wavevector(1, 0)});
        auto r = hormander_closure(cc);
        CHECK(r.residual_codim > 0);
        CHECK_FALSE(r.pass);
    }
}
