#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "maguq/uq.hpp"

using namespace maguq;
using Catch::Approx;

namespace {

const double sqrt3 = std::sqrt(3.0);

struct Pipeline {
    mesh::TriMesh m;
    kle::KleModel model;
    fem::MaterialConfig mat;
    fem::AffineStiffness stiffness;
    Eigen::VectorXd load;
};

Pipeline make_pipeline(double sigma, double d, int fixed_modes, double nu_mean = 795.774,
                       double target_h = 0.004) {
    Pipeline p;
    mesh::ReferenceParams params;
    params.target_h = target_h;
    p.m = mesh::generate_reference_geometry(params);
    kle::KleOptions opt;
    opt.fixed_modes = fixed_modes;
    opt.m_request = std::max(fixed_modes + 2, 8);
    opt.tol = 1e-10;
    p.model = kle::build_kle_model(p.m, kle::CovarianceKernel(sigma, d), nu_mean, opt);
    p.mat = fem::MaterialConfig{};
    p.stiffness = fem::assemble_affine_stiffness(p.m, p.mat, p.model);
    p.load = fem::assemble_load(p.m, p.mat);
    return p;
}

/// Exact uniform moments on [-sqrt(3), sqrt(3)]: E[xi^k] = 3^(k/2) / (k+1)
/// for even k, 0 for odd k.
double uniform_moment(int k) {
    if (k % 2 == 1) return 0.0;
    return std::pow(3.0, k / 2.0) / (k + 1);
}

}  // namespace

TEST_CASE("gauss-legendre rules on the unit-variance uniform support", "[uq]") {
    SECTION("degree 1: nodes +-1, weights one half") {
        const auto r = uq::gauss_legendre_1d(1);
        REQUIRE(r.nodes.size() == 2);
        CHECK(r.nodes(0) == Approx(-1.0).epsilon(1e-14));
        CHECK(r.nodes(1) == Approx(1.0).epsilon(1e-14));
        CHECK(r.weights(0) == Approx(0.5).epsilon(1e-14));
        CHECK(r.weights(1) == Approx(0.5).epsilon(1e-14));
    }
    SECTION("degree 2: center node and 5/18, 8/18, 5/18 weights") {
        const auto r = uq::gauss_legendre_1d(2);
        REQUIRE(r.nodes.size() == 3);
        CHECK(r.nodes(1) == 0.0);
        CHECK(r.weights(0) == Approx(5.0 / 18.0).epsilon(1e-14));
        CHECK(r.weights(1) == Approx(8.0 / 18.0).epsilon(1e-14));
        CHECK(r.weights(2) == Approx(5.0 / 18.0).epsilon(1e-14));
        CHECK(r.nodes(2) == Approx(std::sqrt(1.8)).epsilon(1e-14));
    }
    SECTION("the variance of the uniform density integrates to exactly 1") {
        const auto r = uq::gauss_legendre_1d(2);
        double second = 0.0;
        for (int i = 0; i < 3; ++i) second += r.weights(i) * r.nodes(i) * r.nodes(i);
        CHECK(second == Approx(1.0).epsilon(1e-14));
    }
    SECTION("exactness up to degree 2p+1 for p <= 3") {
        for (int p = 0; p <= 3; ++p) {
            const auto r = uq::gauss_legendre_1d(p);
            for (int k = 0; k <= 2 * p + 1; ++k) {
                double integral = 0.0;
                for (int i = 0; i < r.nodes.size(); ++i)
                    integral += r.weights(i) * std::pow(r.nodes(i), k);
                CHECK(integral == Approx(uniform_moment(k)).margin(1e-12));
            }
        }
    }
}

TEST_CASE("tensor collocation grids", "[uq]") {
    SECTION("3 points per dimension in 3 dimensions gives 27 nodes") {
        const auto g = uq::tensor_grid(2, 3);
        CHECK(g.size() == 27);
        CHECK(g.weights.sum() == Approx(1.0).epsilon(1e-12));
        for (std::int64_t k = 0; k < g.size(); ++k)
            for (int d = 0; d < 3; ++d) {
                CHECK(g.nodes(k, d) > -sqrt3);
                CHECK(g.nodes(k, d) < sqrt3);
            }
    }
    SECTION("one dimension reduces to the 1d rule") {
        const auto g = uq::tensor_grid(3, 1);
        const auto r = uq::gauss_legendre_1d(3);
        REQUIRE(g.size() == r.nodes.size());
        for (int i = 0; i < r.nodes.size(); ++i) {
            CHECK(g.nodes(i, 0) == r.nodes(i));
            CHECK(g.weights(i) == r.weights(i));
        }
    }
    SECTION("zero dimensions is the single empty node") {
        const auto g = uq::tensor_grid(2, 0);
        CHECK(g.size() == 1);
        CHECK(g.weights(0) == 1.0);
    }
    SECTION("node budget refusal names the count") {
        REQUIRE_THROWS_AS(uq::tensor_grid(2, 12, 100000), BudgetError);
        REQUIRE_THROWS_WITH(uq::tensor_grid(2, 12, 100000),
                            Catch::Matchers::ContainsSubstring("3^12"));
    }
    SECTION("tensor quadrature integrates mixed monomials exactly") {
        for (int p = 1; p <= 3; ++p) {
            const int m = 3;
            const auto g = uq::tensor_grid(p, m);
            const std::array<int, 3> alpha{2 * p + 1, 2, 2 * p};
            double integral = 0.0;
            for (std::int64_t k = 0; k < g.size(); ++k) {
                double term = g.weights(k);
                for (int d = 0; d < m; ++d) term *= std::pow(g.nodes(k, d), alpha[d]);
                integral += term;
            }
            double expected = 1.0;
            for (int d = 0; d < m; ++d) expected *= uniform_moment(alpha[d]);
            CHECK(integral == Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("moment reduction", "[uq]") {
    const auto grid = uq::tensor_grid(1, 1);  // two equal weights
    kle::KleModel dummy;
    dummy.kernel = kle::CovarianceKernel(1.0, 1.0);

    SECTION("two-node hand example") {
        uq::NodeEvaluations evals;
        evals.values.resize(2);
        evals.values << 1.0, 3.0;
        evals.rejected = {0, 0};
        const auto r = uq::moments(evals, grid, dummy);
        CHECK(r.mean == Approx(2.0).epsilon(1e-14));
        CHECK(r.std == Approx(1.0).epsilon(1e-14));
    }
    SECTION("constant data has vanishing deviation") {
        uq::NodeEvaluations evals;
        evals.values = Eigen::VectorXd::Constant(2, 7.25);
        evals.rejected = {0, 0};
        const auto r = uq::moments(evals, grid, dummy);
        CHECK(r.std <= 1e-14 * r.mean);
    }
    SECTION("algebraic identity mu^2 + std^2 = sum w L^2") {
        const auto g3 = uq::tensor_grid(2, 2);
        uq::NodeEvaluations evals;
        evals.values.resize(g3.size());
        for (std::int64_t k = 0; k < g3.size(); ++k)
            evals.values(k) = 1.0 + 0.3 * std::sin(double(k));
        evals.rejected.assign(g3.size(), 0);
        const auto r = uq::moments(evals, g3, dummy);
        double second = 0.0;
        for (std::int64_t k = 0; k < g3.size(); ++k)
            second += g3.weights(k) * evals.values(k) * evals.values(k);
        CHECK(r.mean * r.mean + r.std * r.std == Approx(second).epsilon(1e-12));
    }
}

TEST_CASE("lagrange surrogate", "[uq]") {
    const auto grid = uq::tensor_grid(2, 2);
    auto poly = [](double x, double y) {
        return 1.5 - 0.75 * x + 0.3 * y + 0.2 * x * x - 0.1 * x * y + 0.05 * x * x * y * y;
    };
    Eigen::VectorXd values(grid.size());
    for (std::int64_t k = 0; k < grid.size(); ++k)
        values(k) = poly(grid.nodes(k, 0), grid.nodes(k, 1));

    SECTION("grid nodes are interpolated exactly") {
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            const Eigen::VectorXd q = grid.nodes.row(k).transpose();
            CHECK(uq::interpolate_surrogate(grid, values, q) ==
                  Approx(values(k)).epsilon(1e-12));
        }
    }
    SECTION("constant data gives a constant surrogate") {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.size());
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> uni(-sqrt3, sqrt3);
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXd q(2);
            q << uni(rng), uni(rng);
            CHECK(uq::interpolate_surrogate(grid, ones, q) == Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("degree-p data is reproduced everywhere") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> uni(-sqrt3, sqrt3);
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd q(2);
            q << uni(rng), uni(rng);
            CHECK(uq::interpolate_surrogate(grid, values, q) ==
                  Approx(poly(q(0), q(1))).epsilon(1e-10));
        }
    }
}

TEST_CASE("collocation pipeline", "[uq]") {
    SECTION("deterministic field: single node equals the mean solve") {
        auto p = make_pipeline(0.0, 1.0, 0);
        REQUIRE(p.model.modes() == 0);
        const auto grid = uq::tensor_grid(2, 0);
        const auto evals = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat);
        REQUIRE(evals.values.size() == 1);
        const auto sol = fem::solve(p.stiffness.k_mean, p.load);
        const double l_det =
            fem::inductance(fem::energy(p.stiffness.k_mean, sol.a), p.mat.current);
        CHECK(evals.values(0) == Approx(l_det).epsilon(1e-13));
        const auto report = uq::moments(evals, grid, p.model);
        CHECK(report.std == 0.0);
        CHECK(report.mean == Approx(l_det).epsilon(1e-13));
    }
    SECTION("evaluations are independent of the schedule") {
        auto p = make_pipeline(10.0, 0.2, 3);
        const auto grid = uq::tensor_grid(2, 3);
        const auto serial = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat, 1);
        const auto threaded = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k)
            CHECK(serial.values(k) == threaded.values(k));
    }
    SECTION("invalid realizations are rejected, counted, and renormalized") {
        // Mean close to zero: extreme nodes go non-positive, the center stays valid.
        auto p = make_pipeline(10.0, 0.5, 2, 5.0);
        const auto grid = uq::tensor_grid(2, 2);
        const auto evals = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat);
        CHECK(evals.rejected_count > 0);
        CHECK(evals.rejected_count < grid.size());
        const auto report = uq::moments(evals, grid, p.model);
        CHECK(report.rejected == evals.rejected_count);
        CHECK(report.mean > 0.0);
    }
    SECTION("everything rejected is a hard error") {
        // A negative mean field sends every realization non-positive; the
        // sampler only flags, the collocation layer must refuse.
        auto p = make_pipeline(10.0, 0.5, 2, -1000.0);
        const auto grid = uq::tensor_grid(1, 2);
        CHECK_THROWS_AS(uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat),
                        NumericalError);
    }
}

TEST_CASE("collocation moments agree with monte carlo", "[uq]") {
    auto p = make_pipeline(10.0, 0.3, 3, 795.774, 0.006);
    const auto grid = uq::tensor_grid(2, 3);
    const auto evals = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat);
    const auto coll = uq::moments(evals, grid, p.model);

    const auto mc = uq::monte_carlo(p.model, p.stiffness, p.load, p.mat, 10000, 4242);
    CHECK(mc.rejected == 0);
    CHECK(std::abs(coll.mean - mc.mean) <= 3.0 * mc.se_mean);
    CHECK(std::abs(coll.std - mc.std) <= 3.0 * mc.se_std);
}

TEST_CASE("inductance spread grows with the correlation length and saturates", "[uq]") {
    // Fixed four-mode representation across the sweep; the two large-d runs
    // probe the constant-covariance limit.
    const std::vector<double> sweep{0.002, 0.01, 0.05, 0.2, 1.0, 4.0, 20.0};
    std::vector<double> stds, means;
    for (double d : sweep) {
        auto p = make_pipeline(10.0, d, 4);
        const auto grid = uq::tensor_grid(2, 4);
        const auto evals = uq::run_collocation(grid, p.model, p.stiffness, p.load, p.mat);
        const auto report = uq::moments(evals, grid, p.model);
        stds.push_back(report.std);
        means.push_back(report.mean);
    }
    for (std::size_t i = 0; i + 1 < stds.size(); ++i) CHECK(stds[i] <= stds[i + 1] * (1.0 + 1e-9));
    const double last = stds.back(), prev = stds[stds.size() - 2];
    CHECK(std::abs(last - prev) <= 0.02 * last);
    // The mean barely moves compared to the spread.
    const double mean_range =
        *std::max_element(means.begin(), means.end()) - *std::min_element(means.begin(), means.end());
    CHECK(mean_range < stds.back());
}
