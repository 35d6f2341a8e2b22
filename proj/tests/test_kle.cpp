#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <random>

#include "maguq/kle.hpp"

using namespace maguq;
using Catch::Approx;

namespace {

/// Rectangle-core test bed with everything tagged Core.
mesh::TriMesh small_core(double w = 0.06, double h = 0.08, double target = 0.008) {
    return mesh::make_rectangle_mesh(w, h, target);
}

kle::KleOptions quick_options(int m_request, double threshold = 0.95) {
    kle::KleOptions opt;
    opt.m_request = m_request;
    opt.threshold = threshold;
    opt.tol = 1e-10;
    return opt;
}

}  // namespace

TEST_CASE("covariance kernel evaluation", "[kle]") {
    SECTION("zero distance gives sigma squared") {
        const kle::CovarianceKernel k(1.0, 2.0);
        CHECK(k({0.3, 0.4}, {0.3, 0.4}) == Approx(1.0));
    }
    SECTION("one correlation length of l1 distance") {
        const kle::CovarianceKernel k(2.0, 0.5);
        // |x-y|_1 = 0.5 = d -> sigma^2 / e
        CHECK(k({0.0, 0.0}, {0.2, 0.3}) == Approx(4.0 * std::exp(-1.0)));
    }
    SECTION("value approaches sigma^2 monotonically as d grows") {
        const Point2 x{0.0, 0.0}, y{1.0, 2.0};
        double prev = 0.0;
        for (double d : {1.0, 10.0, 100.0, 1000.0}) {
            const kle::CovarianceKernel k(3.0, d);
            const double v = k(x, y);
            CHECK(v > prev);
            CHECK(v <= 9.0);
            prev = v;
        }
        CHECK(prev == Approx(9.0).epsilon(1e-2));
    }
}

TEST_CASE("mass diagonal is the element-area diagonal", "[kle]") {
    std::vector<mesh::ElementGeometry> g(2);
    g[0].area = 0.5;
    g[1].area = 0.25;
    const Eigen::VectorXd b = kle::assemble_mass_diagonal(g);
    CHECK(b(0) == 0.5);
    CHECK(b(1) == 0.25);
    CHECK(b.minCoeff() > 0.0);

    const auto m = small_core();
    const auto geoms = mesh::all_geometries(m);
    const Eigen::VectorXd bm = kle::assemble_mass_diagonal(geoms);
    CHECK(bm.sum() == Approx(mesh::region_area(m, mesh::Region::Core)).epsilon(1e-12));
}

TEST_CASE("lanczos on small explicit pencils", "[kle]") {
    SECTION("diagonal operator with identity mass") {
        const Eigen::Vector2d diag(2.0, 1.0);
        auto apply = [&](const Eigen::VectorXd& x) { return (diag.array() * x.array()).matrix().eval(); };
        kle::LanczosOptions opt;
        opt.m_request = 2;
        opt.tol = 1e-12;
        const auto pairs = kle::lanczos_generalized(apply, Eigen::VectorXd::Ones(2), opt);
        REQUIRE(pairs.values.size() == 2);
        CHECK(pairs.values(0) == Approx(2.0).epsilon(1e-10));
        CHECK(pairs.values(1) == Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(pairs.vectors(0, 0)) == Approx(1.0).margin(1e-8));
        CHECK(std::abs(pairs.vectors(1, 1)) == Approx(1.0).margin(1e-8));
        CHECK(pairs.all_converged());
    }
    SECTION("identity pencil A = B has unit spectrum") {
        Eigen::VectorXd b(5);
        b << 0.5, 1.5, 2.0, 0.25, 3.0;
        auto apply = [&](const Eigen::VectorXd& x) { return (b.array() * x.array()).matrix().eval(); };
        kle::LanczosOptions opt;
        opt.m_request = 3;
        opt.tol = 1e-12;
        const auto pairs = kle::lanczos_generalized(apply, b, opt);
        for (int i = 0; i < 3; ++i) CHECK(pairs.values(i) == Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("lanczos matches a dense generalized eigensolver", "[kle]") {
    const auto m = small_core();  // ~200 elements
    const auto geoms = mesh::all_geometries(m);
    const int n = static_cast<int>(geoms.size());
    INFO("n = " << n);
    const kle::CovarianceKernel kernel(1.0, 0.05);
    const Eigen::MatrixXd a = hmat::dense_covariance(geoms, kernel);
    const Eigen::VectorXd b = kle::assemble_mass_diagonal(geoms);

    kle::LanczosOptions opt;
    opt.m_request = 10;
    opt.tol = 1e-11;
    const auto pairs = kle::lanczos_generalized(
        [&](const Eigen::VectorXd& x) { return (a * x).eval(); }, b, opt);

    Eigen::MatrixXd b_dense = b.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> direct(a, b_dense);
    REQUIRE(direct.info() == Eigen::Success);

    for (int i = 0; i < 10; ++i) {
        const double reference = direct.eigenvalues()(n - 1 - i);
        CHECK(pairs.values(i) == Approx(reference).epsilon(1e-8));
    }

    SECTION("returned vectors are B-orthonormal") {
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double dot = pairs.vectors.col(i).dot(
                    (b.array() * pairs.vectors.col(j).array()).matrix());
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
            }
    }
    SECTION("residual contract holds per pair") {
        for (int i = 0; i < 10; ++i) {
            const Eigen::VectorXd f = pairs.vectors.col(i);
            const Eigen::VectorXd af = a * f;
            const Eigen::VectorXd bf = (b.array() * f.array()).matrix();
            CHECK((af - pairs.values(i) * bf).norm() <= opt.tol * af.norm());
        }
    }
}

TEST_CASE("truncation by the relative information criterion", "[kle]") {
    const kle::CovarianceKernel unit_kernel(1.0, 1.0);
    SECTION("cumulative 0.8/0.9/0.95 stops at 3") {
        Eigen::VectorXd ev(4);
        ev << 8.0, 1.0, 0.5, 0.5;
        CHECK(kle::truncate(ev, unit_kernel, 10.0, 0.95) == 3);
    }
    SECTION("threshold 0.5 with a dominant first mode stops at 1") {
        Eigen::VectorXd ev(3);
        ev << 6.0, 3.0, 1.0;
        CHECK(kle::truncate(ev, unit_kernel, 10.0, 0.5) == 1);
    }
    SECTION("unreachable threshold reports the achieved psi") {
        Eigen::VectorXd ev(2);
        ev << 8.0, 1.0;
        REQUIRE_THROWS_WITH(kle::truncate(ev, unit_kernel, 10.0, 0.95),
                            Catch::Matchers::ContainsSubstring("need more eigenpairs"));
    }
    SECTION("strongly correlated desk-scale core truncates at M <= 5") {
        const auto m = small_core();
        const auto model = kle::build_kle_model(m, kle::CovarianceKernel(1.0, 100.0), 1.0,
                                                quick_options(10));
        CHECK(model.modes() <= 5);
        CHECK(model.psi >= 0.95);
    }
}

TEST_CASE("analytic 1d exponential eigenvalues", "[kle]") {
    SECTION("strictly decreasing") {
        const auto ev = kle::analytic_eigenpairs_1d(1.0, 0.3, 1.0, 50);
        for (std::size_t i = 0; i + 1 < ev.size(); ++i) CHECK(ev[i + 1] < ev[i]);
    }
    SECTION("partial sums approach the trace identity") {
        const double sigma = 1.3, d = 0.25, a = 2.0;
        const auto ev = kle::analytic_eigenpairs_1d(sigma, d, a, 200);
        double sum = 0.0;
        for (double v : ev) sum += v;
        CHECK(sum == Approx(sigma * sigma * a).epsilon(0.01));
    }
}

TEST_CASE("field sampling", "[kle]") {
    const auto m = small_core();
    const double nu_mean = 100.0;
    const auto model =
        kle::build_kle_model(m, kle::CovarianceKernel(5.0, 0.1), nu_mean, quick_options(25));
    REQUIRE(model.modes() >= 2);

    SECTION("zero xi reproduces the mean field") {
        const auto s = kle::sample_field(model, Eigen::VectorXd::Zero(model.modes()));
        CHECK(s.valid);
        CHECK((s.values.array() - nu_mean).abs().maxCoeff() == 0.0);
    }
    SECTION("opposite xi are symmetric about the mean") {
        Eigen::VectorXd e1 = Eigen::VectorXd::Unit(model.modes(), 0);
        const auto plus = kle::sample_field(model, e1);
        const auto minus = kle::sample_field(model, (-e1).eval());
        const Eigen::VectorXd sum = plus.values + minus.values;
        CHECK((sum.array() - 2.0 * nu_mean).abs().maxCoeff() <= 1e-9);
    }
    SECTION("xi length mismatch is rejected") {
        CHECK_THROWS_AS(kle::sample_field(model, Eigen::VectorXd::Zero(model.modes() + 1)),
                        ConfigError);
    }
    SECTION("empirical variance matches the truncated covariance diagonal") {
        const int element = 0;
        double expected = 0.0;
        for (int i = 0; i < model.modes(); ++i)
            expected += model.eigenvalues(i) * model.eigenvectors(element, i) *
                        model.eigenvectors(element, i);

        std::mt19937_64 rng(123);
        std::uniform_real_distribution<double> uni(-std::sqrt(3.0), std::sqrt(3.0));
        const int draws = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (int k = 0; k < draws; ++k) {
            Eigen::VectorXd xi(model.modes());
            for (int i = 0; i < model.modes(); ++i) xi(i) = uni(rng);
            const double v = kle::sample_field(model, xi).values(element);
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / draws;
        const double var = sumsq / draws - mean * mean;
        CHECK(var == Approx(expected).epsilon(0.05));
    }
    SECTION("non-positive realizations are flagged, not clipped") {
        // sigma huge relative to the mean forces negative values somewhere.
        const auto wild =
            kle::build_kle_model(m, kle::CovarianceKernel(5.0, 0.1), 1e-6, quick_options(25));
        Eigen::VectorXd xi = Eigen::VectorXd::Constant(wild.modes(), 1.0);
        const auto s = kle::sample_field(wild, xi);
        CHECK_FALSE(s.valid);
        CHECK(s.values.minCoeff() < 0.0);
    }
}

TEST_CASE("model invariants on the reference pipeline", "[kle]") {
    const auto m = small_core(0.06, 0.08, 0.006);
    const auto geoms = mesh::all_geometries(m);
    const double core_area = mesh::region_area(m, mesh::Region::Core);

    SECTION("B-orthonormality of the returned modes") {
        const auto model =
            kle::build_kle_model(m, kle::CovarianceKernel(1.0, 0.1), 1.0, quick_options(25));
        const Eigen::VectorXd b = kle::assemble_mass_diagonal(geoms);
        for (int i = 0; i < model.modes(); ++i)
            for (int j = 0; j < model.modes(); ++j) {
                const double dot = model.eigenvectors.col(i).dot(
                    (b.array() * model.eigenvectors.col(j).array()).matrix());
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
            }
    }
    SECTION("mercer trace bound for any computed mode count") {
        // Tight ACA tolerance keeps the compressed spectrum within the trace.
        kle::KleOptions opt = quick_options(20);
        opt.epsilon = 1e-6;
        const auto model = kle::build_kle_model(m, kle::CovarianceKernel(2.0, 0.2), 1.0, opt);
        const double trace = 4.0 * core_area;
        double partial = 0.0;
        for (int i = 0; i < model.computed_spectrum.size(); ++i) {
            partial += model.computed_spectrum(i);
            CHECK(partial <= trace * (1.0 + 1e-6));
        }
    }
    SECTION("mode count reaching psi 0.95 is non-increasing in d") {
        int previous = 1 << 30;
        for (double d : {0.05, 0.2, 1.0}) {
            const auto model =
                kle::build_kle_model(m, kle::CovarianceKernel(1.0, d), 1.0, quick_options(60));
            CHECK(model.modes() <= previous);
            previous = model.modes();
        }
        CHECK(previous <= 10);  // strongly correlated end needs few modes
    }
    SECTION("solver-path equivalence: H-matrix vs dense matvec") {
        // Slowly decaying spectrum (small d) keeps the compared eigenvalues
        // above the compression noise floor of roughly Delta * lambda_1.
        const auto fine = small_core(0.06, 0.08, 0.003);  // enough elements to compress
        kle::KleOptions opt = quick_options(8);
        opt.fixed_modes = 8;
        opt.n_min = 64;
        const auto via_h = kle::build_kle_model(fine, kle::CovarianceKernel(1.0, 0.03), 1.0, opt);
        const auto via_dense =
            kle::build_kle_model_dense(fine, kle::CovarianceKernel(1.0, 0.03), 1.0, opt);
        REQUIRE(via_h.modes() == via_dense.modes());
        for (int i = 0; i < 6; ++i)
            CHECK(via_h.eigenvalues(i) ==
                  Approx(via_dense.eigenvalues(i)).epsilon(5.0 * opt.epsilon));
    }
    SECTION("sigma = 0 degenerates to the deterministic model") {
        kle::CovarianceKernel k;
        k.sigma = 0.0;
        k.d = 1.0;
        const auto model = kle::build_kle_model(m, k, 42.0, quick_options(5));
        CHECK(model.modes() == 0);
        const auto s = kle::sample_field(model, Eigen::VectorXd(0));
        CHECK((s.values.array() - 42.0).abs().maxCoeff() == 0.0);
    }
}
