#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "maguq/core.hpp"
#include "maguq/covariance.hpp"
#include "maguq/hmatrix.hpp"
#include "maguq/lanczos.hpp"
#include "maguq/mesh.hpp"

namespace maguq::kle {

/// Galerkin mass matrix for piecewise-constant shape functions: the indicator
/// overlap integral is zero off-diagonal and the element area on the diagonal.
inline Eigen::VectorXd assemble_mass_diagonal(std::span<const mesh::ElementGeometry> geoms) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(geoms.size()));
    for (std::size_t i = 0; i < geoms.size(); ++i) b(static_cast<Eigen::Index>(i)) = geoms[i].area;
    return b;
}

/// Truncated random-field representation: descending eigenvalues, discrete
/// per-core-element eigenfunctions (B-orthonormal), the constant mean field,
/// and the captured-variance ratio psi of the kept modes.
struct KleModel {
    Eigen::VectorXd eigenvalues;   // M kept modes, descending
    Eigen::MatrixXd eigenvectors;  // n_core x M
    double mean_field = 0.0;
    std::vector<int> core_elements;  // local row -> mesh element index
    double psi = 1.0;
    double core_area = 0.0;
    CovarianceKernel kernel;

    Eigen::VectorXd computed_spectrum;       // all computed eigenvalues (reporting)
    std::vector<bool> spectrum_converged;

    int modes() const { return static_cast<int>(eigenvalues.size()); }
};

/// Smallest M with sum_{i<=M} lambda_i >= threshold * trace, the trace being
/// the exact operator trace sigma^2 * area(D_c).
inline int truncate(const Eigen::VectorXd& eigenvalues, const CovarianceKernel& kernel,
                    double core_area, double threshold = 0.95) {
    const double trace = kernel.sigma * kernel.sigma * core_area;
    if (trace <= 0.0) return 0;  // deterministic field
    double cumulative = 0.0;
    for (int i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues(i) <= 0.0) break;
        cumulative += eigenvalues(i);
        if (cumulative / trace >= threshold) return i + 1;
    }
    throw NumericalError("truncation: need more eigenpairs, captured psi = " +
                         std::to_string(cumulative / trace) + " < threshold " +
                         std::to_string(threshold));
}

/// One realization of the reluctivity field. Non-positive values are flagged,
/// not clipped; the rejection policy belongs to the caller.
struct FieldSample {
    Eigen::VectorXd xi;
    Eigen::VectorXd values;  // per core element
    bool valid = true;
};

inline FieldSample sample_field(const KleModel& model, const Eigen::VectorXd& xi) {
    if (xi.size() != model.modes())
        throw ConfigError("sample_field: xi has length " + std::to_string(xi.size()) +
                          ", model has " + std::to_string(model.modes()) + " modes");
    FieldSample s;
    s.xi = xi;
    const Eigen::Index n = static_cast<Eigen::Index>(model.core_elements.size());
    s.values = Eigen::VectorXd::Constant(n, model.mean_field);
    for (int i = 0; i < model.modes(); ++i)
        s.values += std::sqrt(model.eigenvalues(i)) * xi(i) * model.eigenvectors.col(i);
    s.valid = n == 0 || s.values.minCoeff() > 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Closed-form 1D eigenvalues of the exponential kernel on an interval,
// lambda_n = 2 d sigma^2 / (1 + d^2 w_n^2) with w_n the ordered positive
// roots of the classical transcendental pair on [-a/2, a/2]. Test oracle.
// ---------------------------------------------------------------------------

inline std::vector<double> analytic_eigenpairs_1d(double sigma, double d, double a, int count) {
    if (a <= 0.0 || d <= 0.0) throw ConfigError("analytic eigenpairs: a and d must be positive");
    const double half = 0.5 * a;
    const double c = 1.0 / d;

    // Branch n: w * half in ((n-1) pi/2, n pi/2). Odd branches solve
    // c cos(w h) = w sin(w h), even branches w cos(w h) = -c sin(w h);
    // both forms are singularity-free on their bracket.
    auto f = [&](int n, double w) {
        return (n % 2 == 1) ? c * std::cos(w * half) - w * std::sin(w * half)
                            : w * std::cos(w * half) + c * std::sin(w * half);
    };

    std::vector<double> lambdas;
    lambdas.reserve(static_cast<std::size_t>(count));
    const double pi = 3.14159265358979323846;
    for (int n = 1; n <= count; ++n) {
        double lo = (n - 1) * pi / (2.0 * half);
        double hi = n * pi / (2.0 * half);
        // Nudge off the bracket ends where f is zero or singular by symmetry.
        const double pad = (hi - lo) * 1e-12;
        lo += pad;
        hi -= pad;
        double flo = f(n, lo);
        double fhi = f(n, hi);
        if (flo * fhi > 0.0)
            throw NumericalError("analytic eigenpairs: bracketing failed on branch " +
                                 std::to_string(n));
        for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(n, mid);
            if (flo * fm <= 0.0) {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        const double w = 0.5 * (lo + hi);
        lambdas.push_back(2.0 * d * sigma * sigma / (1.0 + d * d * w * w));
    }
    return lambdas;
}

// ---------------------------------------------------------------------------
// Model assembly: covariance H-matrix over the core elements, Lanczos on the
// generalized pencil, truncation by the relative information criterion.
// ---------------------------------------------------------------------------

struct KleOptions {
    double threshold = 0.95;
    int m_request = 30;
    double tol = 1e-8;
    int max_iter = 0;       // 0 -> Lanczos default
    int fixed_modes = 0;    // > 0 bypasses the threshold criterion
    std::uint64_t seed = 0;
    int n_min = 256;
    double eta = 1.0;
    double epsilon = 0.01;
    int k_max = 128;
    int threads = 1;
};

namespace detail {

inline KleModel finish_model(const CovarianceKernel& kernel, double mean_field,
                             const KleOptions& opt, EigenPairs pairs, std::vector<int> core,
                             double core_area) {
    // Discard non-positive eigenvalues: they carry no field variance.
    int usable = 0;
    while (usable < pairs.values.size() && pairs.values(usable) > 0.0) ++usable;

    KleModel model;
    model.kernel = kernel;
    model.mean_field = mean_field;
    model.core_elements = std::move(core);
    model.core_area = core_area;
    model.computed_spectrum = pairs.values.head(usable);
    model.spectrum_converged.assign(pairs.converged.begin(), pairs.converged.begin() + usable);

    int m = 0;
    if (opt.fixed_modes > 0) {
        if (opt.fixed_modes > usable)
            throw NumericalError("kle: requested " + std::to_string(opt.fixed_modes) +
                                 " modes but only " + std::to_string(usable) + " are available");
        m = opt.fixed_modes;
    } else {
        m = truncate(model.computed_spectrum, kernel, core_area, opt.threshold);
    }
    model.eigenvalues = pairs.values.head(m);
    model.eigenvectors = pairs.vectors.leftCols(m);
    const double trace = kernel.sigma * kernel.sigma * core_area;
    model.psi = trace > 0.0 ? model.eigenvalues.sum() / trace : 1.0;
    return model;
}

}  // namespace detail

/// Builds the sampled-field model with H-matrix-accelerated Lanczos.
inline KleModel build_kle_model(const mesh::TriMesh& m, const CovarianceKernel& kernel,
                                double mean_field, const KleOptions& opt) {
    auto core = mesh::core_elements(m);
    if (core.empty()) throw ConfigError("kle: mesh has no core elements");

    std::vector<mesh::ElementGeometry> geoms;
    geoms.reserve(core.size());
    double core_area = 0.0;
    for (int e : core) {
        geoms.push_back(mesh::element_geometry(m, e));
        core_area += geoms.back().area;
    }

    if (kernel.sigma == 0.0) {  // deterministic field: no eigenproblem to solve
        KleModel model;
        model.kernel = kernel;
        model.mean_field = mean_field;
        model.core_elements = std::move(core);
        model.core_area = core_area;
        model.eigenvalues.resize(0);
        model.eigenvectors.resize(static_cast<Eigen::Index>(geoms.size()), 0);
        model.computed_spectrum.resize(0);
        return model;
    }

    const int n = static_cast<int>(geoms.size());
    const int m_request = std::min(opt.m_request, n);

    const hmat::HMatrix h = hmat::assemble_covariance_hmatrix(
        geoms, kernel, opt.n_min, opt.eta, opt.epsilon, opt.k_max, opt.threads);
    const Eigen::VectorXd b = assemble_mass_diagonal(geoms);

    LanczosOptions lopt;
    lopt.m_request = m_request;
    lopt.tol = opt.tol;
    lopt.max_iter = opt.max_iter;
    lopt.seed = opt.seed;
    EigenPairs pairs = lanczos_generalized(
        [&h](const Eigen::VectorXd& x) { return hmat::hmatvec_symmetrized(h, x); }, b, lopt);

    return detail::finish_model(kernel, mean_field, opt, std::move(pairs), std::move(core),
                                core_area);
}

/// Dense-assembly variant of build_kle_model; the solver-path oracle.
inline KleModel build_kle_model_dense(const mesh::TriMesh& m, const CovarianceKernel& kernel,
                                      double mean_field, const KleOptions& opt) {
    auto core = mesh::core_elements(m);
    if (core.empty()) throw ConfigError("kle: mesh has no core elements");
    std::vector<mesh::ElementGeometry> geoms;
    geoms.reserve(core.size());
    double core_area = 0.0;
    for (int e : core) {
        geoms.push_back(mesh::element_geometry(m, e));
        core_area += geoms.back().area;
    }
    if (kernel.sigma == 0.0) return build_kle_model(m, kernel, mean_field, opt);

    const Eigen::MatrixXd a = hmat::dense_covariance(geoms, kernel);
    const Eigen::VectorXd b = assemble_mass_diagonal(geoms);

    LanczosOptions lopt;
    lopt.m_request = std::min(opt.m_request, static_cast<int>(geoms.size()));
    lopt.tol = opt.tol;
    lopt.max_iter = opt.max_iter;
    lopt.seed = opt.seed;
    EigenPairs pairs = lanczos_generalized(
        [&a](const Eigen::VectorXd& x) { return (a * x).eval(); }, b, lopt);

    return detail::finish_model(kernel, mean_field, opt, std::move(pairs), std::move(core),
                                core_area);
}

}  // namespace maguq::kle
