#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <string>
#include <vector>

#include "maguq/core.hpp"
#include "maguq/kle.hpp"
#include "maguq/mesh.hpp"

namespace maguq::fem {

using SpMat = Eigen::SparseMatrix<double>;

/// Material and source data of the magnetostatic model. The winding
/// cross-section areas are measured from the mesh so the net impressed
/// current balances exactly.
struct MaterialConfig {
    double nu_air = 795774.7154594767;   // 1/mu0, H^-1 m
    double nu_coil = 795774.7154594767;  // H^-1 m
    int n_turns = 260;
    double current = 1.0;  // A
};

/// Constant current density of the stranded-conductor model on each primary
/// polarity region, +N I / S+ and -N I / S-.
struct StrandedSource {
    double j_plus = 0.0;
    double j_minus = 0.0;
    double s_plus = 0.0;
    double s_minus = 0.0;
};

inline StrandedSource stranded_source(const mesh::TriMesh& m, const MaterialConfig& mat) {
    if (mat.current == 0.0) throw ConfigError("source: coil current must be nonzero");
    if (mat.n_turns < 1) throw ConfigError("source: turn count must be at least 1");
    StrandedSource s;
    s.s_plus = mesh::region_area(m, mesh::Region::CoilPlusPrimary);
    s.s_minus = mesh::region_area(m, mesh::Region::CoilMinusPrimary);
    if (s.s_plus <= 0.0 || s.s_minus <= 0.0)
        throw ConfigError("source: mesh is missing a primary-coil polarity region");
    s.j_plus = mat.n_turns * mat.current / s.s_plus;
    s.j_minus = -mat.n_turns * mat.current / s.s_minus;
    return s;
}

/// Load vector of the P1 Galerkin system: constant J_z against hat functions
/// integrates to J_z * area / 3 per element vertex. Dirichlet entries are
/// zeroed to match the eliminated rows.
inline Eigen::VectorXd assemble_load(const mesh::TriMesh& m, const MaterialConfig& mat) {
    const StrandedSource src = stranded_source(m, mat);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m.vertex_count());
    for (int e = 0; e < m.element_count(); ++e) {
        const mesh::Region r = m.element_region[static_cast<std::size_t>(e)];
        double jz = 0.0;
        if (r == mesh::Region::CoilPlusPrimary) jz = src.j_plus;
        else if (r == mesh::Region::CoilMinusPrimary) jz = src.j_minus;
        else continue;
        const double contribution = jz * mesh::element_geometry(m, e).area / 3.0;
        for (int v : m.elements[static_cast<std::size_t>(e)]) f(v) += contribution;
    }
    for (int v : m.boundary_vertices) f(v) = 0.0;
    return f;
}

namespace detail {

/// Per-element P1 stiffness contribution: with CCW vertices and constant nu,
/// K^e_ij = nu * (b_i b_j + c_i c_j) / (4 T).
struct ElementStiffness {
    std::array<int, 3> v{};
    std::array<std::array<double, 3>, 3> k{};
};

inline ElementStiffness element_stiffness(const mesh::TriMesh& m, int e, double nu) {
    const auto& t = m.elements[static_cast<std::size_t>(e)];
    const Point2& p0 = m.vertices[static_cast<std::size_t>(t[0])];
    const Point2& p1 = m.vertices[static_cast<std::size_t>(t[1])];
    const Point2& p2 = m.vertices[static_cast<std::size_t>(t[2])];
    const double area = mesh::signed_area(p0, p1, p2);
    const std::array<double, 3> b{p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const std::array<double, 3> c{p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    ElementStiffness out;
    out.v = t;
    const double scale = nu / (4.0 * area);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                scale * (b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)] +
                         c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace detail

/// Assembles the global stiffness matrix for a per-element reluctivity, with
/// symmetric Dirichlet elimination on the given vertex set. `unit_diagonal`
/// selects between the mean matrix (1 on the constrained diagonal) and the
/// parametric matrices (0 there).
inline SpMat assemble_stiffness(const mesh::TriMesh& m, const Eigen::VectorXd& nu_per_element,
                                const std::vector<int>& dirichlet, bool unit_diagonal = true) {
    if (nu_per_element.size() != m.element_count())
        throw ConfigError("stiffness assembly: per-element reluctivity has wrong length");
    std::vector<char> constrained(static_cast<std::size_t>(m.vertex_count()), 0);
    for (int v : dirichlet) constrained[static_cast<std::size_t>(v)] = 1;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m.element_count()) * 9 + dirichlet.size());
    for (int e = 0; e < m.element_count(); ++e) {
        const auto es = detail::element_stiffness(m, e, nu_per_element(e));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const int vi = es.v[static_cast<std::size_t>(i)];
                const int vj = es.v[static_cast<std::size_t>(j)];
                if (constrained[static_cast<std::size_t>(vi)] ||
                    constrained[static_cast<std::size_t>(vj)])
                    continue;
                trip.emplace_back(vi, vj, es.k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            }
        }
    }
    // Constrained diagonal: 1 in the mean matrix, structural 0 in the mode
    // matrices so that all affine terms share one sparsity pattern.
    for (int v : dirichlet) trip.emplace_back(v, v, unit_diagonal ? 1.0 : 0.0);

    SpMat k(m.vertex_count(), m.vertex_count());
    k.setFromTriplets(trip.begin(), trip.end());
    return k;
}

/// Per-element reluctivity from region tags, with the core entries supplied
/// separately (mean value or a sampled field).
inline Eigen::VectorXd reluctivity_field(const mesh::TriMesh& m, const MaterialConfig& mat,
                                         const std::vector<int>& core,
                                         const Eigen::VectorXd& core_values) {
    Eigen::VectorXd nu(m.element_count());
    for (int e = 0; e < m.element_count(); ++e) {
        switch (m.element_region[static_cast<std::size_t>(e)]) {
            case mesh::Region::Core: nu(e) = 0.0; break;  // filled below
            case mesh::Region::Air: nu(e) = mat.nu_air; break;
            default: nu(e) = mat.nu_coil; break;
        }
    }
    for (std::size_t i = 0; i < core.size(); ++i)
        nu(core[i]) = core_values(static_cast<Eigen::Index>(i));
    return nu;
}

/// Affine decomposition K(xi) = K_mean + sum_i xi_i K_i. All matrices share
/// one sparsity pattern so evaluation is a vectorized sum over value arrays.
struct AffineStiffness {
    SpMat k_mean;
    std::vector<SpMat> k_modes;
    std::vector<int> dirichlet;

    int n() const { return static_cast<int>(k_mean.rows()); }
    int modes() const { return static_cast<int>(k_modes.size()); }

    SpMat at(const Eigen::VectorXd& xi) const {
        if (xi.size() != modes())
            throw ConfigError("stiffness(xi): xi has length " + std::to_string(xi.size()) +
                              ", decomposition has " + std::to_string(modes()) + " modes");
        SpMat k = k_mean;
        for (int i = 0; i < modes(); ++i) {
            const SpMat& ki = k_modes[static_cast<std::size_t>(i)];
            Eigen::Map<Eigen::VectorXd>(k.valuePtr(), k.nonZeros()) +=
                xi(i) * Eigen::Map<const Eigen::VectorXd>(ki.valuePtr(), ki.nonZeros());
        }
        return k;
    }
};

inline AffineStiffness assemble_affine_stiffness(const mesh::TriMesh& m,
                                                 const MaterialConfig& mat,
                                                 const kle::KleModel& model) {
    const auto core = mesh::core_elements(m);
    if (core != model.core_elements)
        throw ConfigError("affine stiffness: KLE model was built on a different core");

    AffineStiffness a;
    a.dirichlet = m.boundary_vertices;

    const Eigen::VectorXd mean_values =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(core.size()), model.mean_field);
    a.k_mean = assemble_stiffness(m, reluctivity_field(m, mat, core, mean_values), a.dirichlet, true);

    a.k_modes.reserve(static_cast<std::size_t>(model.modes()));
    for (int i = 0; i < model.modes(); ++i) {
        // Mode coefficient sqrt(lambda_i) f_i on core elements, zero elsewhere.
        Eigen::VectorXd nu = Eigen::VectorXd::Zero(m.element_count());
        const double scale = std::sqrt(model.eigenvalues(i));
        for (std::size_t r = 0; r < core.size(); ++r)
            nu(core[r]) = scale * model.eigenvectors(static_cast<Eigen::Index>(r), i);
        a.k_modes.push_back(assemble_stiffness(m, nu, a.dirichlet, false));
        if (a.k_modes.back().nonZeros() != a.k_mean.nonZeros())
            throw NumericalError("affine stiffness: sparsity patterns diverged");
    }
    return a;
}

struct FemSolution {
    Eigen::VectorXd a;       // vector-potential coefficients, V s / m
    double residual = 0.0;   // achieved relative residual
};

/// Direct sparse SPD solver with a reusable symbolic factorization: repeated
/// solves at different xi share the analyzePattern step.
class SpdSolver {
public:
    explicit SpdSolver(const SpMat& pattern) { solver_.analyzePattern(pattern); }

    FemSolution solve(const SpMat& k, const Eigen::VectorXd& f, const std::string& label = "") {
        solver_.factorize(k);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("fem solve" + (label.empty() ? "" : " at " + label) +
                                 ": factorization failed (system not positive definite)");
        FemSolution s;
        s.a = solver_.solve(f);
        const double fn = f.norm();
        s.residual = fn > 0.0 ? (k * s.a - f).norm() / fn : 0.0;
        if (s.residual > 1e-10)
            throw NumericalError("fem solve" + (label.empty() ? "" : " at " + label) +
                                 ": residual " + std::to_string(s.residual) + " exceeds 1e-10");
        return s;
    }

private:
    Eigen::SimplicialLLT<SpMat> solver_;
};

inline FemSolution solve(const SpMat& k, const Eigen::VectorXd& f, const std::string& label = "") {
    SpdSolver s(k);
    return s.solve(k, f, label);
}

/// Stored magnetic energy per meter of axial depth, W = a^T K a / 2.
inline double energy(const SpMat& k, const Eigen::VectorXd& a) {
    return 0.5 * a.dot(k * a);
}

/// Self-inductance per meter of axial depth, L = 2 W / I^2.
inline double inductance(double w, double current) {
    if (current == 0.0) throw ConfigError("inductance: coil current must be nonzero");
    return 2.0 * w / (current * current);
}

}  // namespace maguq::fem
