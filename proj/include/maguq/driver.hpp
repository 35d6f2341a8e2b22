#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "maguq/config.hpp"
#include "maguq/csv.hpp"
#include "maguq/fem.hpp"
#include "maguq/hmatrix.hpp"
#include "maguq/kle.hpp"
#include "maguq/mesh.hpp"
#include "maguq/uq.hpp"

namespace maguq::cli {

inline mesh::TriMesh build_mesh(const RunConfig& config) {
    if (config.mesh_source == "generate")
        return mesh::generate_reference_geometry(config.geometry);
    if (config.mesh_source == "files") {
        if (config.mesh_node.empty() || config.mesh_ele.empty())
            throw ConfigError("config: mesh.source=files requires mesh.node and mesh.ele");
        return mesh::load_triangle_mesh(config.mesh_node, config.mesh_ele);
    }
    throw ConfigError("config: mesh.source must be 'generate' or 'files'");
}

inline kle::KleOptions kle_options(const RunConfig& config) {
    kle::KleOptions opt;
    opt.threshold = config.threshold;
    opt.m_request = config.m_request;
    opt.tol = config.kle_tol;
    opt.max_iter = config.kle_max_iter;
    opt.fixed_modes = config.fixed_modes;
    opt.seed = config.seed;
    opt.n_min = config.n_min;
    opt.eta = config.eta;
    opt.epsilon = config.epsilon;
    opt.k_max = config.k_max;
    opt.threads = config.threads;
    return opt;
}

inline fem::MaterialConfig materials(const RunConfig& config) {
    fem::MaterialConfig mat;
    mat.nu_air = config.nu_air;
    mat.nu_coil = config.nu_coil;
    mat.n_turns = config.n_turns;
    mat.current = config.current;
    return mat;
}

inline kle::KleModel build_model(const RunConfig& config, const mesh::TriMesh& m, double d) {
    return kle::build_kle_model(m, kle::CovarianceKernel(config.sigma, d), config.nu_mean,
                                kle_options(config));
}

namespace detail {

inline std::string out_path(const std::string& out_dir, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
}

}  // namespace detail

/// `eigens`: eigenvalue/psi table and per-mode eigenfunction tables per
/// correlation length.
inline std::vector<std::string> run_eigens(const RunConfig& config, const std::string& out_dir) {
    const std::string echo = config_echo(config);
    const mesh::TriMesh m = build_mesh(config);
    std::vector<std::string> written;

    for (double d : config.d_sweep) {
        const kle::KleModel model = build_model(config, m, d);
        const double trace = model.kernel.sigma * model.kernel.sigma * model.core_area;

        const std::string tag = value_tag(d);
        const std::string eig_path = detail::out_path(out_dir, "eigenvalues_d" + tag + ".csv");
        {
            CsvWriter csv(eig_path, echo, "index,lambda,cumulative_psi");
            double cum = 0.0;
            for (int i = 0; i < model.computed_spectrum.size(); ++i) {
                cum += model.computed_spectrum(i);
                csv.row(i + 1, model.computed_spectrum(i), trace > 0.0 ? cum / trace : 1.0);
            }
        }
        written.push_back(eig_path);

        for (int i = 0; i < model.modes(); ++i) {
            const std::string mode_path =
                detail::out_path(out_dir, "eigenfunction_d" + tag + "_mode" + std::to_string(i + 1) + ".csv");
            CsvWriter csv(mode_path, echo, "element_id,f");
            for (std::size_t r = 0; r < model.core_elements.size(); ++r)
                csv.row(model.core_elements[r], model.eigenvectors(static_cast<Eigen::Index>(r), i));
            written.push_back(mode_path);
        }
    }
    return written;
}

/// `memory`: storage and accuracy report of the compressed covariance matrix
/// per correlation length.
inline std::vector<std::string> run_memory(const RunConfig& config, const std::string& out_dir) {
    const std::string echo = config_echo(config);
    const mesh::TriMesh m = build_mesh(config);
    const auto core = mesh::core_elements(m);
    if (core.empty()) throw ConfigError("memory: mesh has no core elements");
    std::vector<mesh::ElementGeometry> geoms;
    geoms.reserve(core.size());
    for (int e : core) geoms.push_back(mesh::element_geometry(m, e));

    const std::string path = detail::out_path(out_dir, "memory.csv");
    CsvWriter csv(path, echo,
                  "N,eta,n_min,epsilon,d,bytes_hmatrix,bytes_dense,ratio,max_rank,delta");
    for (double d : config.d_sweep) {
        const kle::CovarianceKernel kernel(config.sigma, d);
        const hmat::HMatrix h = hmat::assemble_covariance_hmatrix(
            geoms, kernel, config.n_min, config.eta, config.epsilon, config.k_max, config.threads);
        const hmat::MemoryReport r = hmat::memory_report(h);
        const auto delta = hmat::relative_error_dense(h, kernel, geoms, config.dense_budget);
        csv.row(h.n(), config.eta, config.n_min, config.epsilon, d, r.bytes_stored, r.bytes_dense,
                r.ratio, r.max_rank, delta ? csv_num(*delta) : std::string("nc"));
    }
    return {path};
}

/// `uq`: inductance statistics per correlation length.
inline std::vector<std::string> run_uq(const RunConfig& config, const std::string& out_dir) {
    const std::string echo = config_echo(config);
    const mesh::TriMesh m = build_mesh(config);
    const fem::MaterialConfig mat = materials(config);
    const Eigen::VectorXd f = fem::assemble_load(m, mat);

    const std::string path = detail::out_path(out_dir, "uq.csv");
    CsvWriter csv(path, echo, "d,sigma,M,p,N_c,rejected,L_mu,L_std");
    for (double d : config.d_sweep) {
        const kle::KleModel model = build_model(config, m, d);
        const uq::CollocationGrid grid =
            uq::tensor_grid(config.degree, model.modes(), config.node_budget);
        const fem::AffineStiffness stiffness = fem::assemble_affine_stiffness(m, mat, model);
        const uq::NodeEvaluations evals =
            uq::run_collocation(grid, model, stiffness, f, mat, config.threads);
        const uq::MomentReport report = uq::moments(evals, grid, model);
        csv.row(d, config.sigma, report.modes, config.degree, report.node_count, report.rejected,
                report.mean, report.std);
    }
    return {path};
}

/// `sample`: one field realization per correlation length, from an explicit
/// xi vector or drawn from the seed; optionally also the FEM solution at it.
inline std::vector<std::string> run_sample(const RunConfig& config, const std::string& out_dir) {
    const std::string echo = config_echo(config);
    const mesh::TriMesh m = build_mesh(config);
    std::vector<std::string> written;

    for (double d : config.d_sweep) {
        const kle::KleModel model = build_model(config, m, d);

        Eigen::VectorXd xi(model.modes());
        if (!config.sample_xi.empty()) {
            if (static_cast<int>(config.sample_xi.size()) != model.modes())
                throw ConfigError("sample: xi has length " +
                                  std::to_string(config.sample_xi.size()) + " but the model has " +
                                  std::to_string(model.modes()) + " modes");
            for (int i = 0; i < model.modes(); ++i)
                xi(i) = config.sample_xi[static_cast<std::size_t>(i)];
        } else {
            std::mt19937_64 rng(config.seed ^ 0x5eedu);
            std::uniform_real_distribution<double> uni(-uq::kXiHalfWidth, uq::kXiHalfWidth);
            for (int i = 0; i < model.modes(); ++i) xi(i) = uni(rng);
        }

        const kle::FieldSample sample = kle::sample_field(model, xi);
        const std::string tag = value_tag(d);
        const std::string path = detail::out_path(out_dir, "sample_d" + tag + ".csv");
        {
            CsvWriter csv(path, echo, "element_id,nu");
            csv.raw_line("# valid: " + std::string(sample.valid ? "1" : "0"));
            for (std::size_t r = 0; r < model.core_elements.size(); ++r)
                csv.row(model.core_elements[r], sample.values(static_cast<Eigen::Index>(r)));
        }
        written.push_back(path);

        if (config.sample_solve) {
            if (!sample.valid)
                throw NumericalError("sample: field realization is non-positive, not solving");
            const fem::MaterialConfig mat = materials(config);
            const Eigen::VectorXd f = fem::assemble_load(m, mat);
            const fem::SpMat k = fem::assemble_stiffness(
                m, fem::reluctivity_field(m, mat, model.core_elements, sample.values),
                m.boundary_vertices, true);
            const fem::FemSolution sol = fem::solve(k, f, "sample d=" + csv_num(d));
            const std::string sol_path = detail::out_path(out_dir, "solution_d" + tag + ".csv");
            CsvWriter csv(sol_path, echo, "vertex_id,x,y,A_z");
            for (int v = 0; v < m.vertex_count(); ++v)
                csv.row(v, m.vertices[static_cast<std::size_t>(v)].x,
                        m.vertices[static_cast<std::size_t>(v)].y, sol.a(v));
            written.push_back(sol_path);
        }
    }
    return written;
}

/// `mesh-info`: one-row summary of the active mesh.
inline std::vector<std::string> run_mesh_info(const RunConfig& config, const std::string& out_dir) {
    const std::string echo = config_echo(config);
    const mesh::TriMesh m = build_mesh(config);
    const std::string path = detail::out_path(out_dir, "mesh_info.csv");
    CsvWriter csv(path, echo,
                  "vertices,elements,boundary_vertices,core_elements,core_components,conforming,"
                  "core_area,air_area,coil_plus_area,coil_minus_area,coil_secondary_area");
    csv.row(m.vertex_count(), m.element_count(), static_cast<int>(m.boundary_vertices.size()),
            static_cast<int>(mesh::core_elements(m).size()),
            mesh::region_component_count(m, mesh::Region::Core), mesh::is_conforming(m) ? 1 : 0,
            mesh::region_area(m, mesh::Region::Core), mesh::region_area(m, mesh::Region::Air),
            mesh::region_area(m, mesh::Region::CoilPlusPrimary),
            mesh::region_area(m, mesh::Region::CoilMinusPrimary),
            mesh::region_area(m, mesh::Region::CoilSecondary));
    return {path};
}

}  // namespace maguq::cli
