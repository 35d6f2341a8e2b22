#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "maguq/core.hpp"

namespace maguq::kle {

using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LanczosOptions {
    int m_request = 10;        // number of largest eigenpairs wanted
    double tol = 1e-8;         // relative residual ||A f - lambda B f|| <= tol ||A f||
    int max_iter = 0;          // 0 -> 4 * m_request + 100
    std::uint64_t seed = 0;    // start-vector seed
};

struct EigenPairs {
    Eigen::VectorXd values;       // descending
    Eigen::MatrixXd vectors;      // columns, B-orthonormal
    std::vector<bool> converged;  // per pair
    int iterations = 0;

    bool all_converged() const {
        for (bool c : converged)
            if (!c) return false;
        return true;
    }
};

/// Largest eigenpairs of A f = lambda B f for symmetric A and positive
/// diagonal B, via Lanczos with full reorthogonalization on the symmetrized
/// operator C = B^{-1/2} A B^{-1/2}. Only matrix-vector products with A are
/// required. On breakdown the iteration restarts with a fresh random vector
/// orthogonalized against the Krylov basis built so far.
inline EigenPairs lanczos_generalized(const MatVec& apply_a, const Eigen::VectorXd& b_diag,
                                      const LanczosOptions& opt) {
    const int n = static_cast<int>(b_diag.size());
    if (n == 0) throw ConfigError("lanczos: empty operator");
    if (opt.m_request < 1 || opt.m_request > n)
        throw ConfigError("lanczos: m_request must lie in [1, n]");
    if (b_diag.minCoeff() <= 0.0)
        throw ConfigError("lanczos: B must be strictly positive diagonal");

    const Eigen::VectorXd b_isqrt = b_diag.cwiseSqrt().cwiseInverse();
    auto apply_c = [&](const Eigen::VectorXd& x) {
        return (b_isqrt.array() * apply_a((b_isqrt.array() * x.array()).matrix()).array()).matrix().eval();
    };

    const int max_dim = std::min(n, opt.max_iter > 0 ? opt.max_iter : 4 * opt.m_request + 100);

    std::mt19937_64 rng(opt.seed ^ 0x1f2e3d4c5b6a7988ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_vector = [&] {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = gauss(rng);
        return v;
    };

    std::vector<Eigen::VectorXd> basis;  // orthonormal Lanczos vectors q_1..q_j
    basis.reserve(static_cast<std::size_t>(max_dim));
    std::vector<double> alpha, beta;  // beta[j] couples q_{j+1} to q_j; 0 marks a restart

    auto orthogonalize = [&](Eigen::VectorXd& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= q.dot(w) * q;
    };

    // Start vector.
    {
        Eigen::VectorXd q = random_vector();
        q /= q.norm();
        basis.push_back(q);
    }

    const double breakdown_tol = 1e-13;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri_solver;
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_vectors;
    int j = 0;

    while (true) {
        const Eigen::VectorXd& qj = basis.back();
        Eigen::VectorXd w = apply_c(qj);
        const double a = qj.dot(w);
        alpha.push_back(a);
        ++j;

        w -= a * qj;
        if (j >= 2 && beta.back() != 0.0) w -= beta.back() * basis[static_cast<std::size_t>(j - 2)];
        orthogonalize(w);

        if (j >= max_dim) break;

        double b = w.norm();
        if (b <= breakdown_tol * std::max(1.0, std::abs(a))) {
            // Invariant subspace found; restart with a fresh direction.
            Eigen::VectorXd fresh = random_vector();
            orthogonalize(fresh);
            const double fn = fresh.norm();
            if (fn <= 1e-10) break;  // Krylov space exhausted
            basis.push_back(fresh / fn);
            beta.push_back(0.0);
        } else {
            basis.push_back(w / b);
            beta.push_back(b);
        }

        // Convergence check on the leading Ritz pairs (amortized: the
        // tridiagonal solve is not free at large subspace dimensions).
        if (j >= opt.m_request && (j % 5 == 0 || j + 1 >= max_dim)) {
            Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), j);
            Eigen::VectorXd sub(j - 1);
            for (int i = 0; i + 1 < j; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
            tri_solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const auto& ev = tri_solver.eigenvalues();  // ascending
            const auto& vecs = tri_solver.eigenvectors();
            bool done = true;
            const double last_beta = beta.back();
            for (int m = 0; m < opt.m_request; ++m) {
                const int idx = j - 1 - m;
                const double theta = ev(idx);
                const double bound = std::abs(last_beta * vecs(j - 1, idx));
                if (bound > opt.tol * std::max(std::abs(theta), 1e-300)) {
                    done = false;
                    break;
                }
            }
            if (done) break;
        }
    }

    // Final Ritz extraction from the full tridiagonal.
    {
        Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), j);
        Eigen::VectorXd sub(std::max(j - 1, 0));
        for (int i = 0; i + 1 < j; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
        tri_solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        ritz_values = tri_solver.eigenvalues();
        ritz_vectors = tri_solver.eigenvectors();
    }

    const int m_out = std::min(opt.m_request, j);
    EigenPairs out;
    out.values.resize(m_out);
    out.vectors.resize(n, m_out);
    out.converged.assign(static_cast<std::size_t>(m_out), false);
    out.iterations = j;

    Eigen::MatrixXd q(n, j);
    for (int c = 0; c < j; ++c) q.col(c) = basis[static_cast<std::size_t>(c)];

    for (int m = 0; m < m_out; ++m) {
        const int idx = j - 1 - m;  // descending order
        const double theta = ritz_values(idx);
        Eigen::VectorXd g = q * ritz_vectors.col(idx);
        g /= g.norm();
        Eigen::VectorXd f = (b_isqrt.array() * g.array()).matrix();

        // Deterministic sign: largest-magnitude entry positive.
        int imax = 0;
        f.cwiseAbs().maxCoeff(&imax);
        if (f(imax) < 0.0) f = -f;

        out.values(m) = theta;
        out.vectors.col(m) = f;

        const Eigen::VectorXd af = apply_a(f);
        const double an = af.norm();
        const double res = (af - theta * (b_diag.array() * f.array()).matrix()).norm();
        out.converged[static_cast<std::size_t>(m)] = an > 0.0 ? (res <= opt.tol * an) : true;
    }
    return out;
}

}  // namespace maguq::kle
