#pragma once

#include "ldmaps/graph_kernel.hpp"

#include <cstdint>
#include <functional>

namespace ldmaps {

struct EigenOptions {
    /// Problems up to this size use a dense solve; larger ones Lanczos.
    Eigen::Index dense_limit = 512;
    /// Residual bound |S y - theta y| for accepting a Ritz pair.
    double tolerance = 1e-10;
    /// Matrix-vector product budget for Lanczos; 0 means 10 * n.
    Eigen::Index max_iterations = 0;
    /// Seed of the Lanczos start vector.
    std::uint64_t seed = 0x5eed;
};

/// Leading eigenpairs of a real symmetric matrix, eigenvalues non-ascending,
/// eigenvectors orthonormal columns.
struct SymmetricEigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    Eigen::Index matvecs = 0;
};

using MatVec = std::function<void(const double* x, double* y)>;

/// Thick-restart Lanczos with full reorthogonalisation for the n_pairs
/// algebraically largest eigenpairs. Throws NumericalError (reporting the
/// iteration count) when the budget is exhausted.
SymmetricEigenpairs lanczos_top(const MatVec& op, Eigen::Index n, Eigen::Index n_pairs,
                                const EigenOptions& opts = {});

/// Dense solve of the full spectrum, returning the top n_pairs.
SymmetricEigenpairs dense_top(const Eigen::MatrixXd& s, Eigen::Index n_pairs);

/// Dense below opts.dense_limit or when n_pairs is a large share of n, Lanczos otherwise.
SymmetricEigenpairs top_eigenpairs(const PackedSymmetric& s, Eigen::Index n_pairs,
                                   const EigenOptions& opts = {});

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties).
void apply_sign_convention(Eigen::MatrixXd& vectors);

}  // namespace ldmaps
