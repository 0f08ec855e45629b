#pragma once

#include "ldmaps/eigensolver.hpp"
#include "ldmaps/graph_kernel.hpp"

#include <span>

namespace ldmaps {

/// Right eigenpairs of a Markov matrix, eigenvalues non-ascending and
/// eigenvectors scaled to unit Euclidean norm.
struct MarkovEigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// A fitted full diffusion map.
struct DiffusionModel {
    double epsilon = 0.0;
    int k = 0;
    /// lambda_1 .. lambda_{k+1}
    Eigen::VectorXd eigenvalues;
    /// N x (k+1), column l-1 holds psi_l
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd D;
    RowMatrix training_points;
    Metric metric = Metric::euclidean;
    std::optional<int> atoms_per_frame;

    Eigen::Index size() const { return training_points.rows(); }
};

/// Top n_pairs eigenpairs of M = D^-1 A, solved through the symmetric
/// conjugate S = D^-1/2 A D^-1/2 and back-transformed.
MarkovEigenpairs eigensolve_markov(const MarkovSystem& ms, Eigen::Index n_pairs,
                                   const EigenOptions& opts = {});
/// Same, but consumes `ms` to avoid a second N x N buffer.
MarkovEigenpairs eigensolve_markov(MarkovSystem&& ms, Eigen::Index n_pairs,
                                   const EigenOptions& opts = {});

/// Resolves the bandwidth for `cfg` (auto selects the smallest connected eps)
/// and checks that the thresholded graph is connected.
double resolve_epsilon(const DistanceMatrix& d, const KernelConfig& cfg);

DiffusionModel fit_diffusion_map(const PointSet& ps, const KernelConfig& cfg, int k,
                                 const EigenOptions& opts = {});
/// Reuses a precomputed distance matrix of `ps`.
DiffusionModel fit_diffusion_map(const PointSet& ps, const DistanceMatrix& d, const KernelConfig& cfg,
                                 int k, const EigenOptions& opts = {});

/// Columns psi_2 .. psi_{k+1} of the fitted eigenvectors.
EmbeddingMatrix embed_training(const DiffusionModel& model);

/// Number of non-trivial modes before the largest drop in the spectrum.
int spectral_gap(std::span<const double> eigenvalues);

/// Nystrom out-of-sample extension of `new_points` through the full model.
EmbeddingMatrix nystrom_extend(const DiffusionModel& model, const PointSet& new_points);
/// One query; `out` has k entries. Thread-safe on a shared model.
void nystrom_extend_point(const DiffusionModel& model, std::span<const double> query,
                          std::span<double> out);

/// Throws NumericalError if any eigenvalue used for projection is below 1e-12.
void check_projectable(const Eigen::VectorXd& eigenvalues);

}  // namespace ldmaps
