#pragma once

#include "ldmaps/eigensolver.hpp"
#include "ldmaps/landmarks.hpp"

#include <span>

namespace ldmaps {

/// Reduced diffusion map over M weighted landmarks. Holds only landmark
/// coordinates, so memory is O(MK + Mk) regardless of the training size.
struct LandmarkModel {
    double epsilon = 0.0;
    int k = 0;
    RowMatrix landmark_points;
    /// c_i, the Voronoi cell sizes.
    Eigen::VectorXd multiplicities;
    /// D~_i = sum_j A~_ij c_j
    Eigen::VectorXd Dtilde;
    Eigen::VectorXd eigenvalues;
    /// M x (k+1), normalised so that sum_i c_i psi(i)^2 = 1.
    Eigen::MatrixXd eigenvectors;
    Metric metric = Metric::euclidean;
    std::optional<int> atoms_per_frame;

    Eigen::Index size() const { return landmark_points.rows(); }
};

/// Solves M~ C~ psi = lambda psi for the weighted landmark points.
LandmarkModel fit_weighted_map(const PointSet& landmark_points, const Eigen::VectorXd& multiplicities,
                               double epsilon, int k, const EigenOptions& opts = {});

LandmarkModel fit_landmark_map(const PointSet& ps, const LandmarkSet& ls, double epsilon, int k,
                               const EigenOptions& opts = {});

/// Landmark rows of the embedding (psi~_2 .. psi~_{k+1}).
EmbeddingMatrix landmark_embedding(const LandmarkModel& model);

/// O(M) Nystrom projection of each query onto the reduced manifold.
EmbeddingMatrix landmark_nystrom(const LandmarkModel& model, const PointSet& new_points);
/// One query; thread-safe on a shared model.
void landmark_nystrom_point(const LandmarkModel& model, std::span<const double> query,
                            std::span<double> out);

/// Full training embedding: landmark rows copied from the model, every other
/// point projected with landmark_nystrom. Rows follow the order of `ps`.
EmbeddingMatrix embed_non_landmarks(const LandmarkModel& model, const PointSet& ps, const LandmarkSet& ls);

}  // namespace ldmaps
