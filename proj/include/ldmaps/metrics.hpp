#pragma once

#include "ldmaps/types.hpp"

#include <filesystem>
#include <span>

namespace ldmaps {

/// Symmetric N x N matrix of pairwise distances with zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd d;
    Metric metric = Metric::euclidean;

    Eigen::Index size() const { return d.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return d(i, j); }
};

/// Distance between two points of equal dimension under `metric`.
///
/// aligned_rmsd treats each point as a flattened frame of K/3 atoms, removes
/// both centroids, superimposes `a` onto `b` with the optimal proper rotation
/// (Kabsch) and returns the root-mean-square deviation over atoms. All atoms
/// carry unit weight.
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Optimal proper rotation R minimising sum_i |R a_i - b_i|^2 for two centred
/// 3 x n coordinate blocks.
Eigen::Matrix3d kabsch_rotation(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b);

/// Full symmetric distance matrix. Rows are split into blocks across worker
/// threads; the result does not depend on the partitioning.
DistanceMatrix pairwise_distances(const PointSet& ps);

/// Distances from one query to every row of `reference`, written to `out`.
void distances_to(std::span<const double> query, const RowMatrix& reference, Metric metric,
                  std::span<double> out);

/// Binary cache: "LDMD", u64 N, then the strict upper triangle (i < j)
/// row-major as little-endian f64.
void save_distance_cache(const DistanceMatrix& dm, const std::filesystem::path& path);
DistanceMatrix load_distance_cache(const std::filesystem::path& path, Metric metric);

}  // namespace ldmaps
