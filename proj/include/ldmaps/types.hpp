#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace ldmaps {

/// Row-major dense storage; one point (or one embedded point) per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Metric { euclidean, aligned_rmsd };

std::string_view to_string(Metric m);
/// Accepts "euclidean", "aligned_rmsd" and the short form "rmsd".
Metric parse_metric(std::string_view s);

/// N points in R^K together with the metric used to compare them.
struct PointSet {
    RowMatrix points;
    Metric metric = Metric::euclidean;
    /// Set iff metric == aligned_rmsd; then K == 3 * atoms_per_frame.
    std::optional<int> atoms_per_frame;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    /// Throws ValidationError unless N >= 2, K >= 1, all entries finite and
    /// the metric/atom layout is consistent.
    void validate() const;
    /// Same checks except the lower bound on N (query batches may hold one point).
    void validate_queries() const;
};

/// Per-point coordinates in the leading non-trivial eigenvector space.
/// Column c holds psi_{c+2}.
using EmbeddingMatrix = RowMatrix;

}  // namespace ldmaps
