#pragma once

#include "ldmaps/graph_kernel.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace ldmaps {

enum class LandmarkMethod { pst, kmedoids, all };

std::string_view to_string(LandmarkMethod m);
LandmarkMethod parse_landmark_method(std::string_view s);

/// Landmark indices into the training set, sorted ascending, with the size of
/// each landmark's Voronoi cell.
struct LandmarkSet {
    std::vector<Eigen::Index> indices;
    std::vector<Eigen::Index> multiplicities;
    LandmarkMethod method = LandmarkMethod::all;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

struct VoronoiAssignment {
    /// For each point, the position (0..M-1) of its landmark in the index list.
    std::vector<Eigen::Index> assignment;
    std::vector<Eigen::Index> multiplicities;
};

/// Nearest-landmark assignment. Ties go to the lowest landmark index and every
/// landmark is assigned to itself.
VoronoiAssignment voronoi_assign(const DistanceMatrix& d, std::span<const Eigen::Index> landmarks);

struct SpanningTree {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
    Eigen::Index root = 0;
};

/// Prim's construction on an unweighted graph: at each step a uniformly random
/// edge between the tree and the remaining nodes is added.
SpanningTree random_spanning_tree(const AdjacencyGraph& g, std::uint64_t seed);

/// Pruned spanning tree landmarks: every non-leaf node of a random spanning
/// tree of the sqrt(eps)-thresholded graph.
LandmarkSet select_pst(const DistanceMatrix& d, double epsilon, std::uint64_t seed,
                       double multiplier = 1.0);

struct KMedoidsOptions {
    enum class Init { uniform, kmeanspp };
    int max_iter = 300;
    Init init = Init::uniform;
};

struct KMedoidsTrace {
    LandmarkSet landmarks;
    int iterations = 0;
    /// Sum of within-cluster distances after each assignment step.
    std::vector<double> objective;
};

KMedoidsTrace run_kmedoids(const DistanceMatrix& d, Eigen::Index m, std::uint64_t seed,
                           const KMedoidsOptions& opts = {});
LandmarkSet select_kmedoids(const DistanceMatrix& d, Eigen::Index m, std::uint64_t seed,
                            const KMedoidsOptions& opts = {});

/// Every point is its own landmark with multiplicity one.
LandmarkSet all_points(Eigen::Index n);

/// Builds a LandmarkSet (multiplicities from Voronoi cells) from raw indices.
LandmarkSet make_landmark_set(const DistanceMatrix& d, std::vector<Eigen::Index> indices,
                              LandmarkMethod method, std::uint64_t seed = 0);

struct CoverReport {
    double cover_fraction = 0.0;
    bool connected = false;
};

/// Fraction of points within multiplier*sqrt(eps) of some landmark, and
/// connectivity of the landmark graph at the same threshold.
CoverReport verify_cover_connect(const DistanceMatrix& d, const LandmarkSet& ls, double epsilon,
                                 double multiplier = 1.0);

/// CSV rows "index,multiplicity".
void save_landmarks(const LandmarkSet& ls, const std::filesystem::path& path);
LandmarkSet load_landmarks(const std::filesystem::path& path);

}  // namespace ldmaps
