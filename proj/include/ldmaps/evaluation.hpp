#pragma once

#include "ldmaps/landmark_dmap.hpp"
#include "ldmaps/spectral.hpp"

#include <string>
#include <vector>

namespace ldmaps {

struct FoldPlan {
    int n_folds = 5;
    std::uint64_t seed = 0;
    std::vector<std::vector<Eigen::Index>> train;
    std::vector<std::vector<Eigen::Index>> test;
};

/// Random partition of {0..n-1} into n_folds test sets whose sizes differ by at
/// most one; each fold's training set is the complement (sorted).
FoldPlan make_folds(Eigen::Index n, int n_folds, std::uint64_t seed);

PointSet subset(const PointSet& ps, std::span<const Eigen::Index> rows);

/// zeta(i) = 100 sqrt(sum_l ((psi'_l(i) - psi_l(i)) / range_l)^2)
Eigen::VectorXd zeta_error(const EmbeddingMatrix& psi_true, const EmbeddingMatrix& psi_landmark,
                           const Eigen::VectorXd& ranges);
/// max - min of each column.
Eigen::VectorXd column_ranges(const EmbeddingMatrix& psi);
double rms_error(const Eigen::VectorXd& zeta);

/// Signs (+1/-1) that make each column of `target` best agree with `reference`.
Eigen::VectorXd alignment_signs(const EmbeddingMatrix& reference, const EmbeddingMatrix& target);
void apply_column_signs(EmbeddingMatrix& m, const Eigen::VectorXd& signs);

/// Euclidean distance between matching rows.
Eigen::VectorXd measure_sigma_expt(const EmbeddingMatrix& full, const EmbeddingMatrix& landmark);

/// Training embedding of the perturbed problem in which every point sits on its
/// landmark: row i is the landmark row of the cell holding point i.
EmbeddingMatrix collapsed_embedding(const LandmarkModel& model, const DistanceMatrix& d, const LandmarkSet& ls);

struct LandmarkPolicy {
    LandmarkMethod method = LandmarkMethod::kmedoids;
    Eigen::Index m = 0;
    std::uint64_t seed = 0;
    KMedoidsOptions kmedoids;
    double multiplier = 1.0;
};

struct CrossValidationConfig {
    KernelConfig kernel;
    int k = 2;
    std::vector<LandmarkPolicy> policies;
    int n_folds = 5;
    std::uint64_t seed = 0;
    /// Evaluate only these folds (empty = all).
    std::vector<int> folds;
    EigenOptions eigen;
};

struct ErrorSummary {
    int fold = 0;
    LandmarkMethod method = LandmarkMethod::kmedoids;
    std::uint64_t seed = 0;
    Eigen::Index M = 0;
    Eigen::Index n_train = 0;
    double M_over_N = 0.0;  // percent
    double epsilon = 0.0;
    double Z_train = 0.0;   // percent
    double Z_test = 0.0;    // percent
    Eigen::VectorXd zeta_train;
    Eigen::VectorXd zeta_test;
};

/// Per fold: full map on the training split, Nystrom of the test split, then
/// for each landmark policy the landmark map, landmark Nystrom of both splits
/// and the zeta/Z errors against the full embeddings.
std::vector<ErrorSummary> cross_validate(const PointSet& ps, const CrossValidationConfig& cfg);

/// Writes "fold,method,seed,M,M_over_N,epsilon,Z_train,Z_test".
void write_error_table(std::ostream& os, const std::vector<ErrorSummary>& rows);

/// Mean and sample standard deviation of one landmark configuration, with the
/// spread taken either across folds (seeds averaged within a fold) or across
/// seeds (folds averaged within a seed).
struct ErrorGroupSummary {
    std::string grouping;  // "fold" or "seed"
    LandmarkMethod method = LandmarkMethod::kmedoids;
    /// Requested M for k-medoids; 0 for methods that choose M themselves.
    Eigen::Index m_requested = 0;
    int groups = 0;
    double M_mean = 0.0, M_std = 0.0;
    double M_over_N_mean = 0.0, M_over_N_std = 0.0;
    double Z_train_mean = 0.0, Z_train_std = 0.0;
    double Z_test_mean = 0.0, Z_test_std = 0.0;
};

std::vector<ErrorGroupSummary> summarize_errors(const std::vector<ErrorSummary>& rows);

/// Writes "grouping,method,M_requested,groups,M_mean,M_std,M_over_N_mean,
/// M_over_N_std,Z_train_mean,Z_train_std,Z_test_mean,Z_test_std".
void write_summary_table(std::ostream& os, const std::vector<ErrorGroupSummary>& rows);

struct BenchmarkResult {
    Eigen::Index N = 0;
    Eigen::Index M = 0;
    double t_full_ms = 0.0;
    double t_landmark_ms = 0.0;
    double speedup = 0.0;
};

/// Median-of-repeats wall time for embedding `queries` through each model
/// (single-threaded, one warm-up pass, repeats of the two models interleaved).
/// Times include distance evaluation.
BenchmarkResult benchmark_speedup(const DiffusionModel& full, const LandmarkModel& landmark,
                                  const PointSet& queries, int repeats = 5);

/// Writes "N,M,t_full_ms,t_landmark_ms,S".
void write_benchmark_table(std::ostream& os, const std::vector<BenchmarkResult>& rows);

}  // namespace ldmaps
