#pragma once

#include "ldmaps/metrics.hpp"

#include <cstdint>
#include <vector>

namespace ldmaps {

/// Dense symmetric matrix holding only the upper triangle (diagonal included),
/// packed row by row. Halves the footprint of N x N kernels.
class PackedSymmetric {
public:
    PackedSymmetric() = default;
    explicit PackedSymmetric(Eigen::Index n);

    Eigen::Index size() const { return n_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return data_[index(i, j)]; }
    double& operator()(Eigen::Index i, Eigen::Index j) { return data_[index(i, j)]; }

    /// y = S x
    void multiply(const double* x, double* y) const;
    Eigen::MatrixXd to_dense() const;

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    std::size_t index(Eigen::Index i, Eigen::Index j) const {
        if (i > j) std::swap(i, j);
        const auto ui = static_cast<std::size_t>(i);
        return ui * static_cast<std::size_t>(n_) - ui * (ui - 1) / 2 + static_cast<std::size_t>(j - i);
    }

private:
    Eigen::Index n_ = 0;
    std::vector<double> data_;
};

struct KernelConfig {
    enum class Mode { fixed, auto_min_connected };
    double epsilon = 1.0;
    Mode mode = Mode::fixed;
    /// Connectivity is tested at threshold_multiplier * sqrt(epsilon).
    double threshold_multiplier = 1.0;
    /// Kernel entries below this are stored as zero. 0 keeps the dense kernel.
    double sparsity_cutoff = 0.0;
};

/// Gaussian kernel A, its row sums D and the Markov matrix M = D^-1 A.
/// M is not materialised; markov(i, j) evaluates A_ij / D_i.
struct MarkovSystem {
    PackedSymmetric A;
    Eigen::VectorXd D;
    double epsilon = 0.0;

    Eigen::Index size() const { return D.size(); }
    double markov(Eigen::Index i, Eigen::Index j) const { return A(i, j) / D(i); }
    Eigen::MatrixXd kernel_dense() const { return A.to_dense(); }
    Eigen::MatrixXd markov_dense() const;
};

/// A_ij = exp(-d_ij^2 / (2 eps)), D_i = sum_j A_ij.
MarkovSystem build_kernel(const DistanceMatrix& d, double epsilon, double sparsity_cutoff = 0.0);

/// L = I - M.
Eigen::MatrixXd graph_laplacian(const MarkovSystem& ms);

/// Hard-thresholded neighbourhood graph, stored as sorted adjacency lists.
struct AdjacencyGraph {
    std::vector<std::vector<Eigen::Index>> neighbors;
    double threshold = 0.0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(neighbors.size()); }
    bool has_edge(Eigen::Index i, Eigen::Index j) const;
    std::size_t edge_count() const;
};

/// G_ij = (d_ij <= multiplier * sqrt(eps)) for i != j.
AdjacencyGraph threshold_adjacency(const DistanceMatrix& d, double epsilon, double multiplier = 1.0);

bool is_connected(const AdjacencyGraph& g);

/// Squared longest edge of a minimum spanning tree of d: the least eps at which
/// threshold_adjacency(d, eps) is connected.
double select_epsilon_min_connected(const DistanceMatrix& d);

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::size_t find(std::size_t x);
    bool unite(std::size_t a, std::size_t b);
    std::size_t components() const { return components_; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t components_;
};

}  // namespace ldmaps
