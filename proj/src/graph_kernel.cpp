#include "ldmaps/graph_kernel.hpp"

#include "ldmaps/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ldmaps {

PackedSymmetric::PackedSymmetric(Eigen::Index n)
    : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2, 0.0) {}

void PackedSymmetric::multiply(const double* x, double* y) const {
    const auto n = static_cast<std::size_t>(n_);
    std::fill(y, y + n, 0.0);
    const double* row = data_.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        double acc = row[0] * xi;
        const std::size_t len = n - i;
        for (std::size_t t = 1; t < len; ++t) {
            acc += row[t] * x[i + t];
            y[i + t] += row[t] * xi;
        }
        y[i] += acc;
        row += len;
    }
}

Eigen::MatrixXd PackedSymmetric::to_dense() const {
    Eigen::MatrixXd m(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
    return m;
}

Eigen::MatrixXd MarkovSystem::markov_dense() const {
    Eigen::MatrixXd m = A.to_dense();
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= D(i);
    return m;
}

MarkovSystem build_kernel(const DistanceMatrix& d, double epsilon, double sparsity_cutoff) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ValidationError("epsilon must be positive and finite, got " + std::to_string(epsilon));
    const Eigen::Index n = d.size();
    MarkovSystem ms;
    ms.epsilon = epsilon;
    ms.A = PackedSymmetric(n);
    ms.D.setZero(n);
    const double scale = -1.0 / (2.0 * epsilon);
    auto& a = ms.A.raw();
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j, ++p) {
            const double dij = d.d(j, i);
            double v = std::exp(dij * dij * scale);
            if (v < sparsity_cutoff) v = 0.0;
            a[p] = v;
            ms.D(i) += v;
            if (j != i) ms.D(j) += v;
        }
    }
    return ms;
}

Eigen::MatrixXd graph_laplacian(const MarkovSystem& ms) {
    Eigen::MatrixXd l = -ms.markov_dense();
    l.diagonal().array() += 1.0;
    return l;
}

bool AdjacencyGraph::has_edge(Eigen::Index i, Eigen::Index j) const {
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t AdjacencyGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& nb : neighbors) twice += nb.size();
    return twice / 2;
}

AdjacencyGraph threshold_adjacency(const DistanceMatrix& d, double epsilon, double multiplier) {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (!(multiplier > 0.0)) throw ValidationError("threshold multiplier must be positive");
    AdjacencyGraph g;
    g.threshold = multiplier * std::sqrt(epsilon);
    const Eigen::Index n = d.size();
    g.neighbors.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& nb = g.neighbors[static_cast<std::size_t>(i)];
        const double* col = d.d.col(i).data();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && col[j] <= g.threshold) nb.push_back(j);
    }
    return g;
}

bool is_connected(const AdjacencyGraph& g) {
    const auto n = static_cast<std::size_t>(g.size());
    if (n == 0) return false;
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i)
        for (auto j : g.neighbors[i]) uf.unite(i, static_cast<std::size_t>(j));
    return uf.components() == 1;
}

double select_epsilon_min_connected(const DistanceMatrix& d) {
    const Eigen::Index n = d.size();
    if (n < 2) throw ValidationError("epsilon selection needs at least 2 points");
    // Dense Prim: the longest MST edge is the bottleneck of connectivity.
    std::vector<double> key(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
    Eigen::Index current = 0;
    in_tree[0] = 1;
    double longest = 0.0;
    for (Eigen::Index step = 1; step < n; ++step) {
        const double* col = d.d.col(current).data();
        Eigen::Index next = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            if (in_tree[uj]) continue;
            key[uj] = std::min(key[uj], col[j]);
            if (key[uj] < best) {
                best = key[uj];
                next = j;
            }
        }
        longest = std::max(longest, best);
        in_tree[static_cast<std::size_t>(next)] = 1;
        current = next;
    }
    return longest * longest;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
}

}  // namespace ldmaps
