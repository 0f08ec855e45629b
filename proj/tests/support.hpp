#pragma once

#include "ldmaps/dataset_io.hpp"
#include "ldmaps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace ldmaps::testing {

inline PointSet random_points(Eigen::Index n, Eigen::Index dim, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, scale);
    PointSet ps;
    ps.points.resize(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < dim; ++c) ps.points(i, c) = u(rng);
    return ps;
}

inline PointSet line_points(const std::vector<double>& xs) {
    PointSet ps;
    ps.points.resize(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) ps.points(static_cast<Eigen::Index>(i), 0) = xs[i];
    return ps;
}

inline PointSet small_roll(Eigen::Index n, std::uint64_t seed, double noise = 0.0) {
    SwissRollSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.noise = noise;
    return generate_swiss_roll(spec).points;
}

// Flip columns of `m` to agree in sign with `ref`.
template <class A, class B>
void align_to(const A& ref, B& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        if (ref.col(c).dot(m.col(c)) < 0) m.col(c) = -m.col(c);
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd x = a.array() - a.mean();
    const Eigen::VectorXd y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

inline Eigen::VectorXd ranks(const Eigen::VectorXd& v) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v(a) < v(b); });
    Eigen::VectorXd r(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) r(order[i]) = static_cast<double>(i);
    return r;
}

inline double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return pearson(ranks(a), ranks(b)); }

// Connected components by breadth-first search over an explicit boolean matrix.
inline int bfs_components(const std::vector<std::vector<bool>>& adj) {
    const std::size_t n = adj.size();
    std::vector<bool> seen(n, false);
    int comps = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++comps;
        std::vector<std::size_t> queue{s};
        seen[s] = true;
        for (std::size_t h = 0; h < queue.size(); ++h)
            for (std::size_t j = 0; j < n; ++j)
                if (adj[queue[h]][j] && !seen[j]) {
                    seen[j] = true;
                    queue.push_back(j);
                }
    }
    return comps;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ldmaps_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace ldmaps::testing
