#include "ldmaps/landmarks.hpp"

#include "ldmaps/dataset_io.hpp"
#include "ldmaps/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace ldmaps {

std::string_view to_string(LandmarkMethod m) {
    switch (m) {
        case LandmarkMethod::pst: return "pst";
        case LandmarkMethod::kmedoids: return "kmedoids";
        case LandmarkMethod::all: return "all";
    }
    return "unknown";
}

LandmarkMethod parse_landmark_method(std::string_view s) {
    if (s == "pst") return LandmarkMethod::pst;
    if (s == "kmedoids" || s == "k-medoids") return LandmarkMethod::kmedoids;
    if (s == "all") return LandmarkMethod::all;
    throw ValidationError("unknown landmark method '" + std::string(s) + "'");
}

VoronoiAssignment voronoi_assign(const DistanceMatrix& d, std::span<const Eigen::Index> landmarks) {
    const Eigen::Index n = d.size();
    if (landmarks.empty()) throw ValidationError("landmark set is empty");
    std::vector<std::size_t> order(landmarks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (auto idx : landmarks)
        if (idx < 0 || idx >= n) throw ValidationError("landmark index " + std::to_string(idx) + " out of range");
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return landmarks[a] < landmarks[b]; });

    VoronoiAssignment out;
    out.assignment.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (auto pos : order) {
        const double* col = d.d.col(landmarks[pos]).data();
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            if (col[j] < best[uj]) {
                best[uj] = col[j];
                out.assignment[uj] = static_cast<Eigen::Index>(pos);
            }
        }
    }
    for (std::size_t pos = 0; pos < landmarks.size(); ++pos)
        out.assignment[static_cast<std::size_t>(landmarks[pos])] = static_cast<Eigen::Index>(pos);

    out.multiplicities.assign(landmarks.size(), 0);
    for (auto a : out.assignment) ++out.multiplicities[static_cast<std::size_t>(a)];
    return out;
}

LandmarkSet make_landmark_set(const DistanceMatrix& d, std::vector<Eigen::Index> indices, LandmarkMethod method,
                              std::uint64_t seed) {
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw ValidationError("landmark indices contain duplicates");
    LandmarkSet ls;
    ls.multiplicities = voronoi_assign(d, indices).multiplicities;
    ls.indices = std::move(indices);
    ls.method = method;
    ls.seed = seed;
    return ls;
}

LandmarkSet all_points(Eigen::Index n) {
    LandmarkSet ls;
    ls.indices.resize(static_cast<std::size_t>(n));
    std::iota(ls.indices.begin(), ls.indices.end(), Eigen::Index{0});
    ls.multiplicities.assign(static_cast<std::size_t>(n), 1);
    ls.method = LandmarkMethod::all;
    return ls;
}

SpanningTree random_spanning_tree(const AdjacencyGraph& g, std::uint64_t seed) {
    const Eigen::Index n = g.size();
    if (n < 1) throw ValidationError("graph is empty");
    std::mt19937_64 rng(seed);
    SpanningTree tree;
    tree.root = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);

    std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
    // Candidate edges (tree node, other node). An edge whose far end has joined
    // the tree is discarded when drawn, so draws stay uniform over the live frontier.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> frontier;
    auto absorb = [&](Eigen::Index u) {
        in_tree[static_cast<std::size_t>(u)] = 1;
        for (auto v : g.neighbors[static_cast<std::size_t>(u)])
            if (!in_tree[static_cast<std::size_t>(v)]) frontier.emplace_back(u, v);
    };
    absorb(tree.root);
    tree.edges.reserve(static_cast<std::size_t>(n - 1));
    while (static_cast<Eigen::Index>(tree.edges.size()) < n - 1) {
        if (frontier.empty())
            throw ValidationError("neighbourhood graph is disconnected; no spanning tree exists");
        const auto pick = std::uniform_int_distribution<std::size_t>(0, frontier.size() - 1)(rng);
        const auto edge = frontier[pick];
        frontier[pick] = frontier.back();
        frontier.pop_back();
        if (in_tree[static_cast<std::size_t>(edge.second)]) continue;
        tree.edges.push_back(edge);
        absorb(edge.second);
    }
    return tree;
}

LandmarkSet select_pst(const DistanceMatrix& d, double epsilon, std::uint64_t seed, double multiplier) {
    const AdjacencyGraph g = threshold_adjacency(d, epsilon, multiplier);
    if (!is_connected(g))
        throw ValidationError("PST requires a connected sqrt(epsilon) neighbourhood graph: the covering and "
                              "connectivity conditions cannot be met at epsilon=" + std::to_string(epsilon));
    const SpanningTree tree = random_spanning_tree(g, seed);
    std::vector<int> degree(static_cast<std::size_t>(d.size()), 0);
    for (const auto& [u, v] : tree.edges) {
        ++degree[static_cast<std::size_t>(u)];
        ++degree[static_cast<std::size_t>(v)];
    }
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (degree[static_cast<std::size_t>(i)] > 1) kept.push_back(i);
    if (kept.empty())
        throw ValidationError("pruned spanning tree is empty: every tree node is a leaf (N=" +
                              std::to_string(d.size()) + ")");
    return make_landmark_set(d, std::move(kept), LandmarkMethod::pst, seed);
}

namespace {

std::vector<Eigen::Index> initial_medoids(const DistanceMatrix& d, Eigen::Index m, std::mt19937_64& rng,
                                          KMedoidsOptions::Init init) {
    const Eigen::Index n = d.size();
    std::vector<Eigen::Index> chosen;
    if (init == KMedoidsOptions::Init::uniform) {
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), Eigen::Index{0});
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto j = std::uniform_int_distribution<Eigen::Index>(i, n - 1)(rng);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        chosen.assign(pool.begin(), pool.begin() + m);
    } else {
        std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
        std::vector<char> taken(static_cast<std::size_t>(n), 0);
        Eigen::Index next = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        for (Eigen::Index c = 0; c < m; ++c) {
            chosen.push_back(next);
            taken[static_cast<std::size_t>(next)] = 1;
            double total = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                auto& nj = nearest[static_cast<std::size_t>(j)];
                nj = std::min(nj, d(next, j));
                if (!taken[static_cast<std::size_t>(j)]) total += nj * nj;
            }
            if (c + 1 == m) break;
            if (total <= 0.0) {
                // Remaining points coincide with medoids; take the lowest untaken index.
                next = static_cast<Eigen::Index>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
                continue;
            }
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            next = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (taken[static_cast<std::size_t>(j)]) continue;
                const double nj = nearest[static_cast<std::size_t>(j)];
                next = j;
                r -= nj * nj;
                if (r < 0.0) break;
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

KMedoidsTrace run_kmedoids(const DistanceMatrix& d, Eigen::Index m, std::uint64_t seed, const KMedoidsOptions& opts) {
    const Eigen::Index n = d.size();
    if (m <= 0) throw ValidationError("number of medoids must be positive");
    if (m > n) throw ValidationError("number of medoids " + std::to_string(m) + " exceeds N=" + std::to_string(n));
    if (opts.max_iter < 1) throw ValidationError("max_iter must be at least 1");

    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> medoids = initial_medoids(d, m, rng, opts.init);

    KMedoidsTrace trace;
    std::vector<std::vector<Eigen::Index>> clusters(static_cast<std::size_t>(m));
    for (int it = 0; it < opts.max_iter; ++it) {
        const VoronoiAssignment va = voronoi_assign(d, medoids);
        for (auto& c : clusters) c.clear();
        double objective = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto pos = va.assignment[static_cast<std::size_t>(j)];
            clusters[static_cast<std::size_t>(pos)].push_back(j);
            objective += d(medoids[static_cast<std::size_t>(pos)], j);
        }
        trace.objective.push_back(objective);

        std::vector<Eigen::Index> updated(static_cast<std::size_t>(m));
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const auto& members = clusters[c];
            Eigen::Index arg = medoids[c];
            double best = std::numeric_limits<double>::infinity();
            for (auto cand : members) {
                const double* col = d.d.col(cand).data();
                double cost = 0.0;
                for (auto x : members) cost += col[x];
                if (cost < best) {
                    best = cost;
                    arg = cand;
                }
            }
            updated[c] = arg;
        }
        std::sort(updated.begin(), updated.end());
        trace.iterations = it + 1;
        const bool unchanged = updated == medoids;
        medoids = std::move(updated);
        if (unchanged) break;
    }

    trace.landmarks = make_landmark_set(d, medoids, LandmarkMethod::kmedoids, seed);
    return trace;
}

LandmarkSet select_kmedoids(const DistanceMatrix& d, Eigen::Index m, std::uint64_t seed, const KMedoidsOptions& opts) {
    return run_kmedoids(d, m, seed, opts).landmarks;
}

CoverReport verify_cover_connect(const DistanceMatrix& d, const LandmarkSet& ls, double epsilon, double multiplier) {
    if (ls.indices.empty()) return {};
    const double threshold = multiplier * std::sqrt(epsilon);
    const Eigen::Index n = d.size();
    std::vector<char> covered(static_cast<std::size_t>(n), 0);
    for (auto z : ls.indices) {
        const double* col = d.d.col(z).data();
        for (Eigen::Index j = 0; j < n; ++j)
            if (col[j] <= threshold) covered[static_cast<std::size_t>(j)] = 1;
    }
    CoverReport report;
    report.cover_fraction =
        static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / static_cast<double>(n);

    UnionFind uf(ls.indices.size());
    for (std::size_t a = 0; a < ls.indices.size(); ++a)
        for (std::size_t b = a + 1; b < ls.indices.size(); ++b)
            if (d(ls.indices[a], ls.indices[b]) <= threshold) uf.unite(a, b);
    report.connected = uf.components() == 1;
    return report;
}

void save_landmarks(const LandmarkSet& ls, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (std::size_t i = 0; i < ls.indices.size(); ++i) out << ls.indices[i] << ',' << ls.multiplicities[i] << '\n';
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    LandmarkSet ls;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto row = parse_csv_row(line, line_no);
        if (row.size() != 2) throw ParseError("expected 'index,multiplicity'", line_no);
        if (row[0] < 0 || row[1] < 1 || row[0] != std::floor(row[0]) || row[1] != std::floor(row[1]))
            throw ParseError("index must be a non-negative integer and multiplicity a positive integer", line_no);
        ls.indices.push_back(static_cast<Eigen::Index>(row[0]));
        ls.multiplicities.push_back(static_cast<Eigen::Index>(row[1]));
    }
    if (!std::is_sorted(ls.indices.begin(), ls.indices.end()) ||
        std::adjacent_find(ls.indices.begin(), ls.indices.end()) != ls.indices.end())
        throw ValidationError("landmark indices must be strictly ascending");
    return ls;
}

}  // namespace ldmaps
