#include "ldmaps/spectral.hpp"

#include "ldmaps/error.hpp"
#include "ldmaps/parallel.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ldmaps {

MarkovEigenpairs eigensolve_markov(MarkovSystem&& ms, Eigen::Index n_pairs, const EigenOptions& opts) {
    const Eigen::Index n = ms.size();
    if (n_pairs < 1 || n_pairs > n)
        throw ValidationError("n_pairs must lie in [1, " + std::to_string(n) + "], got " + std::to_string(n_pairs));
    if ((ms.D.array() <= 0.0).any()) throw NumericalError("kernel row sum is not positive");

    const Eigen::VectorXd dinv = ms.D.array().rsqrt();
    PackedSymmetric s = std::move(ms.A);
    auto& raw = s.raw();
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j, ++p) raw[p] *= dinv(i) * dinv(j);

    SymmetricEigenpairs sym = top_eigenpairs(s, n_pairs, opts);

    MarkovEigenpairs out;
    out.values = sym.values;
    out.vectors = dinv.asDiagonal() * sym.vectors;
    for (Eigen::Index c = 0; c < n_pairs; ++c) out.vectors.col(c).normalize();
    apply_sign_convention(out.vectors);
    return out;
}

MarkovEigenpairs eigensolve_markov(const MarkovSystem& ms, Eigen::Index n_pairs, const EigenOptions& opts) {
    MarkovSystem copy = ms;
    return eigensolve_markov(std::move(copy), n_pairs, opts);
}

double resolve_epsilon(const DistanceMatrix& d, const KernelConfig& cfg) {
    if (cfg.mode == KernelConfig::Mode::auto_min_connected) {
        const double eps = select_epsilon_min_connected(d);
        if (!(eps > 0.0))
            throw ValidationError("automatic epsilon is zero: the data consist of identical points");
        return eps;
    }
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw ValidationError("epsilon must be positive and finite, got " + std::to_string(cfg.epsilon));
    if (!is_connected(threshold_adjacency(d, cfg.epsilon, cfg.threshold_multiplier)))
        throw ValidationError("neighbourhood graph at epsilon=" + std::to_string(cfg.epsilon) +
                              " is disconnected; increase epsilon or use automatic selection (--epsilon auto)");
    return cfg.epsilon;
}

void check_projectable(const Eigen::VectorXd& eigenvalues) {
    for (Eigen::Index l = 0; l < eigenvalues.size(); ++l)
        if (eigenvalues(l) < 1e-12)
            throw NumericalError("eigenvalue lambda_" + std::to_string(l + 1) + " = " + std::to_string(eigenvalues(l)) +
                                 " is below 1e-12; the mode cannot be projected (reduce k)");
}

DiffusionModel fit_diffusion_map(const PointSet& ps, const DistanceMatrix& d, const KernelConfig& cfg, int k,
                                 const EigenOptions& opts) {
    ps.validate();
    if (d.size() != ps.size()) throw ValidationError("distance matrix does not match the point set");
    if (k < 1 || k + 1 > ps.size())
        throw ValidationError("k must satisfy 1 <= k and k + 1 <= N (k=" + std::to_string(k) +
                              ", N=" + std::to_string(ps.size()) + ")");
    DiffusionModel model;
    model.epsilon = resolve_epsilon(d, cfg);
    model.k = k;
    model.metric = ps.metric;
    model.atoms_per_frame = ps.atoms_per_frame;
    model.training_points = ps.points;

    MarkovSystem ms = build_kernel(d, model.epsilon, cfg.sparsity_cutoff);
    model.D = ms.D;
    MarkovEigenpairs eig = eigensolve_markov(std::move(ms), k + 1, opts);
    model.eigenvalues = std::move(eig.values);
    model.eigenvectors = std::move(eig.vectors);
    check_projectable(model.eigenvalues);
    return model;
}

DiffusionModel fit_diffusion_map(const PointSet& ps, const KernelConfig& cfg, int k, const EigenOptions& opts) {
    const DistanceMatrix d = pairwise_distances(ps);
    return fit_diffusion_map(ps, d, cfg, k, opts);
}

EmbeddingMatrix embed_training(const DiffusionModel& model) {
    return model.eigenvectors.rightCols(model.k);
}

int spectral_gap(std::span<const double> eigenvalues) {
    if (eigenvalues.size() < 3) throw ValidationError("spectral_gap needs at least 3 eigenvalues");
    // 0-based position p holds lambda_{p+1}; drops are considered from lambda_2 on.
    std::size_t best = 1;
    double best_drop = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 1; p + 1 < eigenvalues.size(); ++p) {
        const double drop = eigenvalues[p] - eigenvalues[p + 1];
        if (drop > best_drop) {
            best_drop = drop;
            best = p;
        }
    }
    return static_cast<int>(best);
}

namespace {

void check_queries(const PointSet& q, Metric metric, Eigen::Index dim) {
    q.validate_queries();
    if (q.metric != metric) throw ValidationError("query metric does not match the model metric");
    if (q.dim() != dim)
        throw ValidationError("query dimension " + std::to_string(q.dim()) + " does not match model dimension " +
                              std::to_string(dim));
}

}  // namespace

void nystrom_extend_point(const DiffusionModel& model, std::span<const double> query, std::span<double> out) {
    const Eigen::Index n = model.size();
    if (out.size() != static_cast<std::size_t>(model.k)) throw ValidationError("output row has the wrong width");
    check_projectable(model.eigenvalues);
    Eigen::VectorXd w(n);
    distances_to(query, model.training_points, model.metric, std::span<double>(w.data(), static_cast<std::size_t>(n)));
    // Shift the exponent by the nearest distance so far queries do not underflow;
    // the shift cancels in the row normalisation.
    const double dmin = w.minCoeff();
    const double scale = -1.0 / (2.0 * model.epsilon);
    for (Eigen::Index j = 0; j < n; ++j) w(j) = std::exp((w(j) * w(j) - dmin * dmin) * scale);
    w /= w.sum();
    for (int l = 1; l <= model.k; ++l)
        out[static_cast<std::size_t>(l - 1)] = w.dot(model.eigenvectors.col(l)) / model.eigenvalues(l);
}

EmbeddingMatrix nystrom_extend(const DiffusionModel& model, const PointSet& new_points) {
    check_queries(new_points, model.metric, model.training_points.cols());
    check_projectable(model.eigenvalues);
    EmbeddingMatrix out(new_points.size(), model.k);
    parallel_for(static_cast<std::size_t>(new_points.size()), [&](std::size_t begin, std::size_t end) {
        for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end); ++i)
            nystrom_extend_point(model,
                                 std::span<const double>(new_points.points.row(i).data(),
                                                         static_cast<std::size_t>(new_points.dim())),
                                 std::span<double>(out.row(i).data(), static_cast<std::size_t>(model.k)));
    });
    return out;
}

}  // namespace ldmaps
