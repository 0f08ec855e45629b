#include "ldmaps/landmark_dmap.hpp"

#include "ldmaps/error.hpp"
#include "ldmaps/parallel.hpp"
#include "ldmaps/spectral.hpp"

#include <cmath>
#include <numeric>

namespace ldmaps {

LandmarkModel fit_weighted_map(const PointSet& landmark_points, const Eigen::VectorXd& multiplicities, double epsilon,
                               int k, const EigenOptions& opts) {
    const Eigen::Index m = landmark_points.size();
    if (multiplicities.size() != m) throw ValidationError("one multiplicity per landmark is required");
    if ((multiplicities.array() < 1.0).any()) throw ValidationError("multiplicities must be >= 1");
    if (k < 1 || k + 1 > m)
        throw ValidationError("k must satisfy 1 <= k and k + 1 <= M (k=" + std::to_string(k) +
                              ", M=" + std::to_string(m) + ")");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive and finite");

    MarkovSystem kernel = build_kernel(pairwise_distances(landmark_points), epsilon);

    LandmarkModel model;
    model.epsilon = epsilon;
    model.k = k;
    model.landmark_points = landmark_points.points;
    model.multiplicities = multiplicities;
    model.metric = landmark_points.metric;
    model.atoms_per_frame = landmark_points.atoms_per_frame;

    // D~_i = sum_j A~_ij c_j, accumulated over the packed upper triangle.
    const Eigen::VectorXd& c = multiplicities;
    model.Dtilde.setZero(m);
    auto& a = kernel.A.raw();
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j, ++p) {
            model.Dtilde(i) += a[p] * c(j);
            if (j != i) model.Dtilde(j) += a[p] * c(i);
        }

    // Symmetric conjugate of M~ C~: S = C^1/2 D^-1/2 A D^-1/2 C^1/2.
    const Eigen::VectorXd g = (c.array() / model.Dtilde.array()).sqrt();
    p = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j, ++p) a[p] *= g(i) * g(j);

    SymmetricEigenpairs sym = top_eigenpairs(kernel.A, k + 1, opts);
    model.eigenvalues = sym.values;
    model.eigenvectors = (model.Dtilde.array() * c.array()).rsqrt().matrix().asDiagonal() * sym.vectors;
    for (Eigen::Index l = 0; l <= k; ++l) {
        const double norm2 = (c.array() * model.eigenvectors.col(l).array().square()).sum();
        model.eigenvectors.col(l) /= std::sqrt(norm2);
    }
    apply_sign_convention(model.eigenvectors);

    if (model.eigenvalues(1) >= 1.0 - 1e-12)
        throw NumericalError("landmark kernel is numerically disconnected (lambda~_2 = " +
                             std::to_string(model.eigenvalues(1)) + "); increase epsilon or the landmark count");
    check_projectable(model.eigenvalues);
    return model;
}

LandmarkModel fit_landmark_map(const PointSet& ps, const LandmarkSet& ls, double epsilon, int k,
                               const EigenOptions& opts) {
    ps.validate();
    if (ls.indices.size() != ls.multiplicities.size())
        throw ValidationError("landmark set has mismatched index and multiplicity lists");
    const Eigen::Index total = std::accumulate(ls.multiplicities.begin(), ls.multiplicities.end(), Eigen::Index{0});
    if (total != ps.size())
        throw ValidationError("multiplicities sum to " + std::to_string(total) + " but the data set has " +
                              std::to_string(ps.size()) + " points");
    PointSet z;
    z.metric = ps.metric;
    z.atoms_per_frame = ps.atoms_per_frame;
    z.points.resize(ls.size(), ps.dim());
    Eigen::VectorXd c(ls.size());
    for (Eigen::Index i = 0; i < ls.size(); ++i) {
        const auto idx = ls.indices[static_cast<std::size_t>(i)];
        if (idx < 0 || idx >= ps.size()) throw ValidationError("landmark index out of range");
        z.points.row(i) = ps.points.row(idx);
        c(i) = static_cast<double>(ls.multiplicities[static_cast<std::size_t>(i)]);
    }
    return fit_weighted_map(z, c, epsilon, k, opts);
}

EmbeddingMatrix landmark_embedding(const LandmarkModel& model) { return model.eigenvectors.rightCols(model.k); }

void landmark_nystrom_point(const LandmarkModel& model, std::span<const double> query, std::span<double> out) {
    const Eigen::Index m = model.size();
    if (out.size() != static_cast<std::size_t>(model.k)) throw ValidationError("output row has the wrong width");
    check_projectable(model.eigenvalues);
    Eigen::VectorXd w(m);
    distances_to(query, model.landmark_points, model.metric, std::span<double>(w.data(), static_cast<std::size_t>(m)));
    const double dmin = w.minCoeff();
    const double scale = -1.0 / (2.0 * model.epsilon);
    for (Eigen::Index j = 0; j < m; ++j) w(j) = std::exp((w(j) * w(j) - dmin * dmin) * scale) * model.multiplicities(j);
    // w now holds A~_new,j c_j; dividing by its sum gives M~_new,j c_j.
    w /= w.sum();
    for (int l = 1; l <= model.k; ++l)
        out[static_cast<std::size_t>(l - 1)] = w.dot(model.eigenvectors.col(l)) / model.eigenvalues(l);
}

EmbeddingMatrix landmark_nystrom(const LandmarkModel& model, const PointSet& new_points) {
    new_points.validate_queries();
    if (new_points.metric != model.metric) throw ValidationError("query metric does not match the model metric");
    if (new_points.dim() != model.landmark_points.cols())
        throw ValidationError("query dimension " + std::to_string(new_points.dim()) +
                              " does not match model dimension " + std::to_string(model.landmark_points.cols()));
    check_projectable(model.eigenvalues);
    EmbeddingMatrix out(new_points.size(), model.k);
    parallel_for(static_cast<std::size_t>(new_points.size()), [&](std::size_t begin, std::size_t end) {
        for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end); ++i)
            landmark_nystrom_point(model,
                                   std::span<const double>(new_points.points.row(i).data(),
                                                           static_cast<std::size_t>(new_points.dim())),
                                   std::span<double>(out.row(i).data(), static_cast<std::size_t>(model.k)));
    });
    return out;
}

EmbeddingMatrix embed_non_landmarks(const LandmarkModel& model, const PointSet& ps, const LandmarkSet& ls) {
    if (ls.size() != model.size()) throw ValidationError("landmark set does not match the model");
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(ps.size()), -1);
    for (Eigen::Index p = 0; p < ls.size(); ++p) {
        const auto idx = ls.indices[static_cast<std::size_t>(p)];
        if (idx < 0 || idx >= ps.size()) throw ValidationError("landmark index out of range");
        slot[static_cast<std::size_t>(idx)] = p;
    }
    const EmbeddingMatrix own = landmark_embedding(model);

    std::vector<Eigen::Index> others;
    for (Eigen::Index i = 0; i < ps.size(); ++i)
        if (slot[static_cast<std::size_t>(i)] < 0) others.push_back(i);
    PointSet queries;
    queries.metric = ps.metric;
    queries.atoms_per_frame = ps.atoms_per_frame;
    queries.points.resize(static_cast<Eigen::Index>(others.size()), ps.dim());
    for (std::size_t q = 0; q < others.size(); ++q) queries.points.row(static_cast<Eigen::Index>(q)) = ps.points.row(others[q]);
    const EmbeddingMatrix projected = others.empty() ? EmbeddingMatrix(0, model.k) : landmark_nystrom(model, queries);

    EmbeddingMatrix out(ps.size(), model.k);
    for (Eigen::Index i = 0; i < ps.size(); ++i) {
        const auto p = slot[static_cast<std::size_t>(i)];
        if (p >= 0) out.row(i) = own.row(p);
    }
    for (std::size_t q = 0; q < others.size(); ++q) out.row(others[q]) = projected.row(static_cast<Eigen::Index>(q));
    return out;
}

}  // namespace ldmaps
