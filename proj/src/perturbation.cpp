#include "ldmaps/perturbation.hpp"

#include "ldmaps/error.hpp"

#include <cmath>
#include <fstream>

namespace ldmaps {

Eigen::MatrixXd distance_perturbations(const DistanceMatrix& d, const LandmarkSet& ls) {
    const VoronoiAssignment va = voronoi_assign(d, ls.indices);
    const Eigen::Index n = d.size();
    std::vector<Eigen::Index> owner(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        owner[static_cast<std::size_t>(i)] = ls.indices[static_cast<std::size_t>(va.assignment[static_cast<std::size_t>(i)])];

    Eigen::MatrixXd delta(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double* shifted = d.d.col(owner[static_cast<std::size_t>(j)]).data();
        for (Eigen::Index i = 0; i < n; ++i) delta(i, j) = shifted[owner[static_cast<std::size_t>(i)]] - d.d(i, j);
    }
    return delta;
}

Eigen::MatrixXd distance_perturbations(const PointSet& ps, const LandmarkSet& ls) {
    return distance_perturbations(pairwise_distances(ps), ls);
}

KernelPerturbation kernel_perturbations(const Eigen::MatrixXd& A, const Eigen::MatrixXd& d,
                                        const Eigen::MatrixXd& delta, double epsilon) {
    if (A.rows() != d.rows() || A.cols() != d.cols() || delta.rows() != d.rows() || delta.cols() != d.cols())
        throw ValidationError("kernel_perturbations: shape mismatch");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    KernelPerturbation out;
    out.deltaA = (-(d.array() * delta.array()) / epsilon * A.array()).matrix();
    out.deltaD = out.deltaA.rowwise().sum();
    return out;
}

Eigen::MatrixXd markov_perturbation(const Eigen::MatrixXd& A, const Eigen::VectorXd& D, const Eigen::MatrixXd& deltaA,
                                    const Eigen::VectorXd& deltaD) {
    if (A.rows() != D.size() || deltaA.rows() != A.rows() || deltaA.cols() != A.cols() || deltaD.size() != D.size())
        throw ValidationError("markov_perturbation: shape mismatch");
    if ((D.array() <= 0.0).any()) throw ValidationError("row sums must be positive");
    const Eigen::ArrayXd inv = D.array().inverse();
    const Eigen::ArrayXd shift = deltaD.array() * inv.square();
    return (inv.matrix().asDiagonal() * deltaA) - shift.matrix().asDiagonal() * A;
}

EigenPerturbation eigen_perturbation(const Eigen::MatrixXd& deltaM, const Eigen::VectorXd& values,
                                     const Eigen::MatrixXd& vectors, Eigen::Index n_modes,
                                     const PerturbationOptions& opts) {
    const Eigen::Index basis = vectors.cols();
    if (values.size() != basis) throw ValidationError("one eigenvalue per basis vector is required");
    if (n_modes < 1 || n_modes > basis) throw ValidationError("n_modes must lie in [1, basis size]");
    if (deltaM.rows() != vectors.rows() || deltaM.cols() != vectors.rows())
        throw ValidationError("eigen_perturbation: shape mismatch");

    // proj(l, i) = psi_l^T dM psi_i
    const Eigen::MatrixXd proj = vectors.transpose() * (deltaM * vectors.leftCols(n_modes));

    EigenPerturbation out;
    out.delta_lambda = proj.diagonal().head(n_modes);
    out.alpha = Eigen::MatrixXd::Zero(basis, n_modes);
    const Eigen::Index first = opts.exclude_trivial ? 1 : 0;
    for (Eigen::Index i = first; i < n_modes; ++i) {
        double off = 0.0;
        for (Eigen::Index l = first; l < basis; ++l) {
            if (l == i) continue;
            const double gap = values(i) - values(l);
            if (std::abs(gap) <= opts.degeneracy_threshold)
                throw NumericalError("eigenvalues lambda_" + std::to_string(i + 1) + " and lambda_" + std::to_string(l + 1) +
                                     " are degenerate (gap " + std::to_string(gap) +
                                     "); first-order perturbation theory does not apply");
            const double a = proj(l, i) / gap;
            out.alpha(l, i) = a;
            off += a * a;
        }
        if (off > 1.0)
            throw NumericalError("perturbation too large for mode " + std::to_string(i + 1) +
                                 ": sum of squared expansion coefficients " + std::to_string(off) + " exceeds 1");
        out.alpha(i, i) = -1.0 + std::sqrt(1.0 - off);
    }
    if (opts.exclude_trivial) out.delta_lambda(0) = 0.0;
    out.delta_psi = vectors * out.alpha;
    return out;
}

Eigen::VectorXd predict_sigma(const Eigen::MatrixXd& delta_psi_nontrivial) {
    return delta_psi_nontrivial.rowwise().norm();
}

PerturbationReport predict_landmark_error(const DiffusionModel& model, const DistanceMatrix& d, const LandmarkSet& ls,
                                          const PerturbationOptions& opts) {
    if (d.size() != model.size()) throw ValidationError("distance matrix does not match the model's training set");
    const MarkovSystem ms = build_kernel(d, model.epsilon);
    const Eigen::MatrixXd A = ms.kernel_dense();
    const Eigen::MatrixXd delta = distance_perturbations(d, ls);
    const KernelPerturbation kp = kernel_perturbations(A, d.d, delta, model.epsilon);
    const Eigen::MatrixXd dM = markov_perturbation(A, ms.D, kp.deltaA, kp.deltaD);

    const Eigen::Index modes = model.k + 1;
    EigenPerturbation ep;
    if (opts.full_spectrum) {
        EigenOptions dense;
        dense.dense_limit = d.size();
        const MarkovEigenpairs all = eigensolve_markov(ms, d.size(), dense);
        // Keep the fitted vectors for the perturbed modes so signs match the model.
        Eigen::MatrixXd basis = all.vectors;
        basis.leftCols(modes) = model.eigenvectors;
        Eigen::VectorXd values = all.values;
        values.head(modes) = model.eigenvalues;
        ep = eigen_perturbation(dM, values, basis, modes, opts);
    } else {
        ep = eigen_perturbation(dM, model.eigenvalues, model.eigenvectors, modes, opts);
    }

    PerturbationReport report;
    report.delta_lambda = ep.delta_lambda;
    report.alpha = ep.alpha.topRows(std::min<Eigen::Index>(ep.alpha.rows(), modes));
    report.sigma_pred = predict_sigma(ep.delta_psi.rightCols(model.k));
    return report;
}

void save_perturbation_report(const PerturbationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.precision(17);
    out << "index,sigma_pred,sigma_expt\n";
    for (Eigen::Index i = 0; i < report.sigma_pred.size(); ++i) {
        out << i << ',' << report.sigma_pred(i) << ',';
        if (i < report.sigma_expt.size()) out << report.sigma_expt(i);
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace ldmaps
