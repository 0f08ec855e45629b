#pragma once

#include "ldmaps/landmarks.hpp"
#include "ldmaps/spectral.hpp"

namespace ldmaps {

/// delta_ij = d(z_g(i), z_g(j)) - d(x_i, x_j), where z_g(i) is the landmark
/// whose Voronoi cell holds x_i. Landmarks are training points, so both terms
/// come from `d`.
Eigen::MatrixXd distance_perturbations(const DistanceMatrix& d, const LandmarkSet& ls);
Eigen::MatrixXd distance_perturbations(const PointSet& ps, const LandmarkSet& ls);

struct KernelPerturbation {
    Eigen::MatrixXd deltaA;
    Eigen::VectorXd deltaD;
};

/// First-order kernel response: dA_ij = -(d_ij delta_ij / eps) A_ij, dD_i = sum_j dA_ij.
KernelPerturbation kernel_perturbations(const Eigen::MatrixXd& A, const Eigen::MatrixXd& d,
                                        const Eigen::MatrixXd& delta, double epsilon);

/// dM_ij = dA_ij / D_i - (dD_i / D_i^2) A_ij
Eigen::MatrixXd markov_perturbation(const Eigen::MatrixXd& A, const Eigen::VectorXd& D,
                                    const Eigen::MatrixXd& deltaA, const Eigen::VectorXd& deltaD);

struct PerturbationOptions {
    /// Drop the trivial mode (l = 1) from the expansion sums.
    bool exclude_trivial = false;
    /// Expand over every eigenvector of M instead of the kept modes 1..k+1.
    /// Needs a full dense eigendecomposition; intended for small N.
    bool full_spectrum = false;
    /// Minimum |lambda_i - lambda_l| accepted in a denominator.
    double degeneracy_threshold = 1e-8;
};

struct EigenPerturbation {
    /// One entry per perturbed mode.
    Eigen::VectorXd delta_lambda;
    /// alpha(l, i): coefficient of basis vector l in the perturbation of mode i.
    Eigen::MatrixXd alpha;
    /// N x n_modes, column i is delta psi_i.
    Eigen::MatrixXd delta_psi;
};

/// First-order eigenpair perturbation restricted to the supplied basis.
///
/// `values`/`vectors` hold the basis the expansion runs over (normally the
/// kept modes 1..k+1; pass the full spectrum for the unrestricted variant).
/// The first `n_modes` columns are the modes being perturbed.
EigenPerturbation eigen_perturbation(const Eigen::MatrixXd& deltaM, const Eigen::VectorXd& values,
                                     const Eigen::MatrixXd& vectors, Eigen::Index n_modes,
                                     const PerturbationOptions& opts = {});

/// sigma(i) = sqrt(sum over the given columns of delta_psi(i)^2).
Eigen::VectorXd predict_sigma(const Eigen::MatrixXd& delta_psi_nontrivial);

struct PerturbationReport {
    Eigen::VectorXd delta_lambda;
    Eigen::MatrixXd alpha;
    Eigen::VectorXd sigma_pred;
    Eigen::VectorXd sigma_expt;
};

/// Full predictor for a fitted model and landmark choice over the same
/// training points: distances -> kernel -> Markov -> eigenpair perturbations
/// -> sigma_pred over modes 2..k+1. sigma_expt is left empty.
PerturbationReport predict_landmark_error(const DiffusionModel& model, const DistanceMatrix& d,
                                          const LandmarkSet& ls, const PerturbationOptions& opts = {});

/// CSV rows "index,sigma_pred,sigma_expt".
void save_perturbation_report(const PerturbationReport& report, const std::filesystem::path& path);

}  // namespace ldmaps
