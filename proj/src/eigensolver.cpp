#include "ldmaps/eigensolver.hpp"

#include "ldmaps/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ldmaps {

void apply_sign_convention(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (vectors.rows() > 0 && vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

SymmetricEigenpairs dense_top(const Eigen::MatrixXd& s, Eigen::Index n_pairs) {
    const Eigen::Index n = s.rows();
    if (n_pairs < 1 || n_pairs > n) throw ValidationError("n_pairs must lie in [1, N]");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver failed to converge");

    SymmetricEigenpairs out;
    out.values = es.eigenvalues().tail(n_pairs).reverse();
    out.vectors = es.eigenvectors().rightCols(n_pairs).rowwise().reverse();
    return out;
}

SymmetricEigenpairs lanczos_top(const MatVec& op, Eigen::Index n, Eigen::Index n_pairs,
                                const EigenOptions& opts) {
    if (n_pairs < 1 || n_pairs > n) throw ValidationError("n_pairs must lie in [1, N]");
    const Eigen::Index budget = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;
    const Eigen::Index m = std::min(n, std::max<Eigen::Index>(3 * n_pairs + 40, 120));
    const Eigen::Index keep = std::min(m - 1, std::max(n_pairs + 1, (m + n_pairs) / 2));

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;
    auto random_unit = [&](Eigen::Index filled, Eigen::MatrixXd& basis) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
        for (int pass = 0; pass < 2; ++pass) {
            if (filled > 0) v -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * v);
        }
        return Eigen::VectorXd(v / v.norm());
    };

    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    V.col(0) = random_unit(0, V);

    Eigen::VectorXd w(n);
    Eigen::Index matvecs = 0;
    Eigen::Index start = 0;
    double scale = 0.0;

    while (true) {
        double beta = 0.0;
        for (Eigen::Index j = start; j < m; ++j) {
            op(V.col(j).data(), w.data());
            ++matvecs;
            auto basis = V.leftCols(j + 1);
            Eigen::VectorXd h = basis.transpose() * w;
            w -= basis * h;
            const Eigen::VectorXd h2 = basis.transpose() * w;
            w -= basis * h2;
            h += h2;
            T.col(j).head(j + 1) = h;
            T.row(j).head(j + 1) = h.transpose();
            scale = std::max(scale, std::abs(h(j)));
            beta = w.norm();
            if (beta <= 1e-14 * std::max(scale, 1e-300)) {
                // Invariant subspace reached: continue with a fresh orthogonal direction.
                beta = 0.0;
                if (j + 1 < n) V.col(j + 1) = random_unit(j + 1, V);
                else V.col(j + 1).setZero();
            } else {
                V.col(j + 1) = w / beta;
            }
            if (j + 1 < m) {
                T(j + 1, j) = beta;
                T(j, j + 1) = beta;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(T);
        const Eigen::VectorXd& theta = ritz.eigenvalues();
        const Eigen::MatrixXd& y = ritz.eigenvectors();
        bool converged = true;
        const double tol = opts.tolerance * std::max(1.0, std::abs(theta(m - 1)));
        for (Eigen::Index c = 0; c < n_pairs; ++c) {
            const Eigen::Index col = m - 1 - c;
            if (std::abs(beta * y(m - 1, col)) > tol) {
                converged = false;
                break;
            }
        }
        if (converged || m == n) {
            SymmetricEigenpairs out;
            out.values.resize(n_pairs);
            out.vectors.resize(n, n_pairs);
            for (Eigen::Index c = 0; c < n_pairs; ++c) {
                const Eigen::Index col = m - 1 - c;
                out.values(c) = theta(col);
                out.vectors.col(c) = V.leftCols(m) * y.col(col);
            }
            out.matvecs = matvecs;
            return out;
        }
        if (matvecs >= budget)
            throw NumericalError("Lanczos eigensolver did not converge after " + std::to_string(matvecs) +
                                 " iterations (" + std::to_string(n_pairs) + " pairs requested, n=" +
                                 std::to_string(n) + ")");

        // Thick restart: retain the `keep` leading Ritz vectors plus the residual direction.
        const Eigen::MatrixXd ykeep = y.rightCols(keep).rowwise().reverse();
        const Eigen::MatrixXd kept = V.leftCols(m) * ykeep;
        V.leftCols(keep) = kept;
        V.col(keep) = V.col(m);
        T.setZero();
        for (Eigen::Index c = 0; c < keep; ++c) {
            T(c, c) = theta(m - 1 - c);
            T(keep, c) = T(c, keep) = beta * ykeep(m - 1, c);
        }
        start = keep;
    }
}

SymmetricEigenpairs top_eigenpairs(const PackedSymmetric& s, Eigen::Index n_pairs, const EigenOptions& opts) {
    if (s.size() <= opts.dense_limit || 3 * n_pairs >= s.size()) {
        Eigen::MatrixXd dense = s.to_dense();
        return dense_top(dense, n_pairs);
    }
    return lanczos_top([&s](const double* x, double* y) { s.multiply(x, y); }, s.size(), n_pairs, opts);
}

}  // namespace ldmaps
