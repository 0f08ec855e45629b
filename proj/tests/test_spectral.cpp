#include "ldmaps/error.hpp"
#include "ldmaps/parallel.hpp"
#include "ldmaps/spectral.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <thread>

using namespace ldmaps;
using ldmaps::testing::line_points;
using ldmaps::testing::random_points;

namespace {

KernelConfig fixed(double eps) {
    KernelConfig cfg;
    cfg.epsilon = eps;
    return cfg;
}

KernelConfig automatic() {
    KernelConfig cfg;
    cfg.mode = KernelConfig::Mode::auto_min_connected;
    return cfg;
}

std::span<const double> row(const RowMatrix& m, Eigen::Index i) {
    return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

TEST(Eigensolve, IdenticalPairIsRankOne) {
    const MarkovSystem ms = build_kernel(pairwise_distances(line_points({2, 2})), 1.0);
    const MarkovEigenpairs e = eigensolve_markov(ms, 2);
    EXPECT_NEAR(e.values(0), 1.0, 1e-12);
    EXPECT_NEAR(e.values(1), 0.0, 1e-12);
    EXPECT_NEAR(e.vectors(0, 0), e.vectors(1, 0), 1e-12);
    EXPECT_NEAR(e.vectors.col(0).norm(), 1.0, 1e-12);
}

TEST(Eigensolve, MatchesNonsymmetricDenseSolve) {
    const MarkovSystem ms = build_kernel(pairwise_distances(random_points(6, 2, 12)), 0.3);
    const MarkovEigenpairs e = eigensolve_markov(ms, 6);
    Eigen::EigenSolver<Eigen::MatrixXd> oracle(ms.markov_dense());
    std::vector<std::pair<double, Eigen::VectorXd>> pairs;
    for (int i = 0; i < 6; ++i) {
        ASSERT_NEAR(oracle.eigenvalues()(i).imag(), 0.0, 1e-12);
        pairs.emplace_back(oracle.eigenvalues()(i).real(), oracle.eigenvectors().col(i).real().normalized());
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; i < 6; ++i) {
        EXPECT_NEAR(e.values(i), pairs[static_cast<std::size_t>(i)].first, 1e-10);
        EXPECT_GT(std::abs(e.vectors.col(i).dot(pairs[static_cast<std::size_t>(i)].second)), 1 - 1e-8);
    }
}

TEST(Eigensolve, LanczosAgreesWithDense) {
    const MarkovSystem ms = build_kernel(pairwise_distances(ldmaps::testing::small_roll(700, 2)), 4.0);
    EigenOptions dense;
    dense.dense_limit = 100000;
    EigenOptions iterative;
    iterative.dense_limit = 0;
    const MarkovEigenpairs a = eigensolve_markov(ms, 5, dense);
    const MarkovEigenpairs b = eigensolve_markov(ms, 5, iterative);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(a.values(i), b.values(i), 1e-9);
        EXPECT_GT(std::abs(a.vectors.col(i).dot(b.vectors.col(i))), 1 - 1e-8);
    }
}

TEST(Eigensolve, LanczosReportsExhaustedBudget) {
    const MarkovSystem ms = build_kernel(pairwise_distances(ldmaps::testing::small_roll(700, 2)), 4.0);
    EigenOptions opts;
    opts.dense_limit = 0;
    opts.max_iterations = 130;
    opts.tolerance = 1e-300;
    try {
        eigensolve_markov(ms, 5, opts);
        FAIL() << "expected non-convergence";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("iterations"), std::string::npos);
    }
}

TEST(Eigensolve, SignConventionIsDeterministic) {
    const MarkovSystem ms = build_kernel(pairwise_distances(random_points(40, 3, 5)), 0.2);
    const MarkovEigenpairs a = eigensolve_markov(ms, 4), b = eigensolve_markov(ms, 4);
    EXPECT_EQ(a.vectors, b.vectors);
    for (Eigen::Index c = 0; c < 4; ++c) {
        Eigen::Index arg;
        a.vectors.col(c).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(a.vectors(arg, c), 0.0);
    }
}

TEST(Fit, InvariantsOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const PointSet ps = random_points(30, 2, seed);
        const DiffusionModel m = fit_diffusion_map(ps, automatic(), 3);
        EXPECT_NEAR(m.eigenvalues(0), 1.0, 1e-10);
        EXPECT_LT(m.eigenvalues(1), 1.0);
        for (int i = 0; i + 1 < m.eigenvalues.size(); ++i) EXPECT_GE(m.eigenvalues(i) + 1e-12, m.eigenvalues(i + 1));
        EXPECT_GE(m.eigenvalues.minCoeff(), -1.0);
        const Eigen::VectorXd psi1 = m.eigenvectors.col(0);
        const double mean = psi1.mean();
        EXPECT_LT(std::sqrt((psi1.array() - mean).square().mean()) / std::abs(mean), 1e-8);
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(m.eigenvectors.col(c).norm(), 1.0, 1e-12);
        // Right eigenvectors of M are orthogonal under the D-weighted inner product.
        const Eigen::MatrixXd gram = m.eigenvectors.transpose() * m.D.asDiagonal() * m.eigenvectors;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) EXPECT_NEAR(gram(i, j), 0.0, 1e-10 * gram.diagonal().maxCoeff());
    }
}

TEST(Fit, StationaryDistributionIsRowSums) {
    const PointSet ps = random_points(25, 3, 44);
    const MarkovSystem ms = build_kernel(pairwise_distances(ps), 0.15);
    const Eigen::MatrixXd m = ms.markov_dense();
    const Eigen::RowVectorXd phi = ms.D.transpose();
    EXPECT_LT((phi * m - phi).cwiseAbs().maxCoeff(), 1e-8 * phi.cwiseAbs().maxCoeff());
}

TEST(Fit, IsBitwiseDeterministic) {
    const PointSet ps = ldmaps::testing::small_roll(300, 9);
    const DiffusionModel a = fit_diffusion_map(ps, automatic(), 2), b = fit_diffusion_map(ps, automatic(), 2);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(Fit, IdenticalPointsCannotBeEmbedded) {
    const PointSet ps = line_points({1, 1, 1, 1, 1});
    EXPECT_THROW(fit_diffusion_map(ps, fixed(1.0), 1), NumericalError);
    EXPECT_THROW(fit_diffusion_map(ps, automatic(), 1), ValidationError);
}

TEST(Fit, RejectsBadArguments) {
    const PointSet ps = line_points({0, 1, 2, 3});
    EXPECT_THROW(fit_diffusion_map(ps, fixed(1.0), 4), ValidationError);
    EXPECT_THROW(fit_diffusion_map(ps, fixed(1.0), 0), ValidationError);
    EXPECT_THROW(fit_diffusion_map(ps, fixed(-1.0), 1), ValidationError);
    EXPECT_THROW(fit_diffusion_map(line_points({0, 1, 5}), fixed(1.0), 1), ValidationError);
}

TEST(Embed, DropsTrivialColumn) {
    const DiffusionModel m = fit_diffusion_map(random_points(20, 2, 3), automatic(), 2);
    const EmbeddingMatrix e = embed_training(m);
    ASSERT_EQ(e.rows(), 20);
    ASSERT_EQ(e.cols(), 2);
    EXPECT_EQ(Eigen::MatrixXd(e), m.eigenvectors.rightCols(2));
}

TEST(Embed, FirstCoordinateFollowsSpiralParameter) {
    SwissRollSpec spec;
    spec.n = 3000;
    spec.seed = 4;
    const SwissRoll roll = generate_swiss_roll(spec);
    const DiffusionModel m = fit_diffusion_map(roll.points, automatic(), 2);
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(roll.t.data(), static_cast<Eigen::Index>(roll.t.size()));
    EXPECT_GT(std::abs(ldmaps::testing::spearman(m.eigenvectors.col(1), t)), 0.9);
}

TEST(SpectralGap, Examples) {
    const std::vector<double> a{1, 0.9, 0.88, 0.3, 0.29};
    EXPECT_EQ(spectral_gap(a), 2);
    const std::vector<double> b{1, 0.5, 0.49, 0.48};
    EXPECT_EQ(spectral_gap(b), 1);
    const std::vector<double> c{1, 0.5};
    EXPECT_THROW(spectral_gap(c), ValidationError);
}

TEST(Nystrom, ExactOnTrainingPoints) {
    const PointSet ps = ldmaps::testing::small_roll(400, 1);
    const DiffusionModel m = fit_diffusion_map(ps, automatic(), 3);
    const EmbeddingMatrix e = nystrom_extend(m, ps);
    EXPECT_LT((e - embed_training(m)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Nystrom, DuplicateQueriesEmbedIdentically) {
    const DiffusionModel m = fit_diffusion_map(random_points(30, 2, 8), automatic(), 2);
    PointSet q;
    q.points.resize(2, 2);
    q.points << 0.37, 0.61, 0.37, 0.61;
    const EmbeddingMatrix e = nystrom_extend(m, q);
    EXPECT_EQ(e.row(0), e.row(1));
}

TEST(Nystrom, MatchesTermByTermFormula) {
    const PointSet ps = random_points(6, 2, 19);
    const DiffusionModel m = fit_diffusion_map(ps, fixed(2.0), 3);
    const std::vector<double> q{0.4, 0.45};
    std::vector<double> out(3);
    nystrom_extend_point(m, q, out);
    std::vector<double> a(6);
    double total = 0;
    for (int j = 0; j < 6; ++j) {
        const double dx = q[0] - ps.points(j, 0), dy = q[1] - ps.points(j, 1);
        a[static_cast<std::size_t>(j)] = std::exp(-(dx * dx + dy * dy) / (2 * 2.0));
        total += a[static_cast<std::size_t>(j)];
    }
    double stochastic = 0;
    for (int l = 1; l <= 3; ++l) {
        double s = 0;
        for (int j = 0; j < 6; ++j) s += a[static_cast<std::size_t>(j)] / total * m.eigenvectors(j, l);
        EXPECT_NEAR(out[static_cast<std::size_t>(l - 1)], s / m.eigenvalues(l), 1e-12);
    }
    for (int j = 0; j < 6; ++j) stochastic += a[static_cast<std::size_t>(j)] / total;
    EXPECT_NEAR(stochastic, 1.0, 1e-12);
}

TEST(Nystrom, FarQueriesStayFinite) {
    const DiffusionModel m = fit_diffusion_map(random_points(20, 2, 8), automatic(), 2);
    PointSet q;
    q.points.resize(1, 2);
    q.points << 500.0, -300.0;
    const EmbeddingMatrix e = nystrom_extend(m, q);
    EXPECT_TRUE(e.allFinite());
}

TEST(Nystrom, ConcurrentCallersAgreeWithSerial) {
    const PointSet ps = ldmaps::testing::small_roll(300, 6);
    const DiffusionModel m = fit_diffusion_map(ps, automatic(), 2);
    const PointSet q = ldmaps::testing::small_roll(64, 7);
    const EmbeddingMatrix serial = nystrom_extend(m, q);
    EmbeddingMatrix threaded(q.size(), 2);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (Eigen::Index i = t; i < q.size(); i += 4)
                nystrom_extend_point(m, row(q.points, i), {threaded.row(i).data(), 2});
        });
    for (auto& th : pool) th.join();
    EXPECT_EQ(serial, threaded);
}

TEST(Nystrom, RejectsMismatchedQueries) {
    const DiffusionModel m = fit_diffusion_map(random_points(20, 2, 8), automatic(), 2);
    EXPECT_THROW(nystrom_extend(m, random_points(3, 3, 1)), ValidationError);
    Eigen::VectorXd values(3);
    values << 1.0, 0.5, 1e-13;
    EXPECT_THROW(check_projectable(values), NumericalError);
}
