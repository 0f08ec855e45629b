#include "ldmaps/evaluation.hpp"

#include "ldmaps/error.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace ldmaps {

FoldPlan make_folds(Eigen::Index n, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw ValidationError("cross validation needs at least 2 folds");
    if (n < n_folds) throw ValidationError("fewer points than folds");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = std::uniform_int_distribution<Eigen::Index>(0, i)(rng);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    for (int f = 0; f < n_folds; ++f) {
        const auto lo = static_cast<std::size_t>(n * f / n_folds);
        const auto hi = static_cast<std::size_t>(n * (f + 1) / n_folds);
        std::vector<Eigen::Index> test(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                       perm.begin() + static_cast<std::ptrdiff_t>(hi));
        std::sort(test.begin(), test.end());
        std::vector<Eigen::Index> train;
        train.reserve(static_cast<std::size_t>(n) - test.size());
        std::size_t t = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (t < test.size() && test[t] == i) {
                ++t;
                continue;
            }
            train.push_back(i);
        }
        plan.test.push_back(std::move(test));
        plan.train.push_back(std::move(train));
    }
    return plan;
}

PointSet subset(const PointSet& ps, std::span<const Eigen::Index> rows) {
    PointSet out;
    out.metric = ps.metric;
    out.atoms_per_frame = ps.atoms_per_frame;
    out.points.resize(static_cast<Eigen::Index>(rows.size()), ps.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) out.points.row(static_cast<Eigen::Index>(r)) = ps.points.row(rows[r]);
    return out;
}

Eigen::VectorXd column_ranges(const EmbeddingMatrix& psi) {
    if (psi.rows() == 0) throw ValidationError("cannot take the range of an empty embedding");
    return (psi.colwise().maxCoeff() - psi.colwise().minCoeff()).transpose();
}

Eigen::VectorXd zeta_error(const EmbeddingMatrix& psi_true, const EmbeddingMatrix& psi_landmark,
                           const Eigen::VectorXd& ranges) {
    if (psi_true.rows() != psi_landmark.rows() || psi_true.cols() != psi_landmark.cols())
        throw ValidationError("zeta_error: embeddings differ in shape");
    if (ranges.size() != psi_true.cols()) throw ValidationError("zeta_error: one range per dimension is required");
    for (Eigen::Index l = 0; l < ranges.size(); ++l)
        if (!(ranges(l) > 0.0)) throw ValidationError("zeta_error: range of dimension " + std::to_string(l + 2) + " is zero");
    const Eigen::MatrixXd scaled = (psi_landmark - psi_true) * ranges.cwiseInverse().asDiagonal();
    return 100.0 * scaled.rowwise().norm();
}

double rms_error(const Eigen::VectorXd& zeta) {
    if (zeta.size() == 0) throw ValidationError("rms_error of an empty set");
    return std::sqrt(zeta.squaredNorm() / static_cast<double>(zeta.size()));
}

Eigen::VectorXd alignment_signs(const EmbeddingMatrix& reference, const EmbeddingMatrix& target) {
    if (reference.rows() != target.rows() || reference.cols() != target.cols())
        throw ValidationError("alignment_signs: embeddings differ in shape");
    Eigen::VectorXd signs(reference.cols());
    for (Eigen::Index l = 0; l < reference.cols(); ++l)
        signs(l) = reference.col(l).dot(target.col(l)) < 0.0 ? -1.0 : 1.0;
    return signs;
}

void apply_column_signs(EmbeddingMatrix& m, const Eigen::VectorXd& signs) {
    for (Eigen::Index l = 0; l < m.cols(); ++l) m.col(l) *= signs(l);
}

Eigen::VectorXd measure_sigma_expt(const EmbeddingMatrix& full, const EmbeddingMatrix& landmark) {
    if (full.rows() != landmark.rows() || full.cols() != landmark.cols())
        throw ValidationError("measure_sigma_expt: embeddings differ in shape");
    return (landmark - full).rowwise().norm();
}

EmbeddingMatrix collapsed_embedding(const LandmarkModel& model, const DistanceMatrix& d, const LandmarkSet& ls) {
    if (ls.size() != model.size()) throw ValidationError("landmark set does not match the model");
    const VoronoiAssignment va = voronoi_assign(d, ls.indices);
    EmbeddingMatrix out(d.size(), model.k);
    for (Eigen::Index i = 0; i < d.size(); ++i)
        out.row(i) = model.eigenvectors.row(va.assignment[static_cast<std::size_t>(i)]).tail(model.k);
    return out;
}

namespace {

LandmarkSet select_landmarks(const DistanceMatrix& d, const LandmarkPolicy& policy, double epsilon) {
    switch (policy.method) {
        case LandmarkMethod::pst: return select_pst(d, epsilon, policy.seed, policy.multiplier);
        case LandmarkMethod::kmedoids: return select_kmedoids(d, policy.m, policy.seed, policy.kmedoids);
        case LandmarkMethod::all: return all_points(d.size());
    }
    throw ValidationError("unknown landmark method");
}

}  // namespace

std::vector<ErrorSummary> cross_validate(const PointSet& ps, const CrossValidationConfig& cfg) {
    ps.validate();
    if (cfg.policies.empty()) throw ValidationError("cross_validate needs at least one landmark policy");
    const FoldPlan plan = make_folds(ps.size(), cfg.n_folds, cfg.seed);
    std::vector<int> folds = cfg.folds;
    if (folds.empty()) {
        folds.resize(static_cast<std::size_t>(cfg.n_folds));
        std::iota(folds.begin(), folds.end(), 0);
    }

    std::vector<ErrorSummary> rows;
    for (int f : folds) {
        if (f < 0 || f >= cfg.n_folds) throw ValidationError("fold index out of range");
        const PointSet train = subset(ps, plan.train[static_cast<std::size_t>(f)]);
        const PointSet test = subset(ps, plan.test[static_cast<std::size_t>(f)]);
        const DistanceMatrix d = pairwise_distances(train);
        KernelConfig fixed = cfg.kernel;
        fixed.epsilon = resolve_epsilon(d, cfg.kernel);
        fixed.mode = KernelConfig::Mode::fixed;

        EmbeddingMatrix psi_train, psi_test;
        {
            const DiffusionModel full = fit_diffusion_map(train, d, fixed, cfg.k, cfg.eigen);
            psi_train = embed_training(full);
            psi_test = nystrom_extend(full, test);
        }
        const Eigen::VectorXd ranges = column_ranges(psi_train);

        for (const auto& policy : cfg.policies) {
            const LandmarkSet ls = select_landmarks(d, policy, fixed.epsilon);
            const LandmarkModel lm = fit_landmark_map(train, ls, fixed.epsilon, cfg.k, cfg.eigen);
            EmbeddingMatrix lm_train = embed_non_landmarks(lm, train, ls);
            EmbeddingMatrix lm_test = landmark_nystrom(lm, test);
            const Eigen::VectorXd signs = alignment_signs(psi_train, lm_train);
            apply_column_signs(lm_train, signs);
            apply_column_signs(lm_test, signs);

            ErrorSummary row;
            row.fold = f;
            row.method = policy.method;
            row.seed = policy.seed;
            row.M = ls.size();
            row.n_train = train.size();
            row.M_over_N = 100.0 * static_cast<double>(ls.size()) / static_cast<double>(train.size());
            row.epsilon = fixed.epsilon;
            row.zeta_train = zeta_error(psi_train, lm_train, ranges);
            row.zeta_test = zeta_error(psi_test, lm_test, ranges);
            row.Z_train = rms_error(row.zeta_train);
            row.Z_test = rms_error(row.zeta_test);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_error_table(std::ostream& os, const std::vector<ErrorSummary>& rows) {
    os << "fold,method,seed,M,M_over_N,epsilon,Z_train,Z_test\n";
    for (const auto& r : rows)
        os << r.fold << ',' << to_string(r.method) << ',' << r.seed << ',' << r.M << ',' << r.M_over_N << ','
           << r.epsilon << ',' << r.Z_train << ',' << r.Z_test << '\n';
}

namespace {

struct Stat {
    double mean = 0.0, std = 0.0;
};

Stat stat(const std::vector<double>& v) {
    Stat s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

std::vector<ErrorGroupSummary> summarize_errors(const std::vector<ErrorSummary>& rows) {
    using Key = std::pair<int, Eigen::Index>;
    auto key_of = [](const ErrorSummary& r) {
        return Key{static_cast<int>(r.method), r.method == LandmarkMethod::kmedoids ? r.M : 0};
    };
    std::map<Key, std::vector<const ErrorSummary*>> configs;
    for (const auto& r : rows) configs[key_of(r)].push_back(&r);

    std::vector<ErrorGroupSummary> out;
    for (const auto& [key, members] : configs) {
        for (const char* grouping : {"fold", "seed"}) {
            const bool by_fold = std::string_view(grouping) == "fold";
            std::map<std::uint64_t, std::vector<const ErrorSummary*>> groups;
            for (const auto* r : members) groups[by_fold ? static_cast<std::uint64_t>(r->fold) : r->seed].push_back(r);
            std::vector<double> M, frac, ztr, zte;
            for (const auto& [g, rs] : groups) {
                double a = 0, b = 0, c = 0, e = 0;
                for (const auto* r : rs) {
                    a += static_cast<double>(r->M);
                    b += r->M_over_N;
                    c += r->Z_train;
                    e += r->Z_test;
                }
                const auto n = static_cast<double>(rs.size());
                M.push_back(a / n);
                frac.push_back(b / n);
                ztr.push_back(c / n);
                zte.push_back(e / n);
            }
            ErrorGroupSummary s;
            s.grouping = grouping;
            s.method = static_cast<LandmarkMethod>(key.first);
            s.m_requested = key.second;
            s.groups = static_cast<int>(groups.size());
            const Stat sm = stat(M), sf = stat(frac), st = stat(ztr), se = stat(zte);
            s.M_mean = sm.mean;
            s.M_std = sm.std;
            s.M_over_N_mean = sf.mean;
            s.M_over_N_std = sf.std;
            s.Z_train_mean = st.mean;
            s.Z_train_std = st.std;
            s.Z_test_mean = se.mean;
            s.Z_test_std = se.std;
            out.push_back(s);
        }
    }
    return out;
}

void write_summary_table(std::ostream& os, const std::vector<ErrorGroupSummary>& rows) {
    os << "grouping,method,M_requested,groups,M_mean,M_std,M_over_N_mean,M_over_N_std,Z_train_mean,Z_train_std,"
          "Z_test_mean,Z_test_std\n";
    for (const auto& r : rows)
        os << r.grouping << ',' << to_string(r.method) << ',' << r.m_requested << ',' << r.groups << ',' << r.M_mean
           << ',' << r.M_std << ',' << r.M_over_N_mean << ',' << r.M_over_N_std << ',' << r.Z_train_mean << ','
           << r.Z_train_std << ',' << r.Z_test_mean << ',' << r.Z_test_std << '\n';
}

namespace {

double elapsed_ms(const std::function<void()>& run) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Repeats alternate between the two workloads so slow drift in machine speed
// hits both medians alike.
std::pair<double, double> paired_median_ms(const std::function<void()>& a, const std::function<void()>& b, int repeats) {
    a();  // warm-up
    b();
    std::vector<double> ta, tb;
    for (int r = 0; r < repeats; ++r) {
        ta.push_back(elapsed_ms(a));
        tb.push_back(elapsed_ms(b));
    }
    return {median(ta), median(tb)};
}

}  // namespace

BenchmarkResult benchmark_speedup(const DiffusionModel& full, const LandmarkModel& landmark, const PointSet& queries,
                                  int repeats) {
    if (queries.size() == 0) throw ValidationError("benchmark needs at least one query");
    if (repeats < 1) throw ValidationError("repeats must be at least 1");
    queries.validate_queries();
    if (queries.dim() != full.training_points.cols() || queries.dim() != landmark.landmark_points.cols())
        throw ValidationError("query dimension does not match the models");

    const auto k = static_cast<std::size_t>(full.k);
    std::vector<double> row(std::max(k, static_cast<std::size_t>(landmark.k)));
    volatile double sink = 0.0;
    auto query = [&](Eigen::Index i) {
        return std::span<const double>(queries.points.row(i).data(), static_cast<std::size_t>(queries.dim()));
    };

    BenchmarkResult out;
    out.N = full.size();
    out.M = landmark.size();
    const auto [t_full, t_landmark] = paired_median_ms(
        [&] {
            for (Eigen::Index i = 0; i < queries.size(); ++i) {
                nystrom_extend_point(full, query(i), std::span<double>(row.data(), k));
                sink = sink + row[0];
            }
        },
        [&] {
            for (Eigen::Index i = 0; i < queries.size(); ++i) {
                landmark_nystrom_point(landmark, query(i), std::span<double>(row.data(), static_cast<std::size_t>(landmark.k)));
                sink = sink + row[0];
            }
        },
        repeats);
    out.t_full_ms = t_full;
    out.t_landmark_ms = t_landmark;
    out.speedup = out.t_full_ms / out.t_landmark_ms;
    return out;
}

void write_benchmark_table(std::ostream& os, const std::vector<BenchmarkResult>& rows) {
    os << "N,M,t_full_ms,t_landmark_ms,S\n";
    for (const auto& r : rows)
        os << r.N << ',' << r.M << ',' << r.t_full_ms << ',' << r.t_landmark_ms << ',' << r.speedup << '\n';
}

}  // namespace ldmaps
