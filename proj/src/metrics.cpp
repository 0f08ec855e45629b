#include "ldmaps/metrics.hpp"

#include "ldmaps/error.hpp"
#include "ldmaps/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ldmaps {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

double euclidean(const double* a, const double* b, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

Eigen::Matrix3Xd centred_frame(const double* x, std::size_t k) {
    Eigen::Matrix3Xd f = Eigen::Map<const Eigen::Matrix3Xd>(x, 3, static_cast<Eigen::Index>(k / 3));
    const Eigen::Vector3d c = f.rowwise().mean();
    f.colwise() -= c;
    return f;
}

double rmsd_centred(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
    const Eigen::Matrix3d r = kabsch_rotation(a, b);
    const double ss = ((r * a) - b).squaredNorm();
    return std::sqrt(ss / static_cast<double>(a.cols()));
}

void check_pair(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size())
        throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (a.empty()) throw ValidationError("points must have at least one coordinate");
    if (metric == Metric::aligned_rmsd && a.size() % 3 != 0)
        throw ValidationError("aligned_rmsd requires dimension divisible by 3");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw ValidationError("non-finite coordinate");
}

}  // namespace

Eigen::Matrix3d kabsch_rotation(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
    const Eigen::Matrix3d h = a * b.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
    s(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return v * s * u.transpose();
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    check_pair(a, b, metric);
    if (metric == Metric::euclidean) return euclidean(a.data(), b.data(), a.size());
    return rmsd_centred(centred_frame(a.data(), a.size()), centred_frame(b.data(), b.size()));
}

void distances_to(std::span<const double> query, const RowMatrix& reference, Metric metric,
                  std::span<double> out) {
    const auto k = static_cast<std::size_t>(reference.cols());
    if (query.size() != k)
        throw ValidationError("dimension mismatch: query has " + std::to_string(query.size()) +
                              " coordinates, model expects " + std::to_string(k));
    if (out.size() != static_cast<std::size_t>(reference.rows()))
        throw ValidationError("distances_to: output size mismatch");
    for (double v : query)
        if (!std::isfinite(v)) throw ValidationError("non-finite coordinate in query");
    if (metric == Metric::euclidean) {
        for (Eigen::Index j = 0; j < reference.rows(); ++j)
            out[static_cast<std::size_t>(j)] = euclidean(query.data(), reference.row(j).data(), k);
        return;
    }
    if (k % 3 != 0) throw ValidationError("aligned_rmsd requires dimension divisible by 3");
    const Eigen::Matrix3Xd q = centred_frame(query.data(), k);
    for (Eigen::Index j = 0; j < reference.rows(); ++j)
        out[static_cast<std::size_t>(j)] = rmsd_centred(q, centred_frame(reference.row(j).data(), k));
}

DistanceMatrix pairwise_distances(const PointSet& ps) {
    ps.validate();
    const Eigen::Index n = ps.size();
    const auto k = static_cast<std::size_t>(ps.dim());
    DistanceMatrix dm;
    dm.metric = ps.metric;
    dm.d.setZero(n, n);

    if (ps.metric == Metric::euclidean) {
        constexpr Eigen::Index block = 256;
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            for (Eigen::Index jb = 0; jb < n; jb += block) {
                const Eigen::Index je = std::min(n, jb + block);
                for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end); ++i) {
                    const double* xi = ps.points.row(i).data();
                    for (Eigen::Index j = std::max(jb, i + 1); j < je; ++j)
                        dm.d(j, i) = euclidean(xi, ps.points.row(j).data(), k);
                }
            }
        });
    } else {
        std::vector<Eigen::Matrix3Xd> frames(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) frames[static_cast<std::size_t>(i)] = centred_frame(ps.points.row(i).data(), k);
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                for (auto j = static_cast<Eigen::Index>(i) + 1; j < n; ++j)
                    dm.d(j, static_cast<Eigen::Index>(i)) = rmsd_centred(frames[i], frames[static_cast<std::size_t>(j)]);
        });
    }
    // Lower triangle was filled column by column; mirror it.
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) dm.d(i, j) = dm.d(j, i);
    return dm;
}

void save_distance_cache(const DistanceMatrix& dm, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write("LDMD", 4);
    const auto n = static_cast<std::uint64_t>(dm.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    std::vector<double> row;
    for (Eigen::Index i = 0; i < dm.size(); ++i) {
        row.clear();
        for (Eigen::Index j = i + 1; j < dm.size(); ++j) row.push_back(dm.d(i, j));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

DistanceMatrix load_distance_cache(const std::filesystem::path& path, Metric metric) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    char magic[4];
    std::uint64_t n = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, "LDMD", 4) != 0) throw IoError("not a distance cache (bad magic)");
    if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) throw IoError("truncated distance cache header");
    DistanceMatrix dm;
    dm.metric = metric;
    const auto ni = static_cast<Eigen::Index>(n);
    dm.d.setZero(ni, ni);
    std::vector<double> row;
    for (Eigen::Index i = 0; i < ni; ++i) {
        row.resize(static_cast<std::size_t>(ni - i - 1));
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double))))
            throw IoError("truncated distance cache payload");
        for (Eigen::Index j = i + 1; j < ni; ++j) {
            const double v = row[static_cast<std::size_t>(j - i - 1)];
            if (!std::isfinite(v) || v < 0.0) throw IoError("distance cache holds an invalid distance");
            dm.d(i, j) = v;
            dm.d(j, i) = v;
        }
    }
    return dm;
}

}  // namespace ldmaps
