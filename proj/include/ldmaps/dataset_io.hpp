#pragma once

#include "ldmaps/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace ldmaps {

struct SwissRollSpec {
    Eigen::Index n = 20000;
    std::uint64_t seed = 0;
    /// Standard deviation of isotropic Gaussian noise added to each coordinate.
    double noise = 0.0;
};

/// Generated roll together with the spiral parameter t of every point.
struct SwissRoll {
    PointSet points;
    std::vector<double> t;
};

/// x = t cos t, z = t sin t with t ~ U[1.5 pi, 4.5 pi], y ~ U[0, 21].
SwissRoll generate_swiss_roll(const SwissRollSpec& spec);

struct ChainSpec {
    Eigen::Index n = 8000;
    int atoms = 24;
    std::uint64_t seed = 0;
    double noise = 0.02;
};

/// Synthetic molecular frames: a helical chain whose pitch and curl vary with
/// two latent parameters, randomly rotated and translated, plus per-atom
/// Gaussian noise. Rows hold 3 * atoms coordinates; metric is aligned_rmsd.
PointSet generate_chain_frames(const ChainSpec& spec);

enum class PointFormat { csv, xyz_frames };

struct LoadOptions {
    PointFormat format = PointFormat::csv;
    Metric metric = Metric::euclidean;
    /// CSV only: skip the first line.
    bool header = false;
    /// Required for xyz-frames; inferred as K/3 for CSV with aligned_rmsd.
    std::optional<int> atoms_per_frame;
};

PointSet load_points(const std::filesystem::path& path, const LoadOptions& opts = {});
PointSet parse_points(std::string_view text, const LoadOptions& opts = {});

/// Writes with max_digits10 so a reload is bit-identical.
void save_points(const PointSet& ps, const std::filesystem::path& path,
                 PointFormat format = PointFormat::csv);

/// Parses one CSV row of reals. Throws ParseError tagged with `line_no`.
std::vector<double> parse_csv_row(std::string_view line, std::size_t line_no);

void write_csv_row(std::ostream& os, std::span<const double> values);

}  // namespace ldmaps
