#include "ldmaps/dataset_io.hpp"

#include "ldmaps/error.hpp"

#include <Eigen/Geometry>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace ldmaps {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::aligned_rmsd: return "aligned_rmsd";
    }
    return "unknown";
}

Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "aligned_rmsd" || s == "rmsd") return Metric::aligned_rmsd;
    throw ValidationError("unknown metric '" + std::string(s) + "'");
}

void PointSet::validate_queries() const {
    if (points.rows() < 1) throw ValidationError("point set is empty");
    if (points.cols() < 1) throw ValidationError("points must have at least one coordinate");
    if (!points.allFinite()) throw ValidationError("point set contains non-finite coordinates");
    if (metric == Metric::aligned_rmsd) {
        if (points.cols() % 3 != 0)
            throw ValidationError("aligned_rmsd requires K divisible by 3, got K=" + std::to_string(points.cols()));
        if (!atoms_per_frame || *atoms_per_frame * 3 != points.cols())
            throw ValidationError("aligned_rmsd requires atoms_per_frame == K/3");
    } else if (atoms_per_frame) {
        throw ValidationError("atoms_per_frame is only meaningful for aligned_rmsd");
    }
}

void PointSet::validate() const {
    if (points.rows() < 2)
        throw ValidationError("point set needs at least 2 points, got " + std::to_string(points.rows()));
    validate_queries();
}

SwissRoll generate_swiss_roll(const SwissRollSpec& spec) {
    if (spec.n < 4) throw ValidationError("swiss roll needs n >= 4");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
        throw ValidationError("swiss roll noise must be finite and >= 0");

    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> angle(1.5 * pi, 4.5 * pi);
    std::uniform_real_distribution<double> height(0.0, 21.0);
    std::normal_distribution<double> jitter(0.0, 1.0);

    SwissRoll roll;
    roll.points.points.resize(spec.n, 3);
    roll.t.resize(static_cast<std::size_t>(spec.n));
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const double t = angle(rng);
        const double y = height(rng);
        double x = t * std::cos(t);
        double h = y;
        double z = t * std::sin(t);
        if (spec.noise > 0.0) {
            x += spec.noise * jitter(rng);
            h += spec.noise * jitter(rng);
            z += spec.noise * jitter(rng);
        }
        roll.points.points.row(i) << x, h, z;
        roll.t[static_cast<std::size_t>(i)] = t;
    }
    roll.points.metric = Metric::euclidean;
    return roll;
}

PointSet generate_chain_frames(const ChainSpec& spec) {
    if (spec.n < 2) throw ValidationError("chain frames need n >= 2");
    if (spec.atoms < 3) throw ValidationError("chain frames need at least 3 atoms");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
        throw ValidationError("chain noise must be finite and >= 0");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    PointSet ps;
    ps.metric = Metric::aligned_rmsd;
    ps.atoms_per_frame = spec.atoms;
    ps.points.resize(spec.n, 3 * spec.atoms);
    Eigen::Matrix3Xd frame(3, spec.atoms);
    for (Eigen::Index f = 0; f < spec.n; ++f) {
        const double curl = 0.15 + 0.45 * unit(rng);
        const double pitch = 0.2 + 0.8 * unit(rng);
        for (int a = 0; a < spec.atoms; ++a) {
            const double phi = curl * a;
            frame.col(a) << 2.0 * std::cos(phi), 2.0 * std::sin(phi), pitch * a;
        }
        const Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        const Eigen::Vector3d shift(5.0 * gauss(rng), 5.0 * gauss(rng), 5.0 * gauss(rng));
        for (int a = 0; a < spec.atoms; ++a) {
            Eigen::Vector3d x = q.normalized() * frame.col(a) + shift;
            if (spec.noise > 0.0) x += spec.noise * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
            ps.points.row(f).segment<3>(3 * a) = x.transpose();
        }
    }
    return ps;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_real(std::string_view field, std::size_t line_no) {
    field = trim(field);
    if (field.empty()) throw ParseError("empty field", line_no);
    if (field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("not a number: '" + std::string(field) + "'", line_no);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(field) + "'", line_no);
    return v;
}

std::vector<double> parse_xyz_row(std::string_view line, std::size_t line_no) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const auto start = line.find_first_not_of(" \t\r,", pos);
        if (start == std::string_view::npos) break;
        auto end = line.find_first_of(" \t\r,", start);
        if (end == std::string_view::npos) end = line.size();
        out.push_back(parse_real(line.substr(start, end - start), line_no));
        pos = end;
    }
    if (out.size() != 3)
        throw ParseError("expected 3 coordinates per atom line, got " + std::to_string(out.size()), line_no);
    return out;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        f(text.substr(pos, end - pos), line_no);
        if (end == text.size()) break;
        pos = end + 1;
    }
}

}  // namespace

std::vector<double> parse_csv_row(std::string_view line, std::size_t line_no) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(parse_real(line.substr(pos), line_no));
            break;
        }
        out.push_back(parse_real(line.substr(pos, comma - pos), line_no));
        pos = comma + 1;
    }
    return out;
}

PointSet parse_points(std::string_view text, const LoadOptions& opts) {
    std::vector<double> values;
    Eigen::Index width = -1;
    Eigen::Index rows = 0;

    if (opts.format == PointFormat::csv) {
        for_each_line(text, [&](std::string_view line, std::size_t line_no) {
            if (opts.header && line_no == 1) return;
            if (trim(line).empty()) return;
            auto row = parse_csv_row(line, line_no);
            if (width < 0) width = static_cast<Eigen::Index>(row.size());
            if (static_cast<Eigen::Index>(row.size()) != width)
                throw ParseError("expected " + std::to_string(width) + " fields, got " + std::to_string(row.size()),
                                 line_no);
            values.insert(values.end(), row.begin(), row.end());
            ++rows;
        });
    } else {
        if (!opts.atoms_per_frame || *opts.atoms_per_frame <= 0)
            throw ValidationError("xyz-frames input requires a positive atoms_per_frame");
        const int atoms = *opts.atoms_per_frame;
        width = 3 * atoms;
        std::size_t atom_lines = 0;
        std::size_t frame_start = 0;
        std::size_t last_line = 0;
        for_each_line(text, [&](std::string_view line, std::size_t line_no) {
            last_line = line_no;
            if (trim(line).empty()) return;
            if (atom_lines % static_cast<std::size_t>(atoms) == 0) frame_start = line_no;
            auto xyz = parse_xyz_row(line, line_no);
            values.insert(values.end(), xyz.begin(), xyz.end());
            ++atom_lines;
        });
        if (atom_lines % static_cast<std::size_t>(atoms) != 0)
            throw ParseError("incomplete frame: " + std::to_string(atom_lines % atoms) + " of " +
                                 std::to_string(atoms) + " atoms starting at line " + std::to_string(frame_start),
                             last_line);
        rows = static_cast<Eigen::Index>(atom_lines / static_cast<std::size_t>(atoms));
    }

    PointSet ps;
    ps.metric = opts.metric;
    if (rows > 0) ps.points = Eigen::Map<const RowMatrix>(values.data(), rows, width);
    if (ps.metric == Metric::aligned_rmsd) {
        if (opts.atoms_per_frame)
            ps.atoms_per_frame = *opts.atoms_per_frame;
        else if (width > 0 && width % 3 == 0)
            ps.atoms_per_frame = static_cast<int>(width / 3);
    }
    ps.validate_queries();
    return ps;
}

PointSet load_points(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_points(buf.str(), opts);
}

void write_csv_row(std::ostream& os, std::span<const double> values) {
    char buf[32];
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (j) os.put(',');
        const auto res = std::to_chars(buf, buf + sizeof buf, values[j]);
        os.write(buf, res.ptr - buf);
    }
    os.put('\n');
}

void save_points(const PointSet& ps, const std::filesystem::path& path, PointFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    if (format == PointFormat::csv) {
        for (Eigen::Index i = 0; i < ps.size(); ++i)
            write_csv_row(out, std::span<const double>(ps.points.row(i).data(), static_cast<std::size_t>(ps.dim())));
    } else {
        if (ps.dim() % 3 != 0) throw ValidationError("xyz-frames output requires K divisible by 3");
        char buf[32];
        for (Eigen::Index i = 0; i < ps.size(); ++i) {
            for (Eigen::Index a = 0; a < ps.dim(); a += 3) {
                for (int c = 0; c < 3; ++c) {
                    if (c) out.put(' ');
                    const auto res = std::to_chars(buf, buf + sizeof buf, ps.points(i, a + c));
                    out.write(buf, res.ptr - buf);
                }
                out.put('\n');
            }
        }
    }
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace ldmaps
