#include "ldmaps/dataset_io.hpp"
#include "ldmaps/error.hpp"
#include "ldmaps/model_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ldmaps;
using ldmaps::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

}  // namespace

TEST(SwissRoll, ShapeAndDeterminism) {
    SwissRollSpec spec;
    spec.n = 4;
    spec.seed = 1;
    EXPECT_EQ(generate_swiss_roll(spec).points.points, generate_swiss_roll(spec).points.points);
    spec.n = 20000;
    spec.seed = 7;
    const SwissRoll r = generate_swiss_roll(spec);
    EXPECT_EQ(r.points.size(), 20000);
    EXPECT_EQ(r.points.dim(), 3);
    EXPECT_EQ(r.points.metric, Metric::euclidean);
    spec.n = 3;
    EXPECT_THROW(generate_swiss_roll(spec), ValidationError);
    spec.n = 10;
    spec.noise = -1;
    EXPECT_THROW(generate_swiss_roll(spec), ValidationError);
}

TEST(SwissRoll, RadiusInvertsToSpiralParameter) {
    SwissRollSpec spec;
    spec.n = 1000;
    spec.seed = 2;
    const SwissRoll r = generate_swiss_roll(spec);
    const double pi = std::acos(-1.0);
    for (Eigen::Index i = 0; i < 1000; ++i) {
        const double x = r.points.points(i, 0), y = r.points.points(i, 1), z = r.points.points(i, 2);
        const double t = std::sqrt(x * x + z * z);
        EXPECT_NEAR(t, r.t[static_cast<std::size_t>(i)], 1e-12);
        EXPECT_GE(t, 1.5 * pi - 1e-12);
        EXPECT_LE(t, 4.5 * pi + 1e-12);
        EXPECT_NEAR(x, t * std::cos(t), 1e-9);
        EXPECT_GE(y, 0.0);
        EXPECT_LE(y, 21.0);
    }
}

TEST(ChainFrames, LayoutAndMetric) {
    ChainSpec spec;
    spec.n = 50;
    spec.atoms = 24;
    spec.seed = 3;
    const PointSet ps = generate_chain_frames(spec);
    EXPECT_EQ(ps.size(), 50);
    EXPECT_EQ(ps.dim(), 72);
    EXPECT_EQ(ps.metric, Metric::aligned_rmsd);
    EXPECT_EQ(ps.atoms_per_frame, 24);
    EXPECT_EQ(generate_chain_frames(spec).points, ps.points);
}

TEST(Csv, ParsesRows) {
    const PointSet ps = parse_points("0,0\n3,4\n");
    ASSERT_EQ(ps.size(), 2);
    EXPECT_EQ(ps.points(1, 1), 4.0);
    const PointSet h = parse_points("x,y\n1, 2\n3,4.5e-1\n", LoadOptions{PointFormat::csv, Metric::euclidean, true, {}});
    EXPECT_EQ(h.points(1, 1), 0.45);
}

TEST(Csv, RaggedRowNamesLine) {
    try {
        parse_points("1,2\n3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    try {
        parse_points("1,2\n3,4\n5,abc\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_csv_row("1,,2", 7), ParseError);
    EXPECT_THROW(parse_csv_row("1,nan", 1), ParseError);
}

TEST(Csv, RmsdNeedsWholeAtoms) {
    LoadOptions o;
    o.metric = Metric::aligned_rmsd;
    EXPECT_THROW(parse_points("1,2,3,4\n5,6,7,8\n", o), Error);
    const PointSet ps = parse_points("1,2,3,4,5,6\n6,5,4,3,2,1\n", o);
    EXPECT_EQ(ps.atoms_per_frame, 2);
}

TEST(XyzFrames, FlattensAtoms) {
    LoadOptions o;
    o.format = PointFormat::xyz_frames;
    o.metric = Metric::aligned_rmsd;
    o.atoms_per_frame = 2;
    const PointSet ps = parse_points("0 0 0\n1 0 0\n0 0 1\n0 1 1\n", o);
    ASSERT_EQ(ps.size(), 2);
    ASSERT_EQ(ps.dim(), 6);
    EXPECT_EQ(ps.points(1, 4), 1.0);
    EXPECT_THROW(parse_points("0 0 0\n1 0 0\n0 0 1\n", o), ParseError);
}

TEST(Points, SaveLoadIsBitIdentical) {
    TempDir tmp;
    SwissRollSpec spec;
    spec.n = 20000;
    spec.seed = 7;
    spec.noise = 0.1;
    const PointSet ps = generate_swiss_roll(spec).points;
    save_points(ps, tmp / "roll.csv");
    EXPECT_EQ(load_points(tmp / "roll.csv").points, ps.points);

    ChainSpec cs;
    cs.n = 5;
    cs.atoms = 4;
    const PointSet frames = generate_chain_frames(cs);
    save_points(frames, tmp / "f.xyz", PointFormat::xyz_frames);
    LoadOptions o;
    o.format = PointFormat::xyz_frames;
    o.metric = Metric::aligned_rmsd;
    o.atoms_per_frame = 4;
    EXPECT_EQ(load_points(tmp / "f.xyz", o).points, frames.points);
}

TEST(Points, IoErrors) {
    TempDir tmp;
    EXPECT_THROW(load_points(tmp / "missing.csv"), IoError);
    EXPECT_THROW(save_points(parse_points("0,0\n1,1\n"), tmp / "no" / "such" / "dir.csv"), IoError);
}

class ModelFile : public ::testing::Test {
protected:
    void SetUp() override {
        ps = ldmaps::testing::small_roll(400, 5);
        d = pairwise_distances(ps);
        KernelConfig cfg;
        cfg.mode = KernelConfig::Mode::auto_min_connected;
        full = fit_diffusion_map(ps, d, cfg, 2);
        ls = select_kmedoids(d, 60, 2);
        landmark = fit_landmark_map(ps, ls, full.epsilon, 2);
        queries = ldmaps::testing::small_roll(50, 6);
    }
    PointSet ps, queries;
    DistanceMatrix d;
    DiffusionModel full;
    LandmarkSet ls;
    LandmarkModel landmark;
    TempDir tmp;
};

TEST_F(ModelFile, FullModelRoundTripsBitForBit) {
    save_model(full, tmp / "f.ldm");
    const Model back = load_model(tmp / "f.ldm");
    ASSERT_TRUE(std::holds_alternative<DiffusionModel>(back));
    const auto& m = std::get<DiffusionModel>(back);
    EXPECT_EQ(m.epsilon, full.epsilon);
    EXPECT_EQ(m.eigenvectors, full.eigenvectors);
    EXPECT_EQ(nystrom_extend(m, queries), nystrom_extend(full, queries));
    EXPECT_EQ(slurp(tmp / "f.ldm").substr(0, 12), "LDMM 1 full\n");
}

TEST_F(ModelFile, LandmarkModelRoundTripsBitForBit) {
    save_model(landmark, tmp / "l.ldm");
    const Model back = load_model(tmp / "l.ldm");
    ASSERT_TRUE(std::holds_alternative<LandmarkModel>(back));
    const auto& m = std::get<LandmarkModel>(back);
    EXPECT_EQ(m.multiplicities, landmark.multiplicities);
    EXPECT_EQ(landmark_nystrom(m, queries), landmark_nystrom(landmark, queries));
}

TEST_F(ModelFile, RmsdMetadataSurvives) {
    ChainSpec cs;
    cs.n = 60;
    cs.atoms = 5;
    const PointSet frames = generate_chain_frames(cs);
    KernelConfig cfg;
    cfg.mode = KernelConfig::Mode::auto_min_connected;
    const DiffusionModel m = fit_diffusion_map(frames, cfg, 2);
    save_model(m, tmp / "r.ldm");
    const Model loaded = load_model(tmp / "r.ldm");
    const auto& back = std::get<DiffusionModel>(loaded);
    EXPECT_EQ(back.metric, Metric::aligned_rmsd);
    EXPECT_EQ(back.atoms_per_frame, 5);
}

TEST_F(ModelFile, CorruptionIsDetected) {
    save_model(full, tmp / "f.ldm");
    std::string bytes = slurp(tmp / "f.ldm");
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    spit(tmp / "flipped.ldm", flipped);
    EXPECT_THROW(load_model(tmp / "flipped.ldm"), ParseError);
    spit(tmp / "short.ldm", bytes.substr(0, bytes.size() - 9));
    EXPECT_THROW(load_model(tmp / "short.ldm"), ParseError);
    spit(tmp / "magic.ldm", "LDMX" + bytes.substr(4));
    EXPECT_THROW(load_model(tmp / "magic.ldm"), ParseError);
    spit(tmp / "version.ldm", "LDMM 9" + bytes.substr(6));
    EXPECT_THROW(load_model(tmp / "version.ldm"), ParseError);
    EXPECT_THROW(load_model(tmp / "absent.ldm"), IoError);
}

TEST(MetricNames, RoundTrip) {
    EXPECT_EQ(parse_metric("rmsd"), Metric::aligned_rmsd);
    EXPECT_EQ(parse_metric(to_string(Metric::euclidean)), Metric::euclidean);
    EXPECT_EQ(parse_metric(to_string(Metric::aligned_rmsd)), Metric::aligned_rmsd);
    EXPECT_THROW(parse_metric("manhattan"), ValidationError);
}
