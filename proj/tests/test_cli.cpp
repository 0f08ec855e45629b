#include "ldmaps/dataset_io.hpp"
#include "ldmaps/landmarks.hpp"
#include "ldmaps/landmark_dmap.hpp"
#include "ldmaps/model_io.hpp"
#include "ldmaps/spectral.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ldmaps;
using ldmaps::testing::TempDir;

namespace {

struct Outcome {
    int code;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    Outcome run(const std::string& args, const std::string& stdin_file = "") {
        const auto err = tmp / "stderr.txt";
        std::string cmd = std::string(LDMAPS_CLI) + " " + args + " 2>" + err.string();
        if (!stdin_file.empty()) cmd += " <" + stdin_file;
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
    }

    static std::string slurp(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string path(const std::string& name) const { return (tmp / name).string(); }

    static EmbeddingMatrix read_embedding(const std::string& file) {
        LoadOptions o;
        o.header = true;
        return load_points(file, o).points;
    }

    TempDir tmp;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("gen swiss-roll --n 10").code, 2);
    EXPECT_EQ(run("no-such-command").code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, GenIsReproducible) {
    ASSERT_EQ(run("gen swiss-roll --n 200 --seed 3 --out " + path("a.csv")).code, 0);
    ASSERT_EQ(run("gen swiss-roll --n 200 --seed 3 --out " + path("b.csv")).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(load_points(path("a.csv")).size(), 200);
    ASSERT_EQ(run("gen chain --n 20 --atoms 6 --out " + path("c.csv")).code, 0);
    EXPECT_EQ(load_points(path("c.csv")).dim(), 18);
}

TEST_F(Cli, InvalidArgumentsExitThree) {
    run("gen swiss-roll --n 100 --out " + path("r.csv"));
    EXPECT_EQ(run("fit --input " + path("r.csv") + " --epsilon -1 --out " + path("m.ldm")).code, 3);
    EXPECT_EQ(run("fit --input " + path("r.csv") + " --k 200 --out " + path("m.ldm")).code, 3);
    EXPECT_FALSE(std::filesystem::exists(path("m.ldm")));
}

TEST_F(Cli, BadInputAndMissingFiles) {
    std::ofstream(path("ragged.csv")) << "1,2\n3\n";
    const Outcome r = run("fit --input " + path("ragged.csv") + " --out " + path("m.ldm"));
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("2"), std::string::npos);
    EXPECT_EQ(run("fit --input " + path("absent.csv") + " --out " + path("m.ldm")).code, 5);
}

TEST_F(Cli, AutoEpsilonIsLogged) {
    std::ofstream(path("line.csv")) << "0\n1\n3\n";
    const Outcome r = run("fit --input " + path("line.csv") + " --k 1 --out " + path("m.ldm"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("epsilon=4"), std::string::npos) << r.err;
}

TEST_F(Cli, FullModelEmbedsItsTrainingSet) {
    ASSERT_EQ(run("gen swiss-roll --n 400 --seed 1 --out " + path("r.csv")).code, 0);
    ASSERT_EQ(run("fit --input " + path("r.csv") + " --k 2 --out " + path("m.ldm")).code, 0);
    ASSERT_EQ(run("embed --model " + path("m.ldm") + " --input " + path("r.csv") + " --out " + path("e.csv")).code, 0);
    EXPECT_EQ(slurp(path("e.csv")).substr(0, 10), "psi2,psi3\n");
    const Model loaded = load_model(path("m.ldm"));
    const auto& model = std::get<DiffusionModel>(loaded);
    const EmbeddingMatrix e = read_embedding(path("e.csv"));
    EXPECT_LT((e - embed_training(model)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(Cli, StreamMatchesBatchForLandmarkModel) {
    ASSERT_EQ(run("gen swiss-roll --n 500 --seed 2 --out " + path("r.csv")).code, 0);
    ASSERT_EQ(run("gen swiss-roll --n 60 --seed 9 --out " + path("q.csv")).code, 0);
    ASSERT_EQ(run("fit --input " + path("r.csv") + " --landmarks kmedoids --m 80 --seed 4 --landmarks-out " +
                  path("l.csv") + " --out " + path("m.ldm"))
                  .code,
              0);
    const std::string model = " --model " + path("m.ldm");
    ASSERT_EQ(run("embed" + model + " --input " + path("q.csv") + " --out " + path("batch.csv")).code, 0);
    ASSERT_EQ(run("embed" + model + " --stream --input - --out - >" + path("stream.csv"), path("q.csv")).code, 0);
    EXPECT_EQ(slurp(path("batch.csv")), slurp(path("stream.csv")));

    const Model loaded = load_model(path("m.ldm"));
    const auto& lm = std::get<LandmarkModel>(loaded);
    const EmbeddingMatrix direct = landmark_nystrom(lm, load_points(path("q.csv")));
    EXPECT_EQ(read_embedding(path("batch.csv")), direct);
    EXPECT_EQ(load_landmarks(path("l.csv")).indices.size(), 80u);
}

TEST_F(Cli, MetricMismatchIsRejected) {
    run("gen swiss-roll --n 100 --out " + path("r.csv"));
    ASSERT_EQ(run("fit --input " + path("r.csv") + " --k 1 --out " + path("m.ldm")).code, 0);
    EXPECT_EQ(run("embed --model " + path("m.ldm") + " --metric rmsd --input " + path("r.csv") + " --out " +
                  path("e.csv"))
                  .code,
              3);
}

TEST_F(Cli, BenchWithAllPointsAsLandmarks) {
    run("gen swiss-roll --n 600 --seed 5 --out " + path("r.csv"));
    ASSERT_EQ(run("bench --input " + path("r.csv") + " --m-grid 480 --repeats 3 --out " + path("b.csv")).code, 0);
    std::istringstream in(slurp(path("b.csv")));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(header, "N,M,t_full_ms,t_landmark_ms,S");
    const std::vector<double> v = parse_csv_row(line, 2);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v[0], 480);
    EXPECT_EQ(v[1], 480);
    EXPECT_GT(v[4], 0.3);
    EXPECT_LT(v[4], 3.0);
}

TEST_F(Cli, PredictErrorWithAllLandmarksIsZero) {
    run("gen swiss-roll --n 150 --seed 6 --out " + path("r.csv"));
    ASSERT_EQ(run("predict-error --input " + path("r.csv") + " --landmarks all --out " + path("p.csv")).code, 0);
    std::istringstream in(slurp(path("p.csv")));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "index,sigma_pred,sigma_expt");
    int rows = 0;
    while (std::getline(in, line)) {
        const auto v = parse_csv_row(line, 1);
        EXPECT_EQ(v[1], 0.0);
        EXPECT_LT(v[2], 1e-9);
        ++rows;
    }
    EXPECT_EQ(rows, 150);
}

TEST_F(Cli, EvaluateWritesTables) {
    run("gen swiss-roll --n 300 --seed 7 --out " + path("r.csv"));
    ASSERT_EQ(run("evaluate --input " + path("r.csv") + " --method both --m-grid 40,120 --folds 3 --only-fold 0 " +
                  "--out " + path("e.csv") + " --summary " + path("s.csv"))
                  .code,
              0);
    const std::string table = slurp(path("e.csv"));
    EXPECT_EQ(table.substr(0, table.find('\n')), "fold,method,seed,M,M_over_N,epsilon,Z_train,Z_test");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
    EXPECT_EQ(slurp(path("s.csv")).substr(0, 9), "grouping,");
}

TEST_F(Cli, NoTemporariesLeftBehind) {
    run("gen swiss-roll --n 100 --out " + path("r.csv"));
    run("fit --input " + path("r.csv") + " --epsilon -1 --out " + path("bad.ldm"));
    run("fit --input " + path("r.csv") + " --out " + path("good.ldm"));
    for (const auto& entry : std::filesystem::directory_iterator(tmp.path()))
        EXPECT_NE(entry.path().extension(), ".tmp") << entry.path();
    EXPECT_TRUE(std::filesystem::exists(path("good.ldm")));
    EXPECT_FALSE(std::filesystem::exists(path("bad.ldm")));
}
