#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "kerodeepc/datagen.hpp"
#include "test_support.hpp"

using namespace kerodeepc;
using namespace kerodeepc::datagen;
using kerodeepc::testing::in_convex_hull_2d;
using kerodeepc::testing::random_matrix;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("kerodeepc_test_" + name);
    fs::remove_all(dir);
    return dir;
}

Box unit_box(Index dim) { return Box{Vector::Zero(dim), Vector::Ones(dim)}; }

}  // namespace

TEST(Multisine, SingleToneSpansTheRange) {
    ExcitationConfig cfg;
    cfg.length = 400;
    cfg.band_low = cfg.band_high = 0.1;
    cfg.num_sinusoids = 1;
    cfg.num_trials = 1;
    const Matrix s = multisine(cfg, 1);
    EXPECT_NEAR(s.minCoeff(), -1.0, 1e-12);
    EXPECT_NEAR(s.maxCoeff(), 1.0, 1e-12);
}

TEST(Multisine, WithinRangeForManySeeds) {
    ExcitationConfig cfg;
    cfg.length = 150;
    cfg.amplitude_low = -0.3;
    cfg.amplitude_high = 0.7;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        cfg.seed = seed;
        const Matrix s = multisine(cfg, 2);
        EXPECT_GE(s.minCoeff(), -0.3 - 1e-12);
        EXPECT_LE(s.maxCoeff(), 0.7 + 1e-12);
        EXPECT_TRUE(s.allFinite());
    }
}

TEST(Multisine, DeterministicAndSeedSensitive) {
    ExcitationConfig cfg;
    cfg.length = 64;
    EXPECT_EQ(multisine(cfg, 1), multisine(cfg, 1));
    ExcitationConfig other = cfg;
    other.seed = 1;
    EXPECT_NE(multisine(cfg, 1), multisine(other, 1));
}

TEST(Multisine, RejectsBadBand) {
    ExcitationConfig cfg;
    cfg.band_low = 0.6;
    cfg.band_high = 0.5;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(HankelWindows, ShiftedColumns) {
    Matrix s(1, 5);
    s << 1, 2, 3, 4, 5;
    const Matrix h = hankel_windows(s, 3, 3);
    Matrix expected(3, 3);
    expected << 1, 2, 3, 2, 3, 4, 3, 4, 5;
    EXPECT_EQ(h, expected);
    EXPECT_THROW((void)hankel_windows(s, 3, 4), DimensionError);
}

TEST(Halton, BaseTwoSequence) {
    const Matrix h = halton(1, 3, unit_box(1));
    EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(h(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(h(0, 2), 0.75);
}

TEST(Halton, TwoDimensionalFirstPoint) {
    const Matrix h = halton(2, 4, unit_box(2));
    EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
    EXPECT_NEAR(h(1, 0), 1.0 / 3.0, 1e-16);
}

TEST(Halton, InsideBox) {
    Box box{(Vector(2) << -3, 1).finished(), (Vector(2) << 2, 4).finished()};
    const Matrix h = halton(2, 100, box);
    for (Index j = 0; j < h.cols(); ++j) EXPECT_TRUE(box.contains(h.col(j)));
}

TEST(KMeans, EachPointItsOwnCluster) {
    std::mt19937_64 rng(1);
    const Matrix pts = random_matrix(2, 6, rng);
    KMeansConfig cfg;
    cfg.k = 6;
    cfg.box = Box{Vector::Constant(2, -1), Vector::Constant(2, 1)};
    const auto res = kmeans(pts, cfg);
    for (Index j = 0; j < pts.cols(); ++j) {
        double best = 1e300;
        for (Index c = 0; c < 6; ++c) best = std::min(best, (res.centroids.col(c) - pts.col(j)).norm());
        EXPECT_LT(best, 1e-12);
    }
    EXPECT_NEAR(res.objective.back(), 0.0, 1e-20);
}

TEST(KMeans, TwoBlobsRecovered) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 0.3);
    Matrix pts(2, 200);
    for (Index j = 0; j < 200; ++j) {
        const double c = j < 100 ? 0.0 : 10.0;
        pts(0, j) = c + noise(rng);
        pts(1, j) = c + noise(rng);
    }
    const Vector m0 = pts.leftCols(100).rowwise().mean();
    const Vector m1 = pts.rightCols(100).rowwise().mean();
    KMeansConfig cfg;
    cfg.k = 2;
    cfg.box = Box{Vector::Constant(2, -2), Vector::Constant(2, 12)};
    const auto res = kmeans(pts, cfg);
    const Vector a = res.centroids.col(0), b = res.centroids.col(1);
    const double d = std::min(std::max((a - m0).norm(), (b - m1).norm()),
                              std::max((a - m1).norm(), (b - m0).norm()));
    EXPECT_LT(d, 0.5);
}

TEST(KMeans, ObjectiveNeverIncreases) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix pts = random_matrix(2, 80, rng, 3.0);
        KMeansConfig cfg;
        cfg.k = 7;
        cfg.seed = seed;
        cfg.init = seed % 2 ? CentroidInit::Uniform : CentroidInit::Halton;
        cfg.box = Box{Vector::Constant(2, -3), Vector::Constant(2, 3)};
        const auto res = kmeans(pts, cfg);
        for (size_t t = 1; t < res.objective.size(); ++t) {
            EXPECT_LE(res.objective[t], res.objective[t - 1] * (1 + 1e-12) + 1e-12) << "seed " << seed;
        }
        EXPECT_LE(res.iterations, cfg.max_iter);
    }
}

TEST(KMeans, EmptyClustersAreReseeded) {
    // Halton init in a large box leaves most centroids far from the tight cluster.
    std::mt19937_64 rng(3);
    const Matrix pts = random_matrix(2, 30, rng, 0.1);
    KMeansConfig cfg;
    cfg.k = 5;
    cfg.box = Box{Vector::Constant(2, -100), Vector::Constant(2, 100)};
    const auto res = kmeans(pts, cfg);
    std::vector<int> counts(5, 0);
    for (auto a : res.assignment) counts[static_cast<size_t>(a)]++;
    for (int c : counts) EXPECT_GT(c, 0);
}

TEST(KMeans, RejectsTooFewPoints) {
    KMeansConfig cfg;
    cfg.k = 4;
    cfg.box = unit_box(2);
    EXPECT_THROW((void)kmeans(Matrix::Zero(2, 3), cfg), InvalidArgument);
}

TEST(InitialConditions, SingleClusterIsTheMean) {
    plant::VanDerPolPlant vdp;
    ExcitationConfig exc;
    exc.length = 60;
    KMeansConfig km;
    km.k = 1;
    km.box = Box{Vector::Constant(2, -4), Vector::Constant(2, 4)};
    const auto ic = generate_initial_conditions(vdp, Vector::Zero(2), exc, km);
    EXPECT_LT((ic.x0.col(0) - ic.visited.rowwise().mean()).norm(), 1e-12);
}

TEST(InitialConditions, ZeroInputFromOriginStaysAtOrigin) {
    plant::VanDerPolPlant vdp;
    ExcitationConfig exc;
    exc.length = 40;
    exc.amplitude_low = -1e-300;
    exc.amplitude_high = 1e-300;
    KMeansConfig km;
    km.k = 3;
    km.box = Box{Vector::Constant(2, -1), Vector::Constant(2, 1)};
    const auto ic = generate_initial_conditions(vdp, Vector::Zero(2), exc, km);
    EXPECT_LT(ic.x0.cwiseAbs().maxCoeff(), 1e-250);
}

TEST(InitialConditions, CentroidsInsideHullOfVisitedStates) {
    plant::VanDerPolPlant vdp;
    ExcitationConfig exc;
    exc.length = 100;
    exc.seed = 11;
    KMeansConfig km;
    km.k = 20;
    km.box = Box{Vector::Constant(2, -4), Vector::Constant(2, 4)};
    const auto ic = generate_initial_conditions(vdp, (Vector(2) << 0.5, 0).finished(), exc, km);
    ASSERT_EQ(ic.x0.cols(), 20);
    for (Index j = 0; j < 20; ++j) EXPECT_TRUE(in_convex_hull_2d(ic.visited, ic.x0.col(j), 1e-12));
}

TEST(GenerateDataset, OrderingInvariant) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(4);
    const Matrix x0 = random_matrix(2, 3, rng);
    const Matrix u = random_matrix(4, 5, rng);
    const auto d = generate_dataset(vdp, x0, u, 4);
    ASSERT_EQ(d.y.rows(), 4);
    ASSERT_EQ(d.y.cols(), 15);
    for (Index j = 0; j < 5; ++j)
        for (Index i = 0; i < 3; ++i)
            EXPECT_EQ(d.y.col(d.column_index(j, i)),
                      plant::simulate_stacked(vdp, x0.col(i), u.col(j)).stacked_outputs());
}

TEST(GenerateDataset, SinglePair) {
    plant::VanDerPolPlant vdp;
    const Vector x = (Vector(2) << 0.2, -0.1).finished();
    const Vector u = (Vector(3) << 0.1, 0.2, 0.3).finished();
    const auto d = generate_dataset(vdp, x, u, 3);
    EXPECT_EQ(d.y.col(0), plant::simulate_stacked(vdp, x, u).stacked_outputs());
}

TEST(GenerateDataset, PermutingInputsPermutesBlocks) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(5);
    const Matrix x0 = random_matrix(2, 4, rng);
    Matrix u = random_matrix(3, 3, rng);
    const auto a = generate_dataset(vdp, x0, u, 3);
    u.col(0).swap(u.col(2));
    const auto b = generate_dataset(vdp, x0, u, 3);
    EXPECT_EQ(a.y.middleCols(0, 4), b.y.middleCols(8, 4));
    EXPECT_EQ(a.y.middleCols(4, 4), b.y.middleCols(4, 4));
}

TEST(GenerateDataset, ReportsDivergentPair) {
    plant::LtiPlant p(Matrix::Constant(1, 1, 100.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    Matrix x0(1, 2);
    x0 << 0.0, 1.0;
    try {
        (void)generate_dataset(p, x0, Matrix::Zero(5, 1), 5);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("initial state 1"), std::string::npos) << e.what();
    }
}

TEST(StackedData, WindowsOfOneRollout) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(6);
    const Matrix signal = random_matrix(1, 12, rng);
    const Vector xs = (Vector(2) << 0.1, 0.0).finished();
    const auto sd = generate_stacked_data(vdp, xs, signal, 3);
    ASSERT_EQ(sd.z.cols(), 10);
    ASSERT_EQ(sd.z.rows(), 5);
    const auto full = plant::simulate(vdp, xs, signal);
    for (Index i = 0; i < 10; ++i) {
        const Vector xi = i == 0 ? xs : Vector(full.states.col(i - 1));
        EXPECT_EQ(sd.z.col(i).head(2), xi);
        EXPECT_EQ(sd.z.col(i).tail(3), signal.row(0).segment(i, 3).transpose());
        EXPECT_EQ(sd.y.col(i), full.outputs.row(0).segment(i, 3).transpose());
    }
}

TEST(DatasetIo, RoundTripIsBitExact) {
    const auto d = kerodeepc::testing::small_vdp_dataset(4, 3, 5, 7);
    const auto dir = temp_dir("roundtrip");
    Dataset tagged = d;
    tagged.provenance = "abc123";
    save_dataset(tagged, dir);
    const auto back = load_dataset(dir);
    EXPECT_EQ(back.x0, d.x0);
    EXPECT_EQ(back.u, d.u);
    EXPECT_EQ(back.y, d.y);
    EXPECT_EQ(back.horizon, 5);
    EXPECT_EQ(back.provenance, "abc123");
    fs::remove_all(dir);
}

TEST(DatasetIo, TruncatedOutputFileIsRejected) {
    const auto d = kerodeepc::testing::small_vdp_dataset(3, 2, 4, 8);
    const auto dir = temp_dir("truncated");
    save_dataset(d, dir);
    std::ifstream in(dir / "y.csv");
    std::string line, kept;
    for (int i = 0; i < 3 && std::getline(in, line); ++i) kept += line + "\n";
    in.close();
    std::ofstream(dir / "y.csv", std::ios::trunc) << kept;
    EXPECT_THROW((void)load_dataset(dir), DimensionError);
    fs::remove_all(dir);
}

TEST(DatasetIo, EmptyDatasetRejectedAtSave) {
    Dataset d;
    d.n = 2;
    d.m = 1;
    d.p = 1;
    d.horizon = 3;
    d.x0 = Matrix::Zero(2, 0);
    d.u = Matrix::Zero(3, 0);
    d.y = Matrix::Zero(3, 0);
    EXPECT_THROW(save_dataset(d, temp_dir("empty")), InvalidArgument);
}

TEST(DatasetIo, MissingDirectoryIsAConfigError) {
    EXPECT_THROW((void)load_dataset(temp_dir("missing")), ConfigError);
}
