#include "mspgm/optimizer.hpp"
#include "mspgm/parallel.hpp"
#include "mspgm/random.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

using namespace mspgm;

TEST(ChunkRanges, CoversEverythingOnce) {
    const auto r = chunk_ranges(10, 4);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0], (std::pair<std::size_t, std::size_t>{0, 4}));
    EXPECT_EQ(r[1], (std::pair<std::size_t, std::size_t>{4, 4}));
    EXPECT_EQ(r[2], (std::pair<std::size_t, std::size_t>{8, 2}));
    EXPECT_TRUE(chunk_ranges(0, 4).empty());
}

TEST(ParallelFor, RunsEveryIndexOnce) {
    for (int threads : {1, 2, 4}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
    for (int threads : {1, 3}) {
        try {
            parallel_for(20, threads, [](std::size_t i) {
                if (i == 5 || i == 12) throw std::runtime_error(std::to_string(i));
            });
            FAIL() << "expected an exception";
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "5");
        }
    }
}

TEST(Seeds, DerivedStreamsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
        for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(7, a, b));
    EXPECT_EQ(seen.size(), 2500u);
    EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
    EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
    auto s1 = path_stream(3, 0), s2 = path_stream(3, 0), s3 = path_stream(3, 1);
    EXPECT_EQ(s1(), s2());
    EXPECT_NE(s2(), s3());
}

TEST(Optimizer, SgdStep) {
    Optimizer opt({OptimizerConfig::Kind::Sgd, 0.1}, 2);
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.5, -1.0};
    opt.step(p, g);
    EXPECT_DOUBLE_EQ(p[0], 0.95);
    EXPECT_DOUBLE_EQ(p[1], -1.9);
}

// Bias correction makes the first Adam step lr * g / (|g| + eps') for every coordinate.
TEST(Optimizer, AdamFirstStepHasLearningRateMagnitude) {
    OptimizerConfig cfg;
    cfg.learning_rate = 0.01;
    Optimizer opt(cfg, 3);
    std::vector<double> p{0.0, 0.0, 0.0};
    const std::vector<double> g{3.0, -0.2, 100.0};
    opt.step(p, g);
    EXPECT_NEAR(p[0], -0.01, 1e-9);
    EXPECT_NEAR(p[1], 0.01, 1e-7);
    EXPECT_NEAR(p[2], -0.01, 1e-9);
}

TEST(Optimizer, AdamMinimizesQuadratic) {
    OptimizerConfig cfg;
    cfg.learning_rate = 0.05;
    Optimizer opt(cfg, 2);
    std::vector<double> p{3.0, -4.0};
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> g{2 * (p[0] - 1.0), 8 * (p[1] + 0.5)};
        opt.step(p, g);
    }
    EXPECT_NEAR(p[0], 1.0, 1e-3);
    EXPECT_NEAR(p[1], -0.5, 1e-3);
}

TEST(Optimizer, SizeMismatchRejected) {
    Optimizer opt({}, 2);
    std::vector<double> p{0.0, 0.0};
    const std::vector<double> g{1.0};
    EXPECT_ANY_THROW(opt.step(p, g));
}
