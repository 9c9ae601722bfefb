#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rydberg/blockade.hpp"
#include "rydberg/fixtures.hpp"

using namespace rydberg;

namespace {

double mhz(double f) { return units::mhz_to_rad(f); }
double um(double x) { return units::um_to_m(x); }

TabulatedBlockade two_point_table() {
    return TabulatedBlockade{{{um(4), mhz(100)}, {um(16), mhz(1)}}, {}};
}

}  // namespace

TEST(BlockadeShift, ConstantIgnoresSeparation) {
    const BlockadeModel m = ConstantBlockade{mhz(10)};
    for (double r : {0.5, 5.0, 100.0}) {
        EXPECT_EQ(blockade_shift(m, um(r)), mhz(10));
    }
}

TEST(BlockadeShift, VanDerWaalsAnchor) {
    const BlockadeModel m = vdw_anchored(fixtures::anchor_blockade(), um(5));
    EXPECT_NEAR(blockade_shift(m, um(5)) / fixtures::anchor_blockade(), 1.0, 1e-12);
    EXPECT_NEAR(units::rad_to_mhz(blockade_shift(m, um(10))), 2300.0 / 64.0, 1e-9);
    EXPECT_NEAR(units::rad_to_mhz(blockade_shift(m, um(10))), 35.9, 0.05);
}

TEST(BlockadeShift, FixtureC6MatchesAnchor) {
    const BlockadeModel m = VanDerWaalsBlockade{units::ghz_to_rad(fixtures::anchor_c6_ghz_um6()) * 1e-36};
    EXPECT_NEAR(blockade_shift(m, um(5)) / fixtures::anchor_blockade(), 1.0, 1e-12);
}

TEST(BlockadeShift, TableLogLogMidpoint) {
    const BlockadeModel m = two_point_table();
    EXPECT_NEAR(blockade_shift(m, um(8)) / mhz(10), 1.0, 1e-12);
    // Linear interpolation would give about 2pi * 67 MHz here.
    EXPECT_LT(blockade_shift(m, um(8)), mhz(11));
}

TEST(BlockadeShift, TableReproducesSamples) {
    const TabulatedBlockade t{{{um(3), mhz(5000)}, {um(4.5), mhz(700)}, {um(7), mhz(40)}, {um(12), mhz(1.2)}}, {}};
    for (const auto &s : t.samples) {
        EXPECT_EQ(blockade_shift(t, s.separation), s.shift);
    }
}

TEST(BlockadeShift, TableRejectsExtrapolation) {
    const BlockadeModel m = two_point_table();
    EXPECT_THROW(blockade_shift(m, um(3.9)), ValidationError);
    EXPECT_THROW(blockade_shift(m, um(16.1)), ValidationError);
    EXPECT_NO_THROW(blockade_shift(m, um(16)));
}

TEST(BlockadeShift, RejectsNonPositiveSeparation) {
    const BlockadeModel m = ConstantBlockade{mhz(1)};
    EXPECT_THROW(blockade_shift(m, 0.0), ValidationError);
    EXPECT_THROW(blockade_shift(m, -1e-6), ValidationError);
}

TEST(BlockadeModel, Validation) {
    EXPECT_THROW(validate(ConstantBlockade{0.0}), ValidationError);
    EXPECT_NO_THROW(validate(ConstantBlockade{kInfinity}));
    EXPECT_THROW(validate(VanDerWaalsBlockade{-1.0}), ValidationError);
    EXPECT_THROW(validate(TabulatedBlockade{{{um(4), mhz(1)}}, {}}), ValidationError);
    EXPECT_THROW(validate(TabulatedBlockade{{{um(4), mhz(1)}, {um(4), mhz(2)}}, {}}), ValidationError);
    EXPECT_THROW(validate(TabulatedBlockade{{{um(4), mhz(1)}, {um(5), 0.0}}, {}}), ValidationError);
}

TEST(BlockadeModel, CsvParsing) {
    std::istringstream in("# comment\nR_um,B_MHz\n4,100\n16, 1\n");
    const auto t = parse_blockade_table(in);
    ASSERT_EQ(t.samples.size(), 2U);
    EXPECT_EQ(t, two_point_table());

    std::istringstream bad("4,100\n8,abc\n");
    EXPECT_THROW(parse_blockade_table(bad), ValidationError);
    std::istringstream unsorted("8,10\n4,100\n");
    EXPECT_THROW(parse_blockade_table(unsorted), ValidationError);
    EXPECT_THROW(load_blockade_table("/nonexistent/table.csv"), ValidationError);
}

TEST(BlockadeProperty, VanDerWaalsDoublingIsTwoToMinusSix) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> log_c6(30.0, 50.0), log_r(-7.0, -4.0);
    for (int i = 0; i < 200; ++i) {
        const BlockadeModel m = VanDerWaalsBlockade{std::exp(log_c6(rng)) * 1e-36};
        const double r = std::exp(log_r(rng));
        EXPECT_NEAR(blockade_shift(m, 2 * r) / blockade_shift(m, r), 1.0 / 64.0, 1e-15);
    }
}

TEST(BlockadeProperty, PositiveAndNonIncreasing) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        // Random table with decreasing B.
        TabulatedBlockade t;
        double r = 2.0 + 2.0 * u(rng), b = 1e4 * (1.0 + u(rng));
        for (int k = 0; k < 6; ++k) {
            t.samples.push_back({um(r), mhz(b)});
            r += 0.5 + 3.0 * u(rng);
            b *= 0.05 + 0.9 * u(rng);
        }
        validate(t);
        const VanDerWaalsBlockade v{std::exp(30.0 + 20.0 * u(rng)) * 1e-36};
        const double lo = t.samples.front().separation, hi = t.samples.back().separation;
        double prev_t = kInfinity, prev_v = kInfinity;
        for (int k = 0; k <= 100; ++k) {
            const double x = k == 100 ? hi : lo + (hi - lo) * k / 100.0;
            const double bt = blockade_shift(t, x), bv = blockade_shift(v, x);
            EXPECT_GT(bt, 0.0);
            EXPECT_GT(bv, 0.0);
            EXPECT_LE(bt, prev_t * (1.0 + 1e-12));
            EXPECT_LE(bv, prev_v);
            prev_t = bt;
            prev_v = bv;
        }
    }
}

TEST(CollectiveRabi, SqrtN) {
    const double w = mhz(1);
    EXPECT_EQ(collective_rabi(1, w), w);
    EXPECT_DOUBLE_EQ(collective_rabi(2, w), std::sqrt(2.0) * w);
    EXPECT_DOUBLE_EQ(collective_rabi(4, w), mhz(2));
    EXPECT_THROW(collective_rabi(0, w), ValidationError);
    EXPECT_THROW(collective_rabi(2, 0.0), ValidationError);
}
