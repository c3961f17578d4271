#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <tuple>

#include "uhd/slice_encoding.hpp"

namespace {

using uhd::PatchGrid;
using uhd::PosEmbedGrid;
using uhd::VitSpec;

const VitSpec kVit = VitSpec::clip_l14_336();

// O(M^2) oracle over every integer pair under the same feasibility rules and
// ordering: least log-aspect deviation, then more tokens, then more columns.
PatchGrid brute_force_fit(std::int64_t w, std::int64_t h) {
  const double patch = 14.0;
  const int budget = 576;
  double ic = w / patch;
  double ir = h / patch;
  if (ic * ir > budget) {
    const double a = static_cast<double>(w) / static_cast<double>(h);
    ic = std::sqrt(budget * a);
    ir = std::sqrt(budget / a);
  }
  const double la = std::log(static_cast<double>(w) / static_cast<double>(h));
  std::tuple<double, int, int> best{1e300, 0, 0};
  PatchGrid out{};
  for (int c = 1; c <= budget; ++c) {
    for (int r = 1; r * c <= budget; ++r) {
      if (c > std::ceil(ic) || r > std::ceil(ir) || c * r < std::floor(ic) * std::floor(ir)) {
        continue;
      }
      const std::tuple<double, int, int> key{std::abs(std::log(static_cast<double>(c) / r) - la), -c * r, -c};
      if (key < best) {
        best = key;
        out = {c, r};
      }
    }
  }
  return out;
}

TEST(FitPatchGrid, FrozenExamples) {
  struct Case {
    std::int64_t w, h;
    PatchGrid grid;
  };
  // From a stand-alone exhaustive search over integer patch grids.
  const Case cases[] = {
      {500, 250, {33, 17}},  {336, 336, {24, 24}},  {14, 14, {1, 1}},     {672, 1008, {19, 29}},
      {334, 200, {23, 14}},  {1000, 200, {52, 11}}, {1920, 1080, {32, 18}}, {320, 140, {23, 10}},
      {700, 700, {24, 24}},  {2000, 100, {107, 5}}, {100, 2000, {5, 107}},  {29, 15, {2, 1}},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(uhd::fit_patch_grid(c.w, c.h, kVit), c.grid) << c.w << "x" << c.h;
  }
}

TEST(FitPatchGrid, DegenerateSliceThrows) {
  EXPECT_THROW(uhd::fit_patch_grid(13, 400, kVit), std::invalid_argument);
  EXPECT_THROW(uhd::fit_patch_grid(400, 5, kVit), std::invalid_argument);
}

TEST(FitPatchGridProperty, MatchesBruteForceAndRespectsBudget) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::int64_t> side(14, 1400);
  for (int i = 0; i < 300; ++i) {
    const std::int64_t w = side(rng);
    const std::int64_t h = side(rng);
    const auto grid = uhd::fit_patch_grid(w, h, kVit);
    EXPECT_EQ(grid, brute_force_fit(w, h)) << w << "x" << h;
    EXPECT_LE(grid.tokens(), 576);
    EXPECT_GE(grid.cols, 1);
    EXPECT_GE(grid.rows, 1);
  }
}

TEST(FitPatchGridProperty, SmallSlicesKeepNativePatchCountsWhenDivisible) {
  for (int c = 1; c <= 24; ++c) {
    for (int r = 1; r * c <= 576 && r <= 40; ++r) {
      EXPECT_EQ(uhd::fit_patch_grid(14 * c, 14 * r, kVit), (PatchGrid{c, r}));
    }
  }
}

TEST(SnapToPatch, RoundsHalfUpWithOnePatchMinimum) {
  EXPECT_EQ(uhd::snap_to_patch(336, 336, 14), (uhd::SnappedSize{336, 336}));
  EXPECT_EQ(uhd::snap_to_patch(20, 21, 14), (uhd::SnappedSize{14, 28}));
  EXPECT_EQ(uhd::snap_to_patch(1, 6, 14), (uhd::SnappedSize{14, 14}));
  EXPECT_EQ(uhd::snap_to_patch(7, 34, 14), (uhd::SnappedSize{14, 28}));
  EXPECT_EQ(uhd::snap_to_patch(35, 48, 14), (uhd::SnappedSize{42, 42}));
  EXPECT_THROW(uhd::snap_to_patch(0, 10, 14), std::invalid_argument);
}

TEST(ReshapePosEmbed, RowMajorLayout) {
  std::vector<double> seq(576 * 2);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    seq[i] = static_cast<double>(i);
  }
  const auto grid = uhd::reshape_pos_embed_1d_to_2d(seq, 576, 2, 24);
  EXPECT_EQ(grid.rows, 24);
  EXPECT_EQ(grid.cols, 24);
  EXPECT_EQ(grid.at(0, 1, 0), 2.0);
  EXPECT_EQ(grid.at(1, 0, 1), 24.0 * 2 + 1);
  EXPECT_THROW(uhd::reshape_pos_embed_1d_to_2d(seq, 576, 2, 23), std::invalid_argument);
  EXPECT_THROW(uhd::reshape_pos_embed_1d_to_2d(std::span<const double>(seq).first(10), 576, 2, 24),
               std::invalid_argument);
}

PosEmbedGrid random_grid(int rows, int cols, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  PosEmbedGrid p(rows, cols, dim);
  for (auto& v : p.values) {
    v = g(rng);
  }
  return p;
}

TEST(Interpolate, IdentityIsBitwise) {
  const auto src = random_grid(24, 24, 5, 1);
  const auto out = uhd::interpolate_pos_embed(src, {24, 24});
  EXPECT_EQ(out.values, src.values);
}

TEST(Interpolate, ConstantFieldIsPreservedExactly) {
  PosEmbedGrid src(24, 24, 3);
  for (int r = 0; r < 24; ++r) {
    for (int c = 0; c < 24; ++c) {
      src.at(r, c, 0) = 0.1;
      src.at(r, c, 1) = -3.7;
      src.at(r, c, 2) = 1e10 / 3.0;
    }
  }
  for (const PatchGrid target : {PatchGrid{33, 17}, PatchGrid{19, 29}, PatchGrid{1, 1}, PatchGrid{47, 5}}) {
    const auto out = uhd::interpolate_pos_embed(src, target);
    for (int r = 0; r < target.rows; ++r) {
      for (int c = 0; c < target.cols; ++c) {
        ASSERT_EQ(out.at(r, c, 0), 0.1);
        ASSERT_EQ(out.at(r, c, 1), -3.7);
        ASSERT_EQ(out.at(r, c, 2), 1e10 / 3.0);
      }
    }
  }
}

TEST(Interpolate, LinearRampHasClosedForm) {
  PosEmbedGrid src(24, 24, 1);
  for (int r = 0; r < 24; ++r) {
    for (int c = 0; c < 24; ++c) {
      src.at(r, c, 0) = c;
    }
  }
  const auto out = uhd::interpolate_pos_embed(src, {47, 24});
  for (int r = 0; r < 24; ++r) {
    for (int t = 0; t < 47; ++t) {
      EXPECT_NEAR(out.at(r, t, 0), t * 23.0 / 46.0, 1e-12);
    }
  }
}

TEST(Interpolate, SeparableIntoTwoOneDimensionalPasses) {
  const auto src = random_grid(24, 24, 4, 2);
  for (const PatchGrid target : {PatchGrid{33, 17}, PatchGrid{19, 29}, PatchGrid{7, 40}}) {
    const auto direct = uhd::interpolate_pos_embed(src, target);
    const auto cols_first = uhd::interpolate_pos_embed(uhd::interpolate_pos_embed(src, {target.cols, 24}), target);
    const auto rows_first = uhd::interpolate_pos_embed(uhd::interpolate_pos_embed(src, {24, target.rows}), target);
    for (std::size_t i = 0; i < direct.values.size(); ++i) {
      ASSERT_NEAR(direct.values[i], cols_first.values[i], 1e-12);
      ASSERT_NEAR(direct.values[i], rows_first.values[i], 1e-12);
    }
  }
}

TEST(Interpolate, CornersAreKept) {
  const auto src = random_grid(24, 24, 2, 3);
  const auto out = uhd::interpolate_pos_embed(src, {33, 17});
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(out.at(0, 0, k), src.at(0, 0, k));
    EXPECT_EQ(out.at(16, 32, k), src.at(23, 23, k));
    EXPECT_EQ(out.at(0, 32, k), src.at(0, 23, k));
  }
}

TEST(OverviewGrid, FitsTheWholeImageUnderBudget) {
  EXPECT_EQ(uhd::overview_grid(uhd::ImageSize(672, 1008), kVit), (PatchGrid{19, 29}));
  EXPECT_EQ(uhd::overview_grid(uhd::ImageSize(336, 336), kVit), (PatchGrid{24, 24}));
}

TEST(IdealPatchExtent, NativeOrBudgetScaled) {
  const auto [c1, r1] = uhd::ideal_patch_extent(280, 140, kVit);
  EXPECT_DOUBLE_EQ(c1, 20.0);
  EXPECT_DOUBLE_EQ(r1, 10.0);
  const auto [c2, r2] = uhd::ideal_patch_extent(672, 1008, kVit);
  EXPECT_NEAR(c2 * r2, 576.0, 1e-9);
  EXPECT_NEAR(c2 / r2, 672.0 / 1008.0, 1e-12);
}

}  // namespace
