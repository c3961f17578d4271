#pragma once

// Per-slice patch planning and position-embedding interpolation.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "uhd/partition.hpp"

namespace uhd {

struct PatchGrid {
  int cols{1};
  int rows{1};

  std::int64_t tokens() const { return static_cast<std::int64_t>(cols) * rows; }
  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

// rows x cols x dim_l, channel-last, row-major.
struct PosEmbedGrid {
  int rows{0};
  int cols{0};
  int dim_l{0};
  std::vector<double> values;

  PosEmbedGrid() = default;
  PosEmbedGrid(int rows, int cols, int dim_l);

  double& at(int r, int c, int k) { return values[index(r, c, k)]; }
  double at(int r, int c, int k) const { return values[index(r, c, k)]; }

 private:
  std::size_t index(int r, int c, int k) const {
    return (static_cast<std::size_t>(r) * cols + c) * dim_l + k;
  }
};

// Real-valued patch counts a slice would occupy before integer rounding:
// native patch counts when they fit the budget, otherwise the aspect-preserving
// downscale whose area is exactly M patches.
std::pair<double, double> ideal_patch_extent(double slice_w_px, double slice_h_px, const VitSpec& vit);

// Integer patch grid within the budget whose aspect is closest to the slice's.
// Throws std::invalid_argument("degenerate slice") if either side is under one patch.
PatchGrid fit_patch_grid(std::int64_t slice_w_px, std::int64_t slice_h_px, const VitSpec& vit);

struct SnappedSize {
  std::int64_t w_px{};
  std::int64_t h_px{};

  friend bool operator==(const SnappedSize&, const SnappedSize&) = default;
};

// Nearest multiple of patch_px per side, halves rounded up, never below one patch.
SnappedSize snap_to_patch(std::int64_t target_w_px, std::int64_t target_h_px, std::int64_t patch_px);

// seq is M rows of dim_l values; element (i, j) of the result is row i*q + j.
PosEmbedGrid reshape_pos_embed_1d_to_2d(std::span<const double> seq, int M, int dim_l, int q);

// Align-corners bilinear resize of every channel to target.rows x target.cols.
PosEmbedGrid interpolate_pos_embed(const PosEmbedGrid& src, const PatchGrid& target);

// Patch grid for the low-resolution overview: the whole image fitted as one slice.
PatchGrid overview_grid(const ImageSize& image, const VitSpec& vit);

}  // namespace uhd
