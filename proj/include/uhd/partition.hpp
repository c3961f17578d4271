#pragma once

// Adaptive slice partitioning of a native-resolution image.
//
// The image is cut into cols_m x rows_n variable-sized slices. The slice count
// is chosen around the ideal count N = ceil(image area / ViT area) and the grid
// is the factorization whose slice aspect ratio deviates least (in log space)
// from the ViT pretraining aspect ratio.

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace uhd {

struct ImageSize {
  std::int64_t width_px{};
  std::int64_t height_px{};

  ImageSize() = default;
  ImageSize(std::int64_t width, std::int64_t height);

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// ViT pretraining geometry. token_budget_M is derived, never supplied.
class VitSpec {
 public:
  VitSpec(std::int64_t pretrain_width_px, std::int64_t pretrain_height_px, std::int64_t patch_px);

  // CLIP-ViT-L/14 at 336x336.
  static VitSpec clip_l14_336() { return VitSpec(336, 336, 14); }

  std::int64_t pretrain_width_px() const { return width_; }
  std::int64_t pretrain_height_px() const { return height_; }
  std::int64_t patch_px() const { return patch_; }
  std::int64_t token_budget() const { return (width_ / patch_) * (height_ / patch_); }
  std::int64_t area_px() const { return width_ * height_; }

  friend bool operator==(const VitSpec&, const VitSpec&) = default;

 private:
  std::int64_t width_;
  std::int64_t height_;
  std::int64_t patch_;
};

struct SliceGrid {
  int cols_m{1};
  int rows_n{1};

  int slices() const { return cols_m * rows_n; }
  friend bool operator==(const SliceGrid&, const SliceGrid&) = default;
};

struct PixelRect {
  std::int64_t x{};
  std::int64_t y{};
  std::int64_t w{};
  std::int64_t h{};

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct PartitionPlan {
  ImageSize image;
  VitSpec vit;
  SliceGrid grid;
  double score{};
  std::vector<PixelRect> slice_rects;  // row-major: row 0 left to right, then row 1, ...
  int ideal_N{1};
};

int ideal_slice_count(const ImageSize& image, const VitSpec& vit);
// Real-valued variant used by the statistical checks, where image sides are not integral.
int ideal_slice_count(double width, double height, const VitSpec& vit);

// Every (m, n) with m*n in {N-1, N, N+1}, in tie-break preference order:
// slice count N first, then N-1, then N+1; within a count, larger m first.
// A 0-slice grid never appears, and the single-slice grid only appears when
// N == 1 (an image that needs slicing is never left whole).
std::vector<SliceGrid> candidate_grids(int N);

// -|ln(W_I*n / (H_I*m)) - ln(W_v / H_v)|
double partition_score(const ImageSize& image, const VitSpec& vit, const SliceGrid& grid);
double partition_score(double width, double height, const VitSpec& vit, const SliceGrid& grid);

struct GridChoice {
  SliceGrid grid;
  double score{};
  int ideal_N{1};
};

// Argmax of the score over candidate_grids(ideal_N); first candidate wins ties.
GridChoice select_grid(double width, double height, const VitSpec& vit);

PartitionPlan select_partition(const ImageSize& image, const VitSpec& vit);

// Near-even split: the first (extent % parts) segments are one pixel longer.
std::vector<PixelRect> slice_rects(const ImageSize& image, const SliceGrid& grid);

nlohmann::json to_json(const PartitionPlan& plan);

}  // namespace uhd
