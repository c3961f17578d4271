#include "uhd/partition.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uhd {

ImageSize::ImageSize(std::int64_t width, std::int64_t height) : width_px(width), height_px(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image size must be positive, got " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
}

VitSpec::VitSpec(std::int64_t pretrain_width_px, std::int64_t pretrain_height_px, std::int64_t patch_px)
    : width_(pretrain_width_px), height_(pretrain_height_px), patch_(patch_px) {
  if (width_ <= 0 || height_ <= 0 || patch_ <= 0) {
    throw std::invalid_argument("ViT geometry must be positive");
  }
  if (width_ % patch_ != 0 || height_ % patch_ != 0) {
    throw std::invalid_argument("ViT pretraining resolution must be a multiple of the patch size");
  }
}

int ideal_slice_count(const ImageSize& image, const VitSpec& vit) {
  const std::int64_t area = image.width_px * image.height_px;
  const std::int64_t n = (area + vit.area_px() - 1) / vit.area_px();
  return static_cast<int>(std::max<std::int64_t>(n, 1));
}

int ideal_slice_count(double width, double height, const VitSpec& vit) {
  const double ratio = width * height / static_cast<double>(vit.area_px());
  return std::max(1, static_cast<int>(std::ceil(ratio)));
}

namespace {

// Visits candidates in preference order without allocating; the hot path of
// the Monte Carlo and sweep checks.
template <typename Fn>
void for_each_candidate(int N, Fn&& fn) {
  const int counts[3] = {N, N - 1, N + 1};
  for (int count : counts) {
    if (count < 1 || (count == 1 && N >= 2)) {
      continue;
    }
    for (int m = count; m >= 1; --m) {
      if (count % m == 0) {
        fn(SliceGrid{m, count / m});
      }
    }
  }
}

}  // namespace

std::vector<SliceGrid> candidate_grids(int N) {
  if (N < 1) {
    throw std::invalid_argument("ideal slice count must be >= 1");
  }
  std::vector<SliceGrid> grids;
  for_each_candidate(N, [&](const SliceGrid& g) { grids.push_back(g); });
  return grids;
}

double partition_score(double width, double height, const VitSpec& vit, const SliceGrid& grid) {
  const double slice_aspect = (width * grid.rows_n) / (height * grid.cols_m);
  const double vit_aspect =
      static_cast<double>(vit.pretrain_width_px()) / static_cast<double>(vit.pretrain_height_px());
  // + 0.0 turns a perfect match into +0 rather than -0
  return 0.0 - std::abs(std::log(slice_aspect) - std::log(vit_aspect));
}

double partition_score(const ImageSize& image, const VitSpec& vit, const SliceGrid& grid) {
  return partition_score(static_cast<double>(image.width_px), static_cast<double>(image.height_px), vit,
                         grid);
}

GridChoice select_grid(double width, double height, const VitSpec& vit) {
  GridChoice best;
  best.ideal_N = ideal_slice_count(width, height, vit);
  bool first = true;
  for_each_candidate(best.ideal_N, [&](const SliceGrid& g) {
    const double s = partition_score(width, height, vit, g);
    if (first || s > best.score) {
      best.grid = g;
      best.score = s;
      first = false;
    }
  });
  return best;
}

std::vector<PixelRect> slice_rects(const ImageSize& image, const SliceGrid& grid) {
  auto split = [](std::int64_t extent, int parts) {
    std::vector<std::int64_t> offsets(parts + 1, 0);
    const std::int64_t base = extent / parts;
    const std::int64_t extra = extent % parts;
    for (int i = 0; i < parts; ++i) {
      offsets[i + 1] = offsets[i] + base + (i < extra ? 1 : 0);
    }
    return offsets;
  };
  const auto xs = split(image.width_px, grid.cols_m);
  const auto ys = split(image.height_px, grid.rows_n);

  std::vector<PixelRect> rects;
  rects.reserve(static_cast<std::size_t>(grid.slices()));
  for (int r = 0; r < grid.rows_n; ++r) {
    for (int c = 0; c < grid.cols_m; ++c) {
      rects.push_back({xs[c], ys[r], xs[c + 1] - xs[c], ys[r + 1] - ys[r]});
    }
  }
  return rects;
}

PartitionPlan select_partition(const ImageSize& image, const VitSpec& vit) {
  const auto choice =
      select_grid(static_cast<double>(image.width_px), static_cast<double>(image.height_px), vit);
  // The integer route is exact; the double route only differs when the area
  // ratio is within rounding of an integer.
  const int ideal = ideal_slice_count(image, vit);
  GridChoice chosen = choice;
  if (ideal != choice.ideal_N) {
    chosen.ideal_N = ideal;
    bool first = true;
    for_each_candidate(ideal, [&](const SliceGrid& g) {
      const double s = partition_score(image, vit, g);
      if (first || s > chosen.score) {
        chosen.grid = g;
        chosen.score = s;
        first = false;
      }
    });
  }
  return PartitionPlan{image, vit, chosen.grid, chosen.score, slice_rects(image, chosen.grid), chosen.ideal_N};
}

nlohmann::json to_json(const PartitionPlan& plan) {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& r : plan.slice_rects) {
    slices.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  }
  return {
      {"image", {{"w", plan.image.width_px}, {"h", plan.image.height_px}}},
      {"vit",
       {{"w", plan.vit.pretrain_width_px()},
        {"h", plan.vit.pretrain_height_px()},
        {"patch", plan.vit.patch_px()},
        {"M", plan.vit.token_budget()}}},
      {"ideal_N", plan.ideal_N},
      {"grid", {{"m", plan.grid.cols_m}, {"n", plan.grid.rows_n}}},
      {"score", plan.score},
      {"slices", slices},
  };
}

}  // namespace uhd
