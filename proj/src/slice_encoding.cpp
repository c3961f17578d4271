#include "uhd/slice_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace uhd {

PosEmbedGrid::PosEmbedGrid(int rows_, int cols_, int dim_l_) : rows(rows_), cols(cols_), dim_l(dim_l_) {
  if (rows_ < 1 || cols_ < 1 || dim_l_ < 1) {
    throw std::invalid_argument("position-embedding grid dimensions must be positive");
  }
  values.assign(static_cast<std::size_t>(rows_) * cols_ * dim_l_, 0.0);
}

std::pair<double, double> ideal_patch_extent(double slice_w_px, double slice_h_px, const VitSpec& vit) {
  const double patch = static_cast<double>(vit.patch_px());
  const double budget = static_cast<double>(vit.token_budget());
  const double native_c = slice_w_px / patch;
  const double native_r = slice_h_px / patch;
  if (native_c * native_r <= budget) {
    return {native_c, native_r};
  }
  const double aspect = slice_w_px / slice_h_px;
  return {std::sqrt(budget * aspect), std::sqrt(budget / aspect)};
}

PatchGrid fit_patch_grid(std::int64_t slice_w_px, std::int64_t slice_h_px, const VitSpec& vit) {
  if (slice_w_px < vit.patch_px() || slice_h_px < vit.patch_px()) {
    throw std::invalid_argument("degenerate slice: " + std::to_string(slice_w_px) + "x" +
                                std::to_string(slice_h_px) + " is smaller than one " +
                                std::to_string(vit.patch_px()) + " px patch");
  }
  const std::int64_t budget = vit.token_budget();
  const double log_aspect = std::log(static_cast<double>(slice_w_px) / static_cast<double>(slice_h_px));
  const auto [ideal_c, ideal_r] =
      ideal_patch_extent(static_cast<double>(slice_w_px), static_cast<double>(slice_h_px), vit);

  // Feasible region: within budget, no side above its rounded-up ideal, and at
  // least the fill obtained by rounding both ideal sides down.
  const auto max_c = static_cast<std::int64_t>(std::ceil(ideal_c));
  const auto max_r = static_cast<std::int64_t>(std::ceil(ideal_r));
  const std::int64_t min_area =
      static_cast<std::int64_t>(std::floor(ideal_c)) * static_cast<std::int64_t>(std::floor(ideal_r));

  PatchGrid best{};
  double best_dev = 0.0;
  bool have = false;
  auto consider = [&](std::int64_t c, std::int64_t r) {
    const double dev = std::abs(std::log(static_cast<double>(c) / static_cast<double>(r)) - log_aspect);
    const std::int64_t area = c * r;
    const bool better = !have || dev < best_dev ||
                        (dev == best_dev && (area > best.tokens() || (area == best.tokens() && c > best.cols)));
    if (better) {
      best = {static_cast<int>(c), static_cast<int>(r)};
      best_dev = dev;
      have = true;
    }
  };

  for (std::int64_t r = 1; r <= max_r; ++r) {
    const std::int64_t c_lo = std::max<std::int64_t>(1, (min_area + r - 1) / r);
    const std::int64_t c_hi = std::min(max_c, budget / r);
    if (c_lo > c_hi) {
      continue;
    }
    // The deviation is unimodal in c, minimised next to c = r * aspect.
    const double target = static_cast<double>(r) * std::exp(log_aspect);
    const auto below = std::clamp(static_cast<std::int64_t>(std::floor(target)), c_lo, c_hi);
    const auto above = std::clamp(static_cast<std::int64_t>(std::ceil(target)), c_lo, c_hi);
    consider(below, r);
    if (above != below) {
      consider(above, r);
    }
  }
  if (!have) {
    throw std::logic_error("fit_patch_grid: empty feasible region");
  }
  return best;
}

SnappedSize snap_to_patch(std::int64_t target_w_px, std::int64_t target_h_px, std::int64_t patch_px) {
  if (target_w_px <= 0 || target_h_px <= 0 || patch_px <= 0) {
    throw std::invalid_argument("snap_to_patch requires positive sizes");
  }
  auto snap = [patch_px](std::int64_t v) {
    const std::int64_t k = (2 * v + patch_px) / (2 * patch_px);  // round half up
    return std::max<std::int64_t>(k, 1) * patch_px;
  };
  return {snap(target_w_px), snap(target_h_px)};
}

PosEmbedGrid reshape_pos_embed_1d_to_2d(std::span<const double> seq, int M, int dim_l, int q) {
  if (q < 1 || M != q * q) {
    throw std::invalid_argument("position-embedding sequence length " + std::to_string(M) +
                                " is not q*q for q=" + std::to_string(q));
  }
  if (seq.size() != static_cast<std::size_t>(M) * static_cast<std::size_t>(dim_l)) {
    throw std::invalid_argument("position-embedding sequence has wrong element count");
  }
  PosEmbedGrid out(q, q, dim_l);
  std::copy(seq.begin(), seq.end(), out.values.begin());
  return out;
}

namespace {

struct AxisSample {
  int lo;
  int hi;
  double frac;
};

// Align-corners mapping of target index t onto [0, src-1].
std::vector<AxisSample> axis_samples(int src, int dst) {
  std::vector<AxisSample> out(static_cast<std::size_t>(dst));
  for (int t = 0; t < dst; ++t) {
    if (src == 1 || dst == 1) {
      out[t] = {0, 0, 0.0};
      continue;
    }
    const double pos = static_cast<double>(t) * (src - 1) / (dst - 1);
    int lo = static_cast<int>(std::floor(pos));
    lo = std::clamp(lo, 0, src - 1);
    const int hi = std::min(lo + 1, src - 1);
    out[t] = {lo, hi, pos - lo};
  }
  return out;
}

}  // namespace

PosEmbedGrid interpolate_pos_embed(const PosEmbedGrid& src, const PatchGrid& target) {
  if (src.rows < 1 || src.cols < 1 || src.dim_l < 1) {
    throw std::invalid_argument("interpolate_pos_embed: empty source grid");
  }
  PosEmbedGrid out(target.rows, target.cols, src.dim_l);
  const auto ys = axis_samples(src.rows, target.rows);
  const auto xs = axis_samples(src.cols, target.cols);
  for (int r = 0; r < target.rows; ++r) {
    const auto& y = ys[r];
    for (int c = 0; c < target.cols; ++c) {
      const auto& x = xs[c];
      for (int k = 0; k < src.dim_l; ++k) {
        // std::lerp is exact at frac 0 and for equal endpoints, so the identity
        // and constant fields pass through bitwise.
        const double top = std::lerp(src.at(y.lo, x.lo, k), src.at(y.lo, x.hi, k), x.frac);
        const double bottom = std::lerp(src.at(y.hi, x.lo, k), src.at(y.hi, x.hi, k), x.frac);
        out.at(r, c, k) = std::lerp(top, bottom, y.frac);
      }
    }
  }
  return out;
}

PatchGrid overview_grid(const ImageSize& image, const VitSpec& vit) {
  return fit_patch_grid(image.width_px, image.height_px, vit);
}

}  // namespace uhd
