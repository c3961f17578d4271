#pragma once

// Simulators for visual-encoding flaws of existing multimodal models.
//
// GPT-4V style tiling: images larger than one tile are covered by
// ceil(W/512) x ceil(H/512) tiles of 512 px. When a side is not a multiple of
// 512 the tiles along it overlap evenly (stride (W - 512) / (k - 1)). Under the
// counting hypothesis every tile reports the objects whose centres it holds, so
// objects in two- or four-fold overlaps are counted twice or four times.
//
// LLaVA-1.5 style padding: non-square inputs are padded to squares, so only
// min/max of the aspect ratio of the encoder input carries image content.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uhd/partition.hpp"

namespace uhd {

enum class Shape { Circle, Triangle, Square, Rectangle };
enum class Color { Red, Green, White, Blue, Grey, Black };

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb rgb(Color c);
Shape parse_shape(const std::string& s);
Color parse_color(const std::string& s);
std::string to_string(Shape s);
std::string to_string(Color c);

struct SceneObject {
  Shape shape{Shape::Circle};
  Color color{Color::White};
  double cx{};
  double cy{};
  double size{};         // diameter / side / height
  double aspect{1.0};    // width / height, rectangles only
};

struct SyntheticScene {
  ImageSize canvas;
  std::vector<SceneObject> objects;
  Color background{Color::Grey};

  // Throws std::invalid_argument on off-canvas centres or non-positive sizes.
  void validate() const;
};

struct SliceCover {
  int tile_px{512};
  int tiles_x{1};
  int tiles_y{1};
  std::vector<PixelRect> rects;  // row-major
  ImageSize padded_canvas;
};

SliceCover gpt4v_slice_cover(const ImageSize& canvas, int tile_px = 512);

// Number of tiles holding each object's centre (half-open tile rectangles).
std::vector<int> center_multiplicity(const SyntheticScene& scene, const SliceCover& cover);

// Sum over tiles of objects whose centre lies inside the tile.
int simulate_count(const SyntheticScene& scene, const SliceCover& cover);

// Sum over tiles of objects with any visible part in the tile (cut objects
// count once per fragment).
int fragment_count(const SyntheticScene& scene, const SliceCover& cover);

// Four identical circles around the anchor at (+-spread, +-spread).
std::vector<SceneObject> four_object_template(double spread_px, double size_px, Color color = Color::White);

struct Heatmap {
  int step_px{};
  std::vector<std::vector<int>> counts;  // [row][col], anchor at cell centre
};

// Places the template (offsets relative to the anchor) at the centre of every
// step x step cell and records simulate_count.
Heatmap heatmap_probe(const ImageSize& canvas, const std::vector<SceneObject>& object_template, int grid_step_px,
                      int tile_px = 512);

struct PhaseResult {
  int phase{1};  // 1: single tile; 2: tiled, no centre in an overlap; 3: some centre in an overlap
  std::vector<int> answers;  // sorted distinct predictions
  int ground_truth{};
  int center_count{};
  int fragment_count{};
  std::vector<int> multiplicity;
  ImageSize scaled_canvas;
  int tiles_x{1};
  int tiles_y{1};
};

SyntheticScene scale_scene(const SyntheticScene& scene, double scale);
PhaseResult phase_classify(const SyntheticScene& scene, double resolution_scale, int tile_px = 512);

// rows x cols objects evenly spaced at (i + 0.5) / count of each side.
SyntheticScene grid_scene(const ImageSize& canvas, int cols, int rows, double size_px, Shape shape = Shape::Circle,
                          Color color = Color::White);

// Effective fraction of a square-padded encoder input: min/max of the aspect.
double padding_waste(double aspect_w, double aspect_h);

// Square grey canvas with a centred aspect_w:aspect_h rectangle whose long side spans the canvas.
SyntheticScene padding_probe_scene(double aspect_w, double aspect_h, Color color, std::int64_t canvas_px = 336);

// Binary portable pixmap (P6), filled shapes sampled at pixel centres.
std::string render_scene(const SyntheticScene& scene);

SyntheticScene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticScene& scene);

}  // namespace uhd
