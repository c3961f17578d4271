#include "uhd/flaw_probes.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace uhd {

Rgb rgb(Color c) {
  switch (c) {
    case Color::Red:
      return {255, 0, 0};
    case Color::Green:
      return {0, 255, 0};
    case Color::White:
      return {255, 255, 255};
    case Color::Blue:
      return {0, 0, 255};
    case Color::Grey:
      return {122, 116, 104};  // LLaVA-1.5 padding fill (CLIP mean pixel)
    case Color::Black:
      return {0, 0, 0};
  }
  return {0, 0, 0};
}

Shape parse_shape(const std::string& s) {
  if (s == "circle") return Shape::Circle;
  if (s == "triangle") return Shape::Triangle;
  if (s == "square") return Shape::Square;
  if (s == "rectangle") return Shape::Rectangle;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

Color parse_color(const std::string& s) {
  if (s == "red") return Color::Red;
  if (s == "green") return Color::Green;
  if (s == "white") return Color::White;
  if (s == "blue") return Color::Blue;
  if (s == "grey" || s == "gray") return Color::Grey;
  if (s == "black") return Color::Black;
  throw std::invalid_argument("unknown color '" + s + "'");
}

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Circle:
      return "circle";
    case Shape::Triangle:
      return "triangle";
    case Shape::Square:
      return "square";
    case Shape::Rectangle:
      return "rectangle";
  }
  return "?";
}

std::string to_string(Color c) {
  switch (c) {
    case Color::Red:
      return "red";
    case Color::Green:
      return "green";
    case Color::White:
      return "white";
    case Color::Blue:
      return "blue";
    case Color::Grey:
      return "grey";
    case Color::Black:
      return "black";
  }
  return "?";
}

void SyntheticScene::validate() const {
  for (const auto& o : objects) {
    if (!(o.size > 0.0) || !(o.aspect > 0.0)) {
      throw std::invalid_argument("scene objects need positive size and aspect");
    }
    if (o.cx < 0.0 || o.cy < 0.0 || o.cx >= static_cast<double>(canvas.width_px) ||
        o.cy >= static_cast<double>(canvas.height_px)) {
      throw std::invalid_argument("scene object centre lies outside the canvas");
    }
  }
}

namespace {

// Tile offsets along one axis.
std::vector<std::int64_t> tile_offsets(std::int64_t extent, int tile) {
  if (extent <= tile) {
    return {0};
  }
  const std::int64_t k = (extent + tile - 1) / tile;
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(k));
  const double stride = static_cast<double>(extent - tile) / static_cast<double>(k - 1);
  for (std::int64_t i = 0; i < k; ++i) {
    offsets[i] = std::llround(stride * static_cast<double>(i));
  }
  return offsets;
}

struct Box {
  double x0, y0, x1, y1;
};

Box bounds(const SceneObject& o) {
  const double half_h = o.size / 2.0;
  const double half_w = (o.shape == Shape::Rectangle ? o.size * o.aspect : o.size) / 2.0;
  return {o.cx - half_w, o.cy - half_h, o.cx + half_w, o.cy + half_h};
}

bool contains_center(const PixelRect& r, const SceneObject& o) {
  return o.cx >= static_cast<double>(r.x) && o.cx < static_cast<double>(r.x + r.w) &&
         o.cy >= static_cast<double>(r.y) && o.cy < static_cast<double>(r.y + r.h);
}

}  // namespace

SliceCover gpt4v_slice_cover(const ImageSize& canvas, int tile_px) {
  if (tile_px < 1) {
    throw std::invalid_argument("tile size must be positive");
  }
  SliceCover cover;
  cover.tile_px = tile_px;
  cover.padded_canvas = ImageSize(std::max<std::int64_t>(canvas.width_px, tile_px),
                                  std::max<std::int64_t>(canvas.height_px, tile_px));
  const auto xs = tile_offsets(canvas.width_px, tile_px);
  const auto ys = tile_offsets(canvas.height_px, tile_px);
  cover.tiles_x = static_cast<int>(xs.size());
  cover.tiles_y = static_cast<int>(ys.size());
  for (auto y : ys) {
    for (auto x : xs) {
      cover.rects.push_back({x, y, tile_px, tile_px});
    }
  }
  return cover;
}

std::vector<int> center_multiplicity(const SyntheticScene& scene, const SliceCover& cover) {
  std::vector<int> mult;
  mult.reserve(scene.objects.size());
  for (const auto& o : scene.objects) {
    mult.push_back(static_cast<int>(
        std::count_if(cover.rects.begin(), cover.rects.end(), [&](const PixelRect& r) { return contains_center(r, o); })));
  }
  return mult;
}

int simulate_count(const SyntheticScene& scene, const SliceCover& cover) {
  const auto mult = center_multiplicity(scene, cover);
  int total = 0;
  for (int m : mult) {
    total += m;
  }
  return total;
}

int fragment_count(const SyntheticScene& scene, const SliceCover& cover) {
  int total = 0;
  for (const auto& r : cover.rects) {
    for (const auto& o : scene.objects) {
      const Box b = bounds(o);
      const bool overlaps = b.x0 < static_cast<double>(r.x + r.w) && b.x1 > static_cast<double>(r.x) &&
                            b.y0 < static_cast<double>(r.y + r.h) && b.y1 > static_cast<double>(r.y);
      total += overlaps ? 1 : 0;
    }
  }
  return total;
}

std::vector<SceneObject> four_object_template(double spread_px, double size_px, Color color) {
  std::vector<SceneObject> objects;
  for (double dy : {-spread_px, spread_px}) {
    for (double dx : {-spread_px, spread_px}) {
      objects.push_back({Shape::Circle, color, dx, dy, size_px, 1.0});
    }
  }
  return objects;
}

Heatmap heatmap_probe(const ImageSize& canvas, const std::vector<SceneObject>& object_template, int grid_step_px,
                      int tile_px) {
  if (grid_step_px < 1) {
    throw std::invalid_argument("heatmap grid step must be positive");
  }
  const SliceCover cover = gpt4v_slice_cover(canvas, tile_px);
  const int cols = static_cast<int>(canvas.width_px / grid_step_px);
  const int rows = static_cast<int>(canvas.height_px / grid_step_px);
  Heatmap map;
  map.step_px = grid_step_px;
  map.counts.assign(static_cast<std::size_t>(rows), std::vector<int>(static_cast<std::size_t>(cols), 0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      SyntheticScene scene{canvas, object_template, Color::Grey};
      const double ax = (j + 0.5) * grid_step_px;
      const double ay = (i + 0.5) * grid_step_px;
      for (auto& o : scene.objects) {
        o.cx += ax;
        o.cy += ay;
      }
      scene.validate();
      map.counts[i][j] = simulate_count(scene, cover);
    }
  }
  return map;
}

SyntheticScene scale_scene(const SyntheticScene& scene, double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("resolution scale must be positive");
  }
  SyntheticScene out;
  out.background = scene.background;
  out.canvas = ImageSize(std::max<std::int64_t>(1, std::llround(static_cast<double>(scene.canvas.width_px) * scale)),
                         std::max<std::int64_t>(1, std::llround(static_cast<double>(scene.canvas.height_px) * scale)));
  const double sx = static_cast<double>(out.canvas.width_px) / static_cast<double>(scene.canvas.width_px);
  const double sy = static_cast<double>(out.canvas.height_px) / static_cast<double>(scene.canvas.height_px);
  for (auto o : scene.objects) {
    o.cx *= sx;
    o.cy *= sy;
    o.size *= scale;
    out.objects.push_back(o);
  }
  return out;
}

PhaseResult phase_classify(const SyntheticScene& scene, double resolution_scale, int tile_px) {
  const SyntheticScene scaled = scale_scene(scene, resolution_scale);
  scaled.validate();
  const SliceCover cover = gpt4v_slice_cover(scaled.canvas, tile_px);

  PhaseResult res;
  res.scaled_canvas = scaled.canvas;
  res.tiles_x = cover.tiles_x;
  res.tiles_y = cover.tiles_y;
  res.ground_truth = static_cast<int>(scaled.objects.size());
  res.multiplicity = center_multiplicity(scaled, cover);
  res.center_count = simulate_count(scaled, cover);
  res.fragment_count = fragment_count(scaled, cover);

  if (cover.rects.size() == 1) {
    res.phase = 1;
    res.answers = {res.ground_truth};
    return res;
  }
  const bool overlapped = std::any_of(res.multiplicity.begin(), res.multiplicity.end(), [](int m) { return m > 1; });
  res.phase = overlapped ? 3 : 2;
  const std::set<int> answers{res.center_count, res.fragment_count};
  res.answers.assign(answers.begin(), answers.end());
  return res;
}

SyntheticScene grid_scene(const ImageSize& canvas, int cols, int rows, double size_px, Shape shape, Color color) {
  SyntheticScene scene{canvas, {}, Color::Grey};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double cx = (c + 0.5) * static_cast<double>(canvas.width_px) / cols;
      const double cy = (r + 0.5) * static_cast<double>(canvas.height_px) / rows;
      scene.objects.push_back({shape, color, cx, cy, size_px, 1.0});
    }
  }
  scene.validate();
  return scene;
}

double padding_waste(double aspect_w, double aspect_h) {
  if (!(aspect_w > 0.0) || !(aspect_h > 0.0)) {
    throw std::invalid_argument("aspect components must be positive");
  }
  return std::min(aspect_w, aspect_h) / std::max(aspect_w, aspect_h);
}

SyntheticScene padding_probe_scene(double aspect_w, double aspect_h, Color color, std::int64_t canvas_px) {
  const double side = static_cast<double>(canvas_px);
  const double aspect = aspect_w / aspect_h;
  SceneObject rect{Shape::Rectangle, color, side / 2.0, side / 2.0, aspect >= 1.0 ? side / aspect : side, aspect};
  SyntheticScene scene{ImageSize(canvas_px, canvas_px), {rect}, Color::Grey};
  scene.validate();
  return scene;
}

namespace {

bool covers(const SceneObject& o, double px, double py) {
  const double dx = px - o.cx;
  const double dy = py - o.cy;
  const double half = o.size / 2.0;
  switch (o.shape) {
    case Shape::Circle:
      return dx * dx + dy * dy <= half * half;
    case Shape::Square:
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case Shape::Rectangle:
      return std::abs(dx) <= half * o.aspect && std::abs(dy) <= half;
    case Shape::Triangle: {
      // apex up, base on the bottom edge of the bounding square
      const double depth = dy + half;
      return depth >= 0.0 && depth <= o.size && std::abs(dx) <= depth / 2.0;
    }
  }
  return false;
}

}  // namespace

std::string render_scene(const SyntheticScene& scene) {
  scene.validate();
  const auto w = scene.canvas.width_px;
  const auto h = scene.canvas.height_px;
  std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::string out = header;
  out.resize(header.size() + static_cast<std::size_t>(w * h * 3));
  std::size_t pos = header.size();
  const Rgb bg = rgb(scene.background);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      Rgb px = bg;
      // later objects paint over earlier ones
      for (const auto& o : scene.objects) {
        if (covers(o, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
          px = rgb(o.color);
        }
      }
      out[pos++] = static_cast<char>(px.r);
      out[pos++] = static_cast<char>(px.g);
      out[pos++] = static_cast<char>(px.b);
    }
  }
  return out;
}

SyntheticScene scene_from_json(const nlohmann::json& j) {
  SyntheticScene scene;
  scene.canvas = ImageSize(j.at("canvas").at("w").get<std::int64_t>(), j.at("canvas").at("h").get<std::int64_t>());
  scene.background = parse_color(j.value("background", std::string("grey")));
  for (const auto& o : j.value("objects", nlohmann::json::array())) {
    scene.objects.push_back({parse_shape(o.value("shape", std::string("circle"))),
                             parse_color(o.value("color", std::string("white"))), o.at("x").get<double>(),
                             o.at("y").get<double>(), o.at("size").get<double>(), o.value("aspect", 1.0)});
  }
  scene.validate();
  return scene;
}

nlohmann::json to_json(const SyntheticScene& scene) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"shape", to_string(o.shape)},
                       {"color", to_string(o.color)},
                       {"x", o.cx},
                       {"y", o.cy},
                       {"size", o.size},
                       {"aspect", o.aspect}});
  }
  return {{"canvas", {{"w", scene.canvas.width_px}, {"h", scene.canvas.height_px}}},
          {"background", to_string(scene.background)},
          {"objects", objects}};
}

}  // namespace uhd
