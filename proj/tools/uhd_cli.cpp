// uhd: command-line front end for slice planning, schema layout, resampler
// checks, cost estimates, flaw probes and numerical verification.
//
// Exit codes: 0 success, 1 a check failed, 2 usage or input error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uhd/config.hpp"
#include "uhd/cost_model.hpp"
#include "uhd/flaw_probes.hpp"
#include "uhd/partition.hpp"
#include "uhd/proofs_verify.hpp"
#include "uhd/resampler.hpp"
#include "uhd/slice_encoding.hpp"
#include "uhd/spatial_schema.hpp"
#include "uhd/tensor_io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::int64_t, std::int64_t> parse_dims(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) {
    throw UsageError("expected WxH, got '" + text + "'");
  }
  try {
    std::size_t used_w = 0;
    std::size_t used_h = 0;
    const std::string w_text = text.substr(0, x);
    const std::string h_text = text.substr(x + 1);
    const long long w = std::stoll(w_text, &used_w);
    const long long h = std::stoll(h_text, &used_h);
    if (used_w != w_text.size() || used_h != h_text.size() || w < 1 || h < 1) {
      throw UsageError("");
    }
    return {w, h};
  } catch (const std::exception&) {
    throw UsageError("expected positive integers WxH, got '" + text + "'");
  }
}

std::pair<double, double> parse_aspect(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("expected an aspect W:H, got '" + text + "'");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("expected numeric aspect W:H, got '" + text + "'");
  }
}

void flatten(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten(value, prefix.empty() ? key : prefix + "." + key, os);
    }
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
    }
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

struct Output {
  uhd::OutputFormat format{uhd::OutputFormat::Json};
  std::string path;

  void write_text(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write '" + path + "'");
    }
    out << text;
  }

  void emit(const json& report) const {
    if (format == uhd::OutputFormat::Json) {
      write_text(report.dump(2) + "\n");
    } else {
      std::ostringstream os;
      flatten(report, "", os);
      write_text(os.str());
    }
  }
};

void write_binary(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << bytes;
}

// Plan for an image under the config's slice cap.
uhd::PartitionPlan checked_plan(const std::string& image_text, const uhd::AppConfig& cfg) {
  const auto [w, h] = parse_dims(image_text);
  const uhd::ImageSize image(w, h);
  const int ideal = uhd::ideal_slice_count(image, cfg.vit);
  if (ideal > cfg.max_N) {
    throw UsageError("ideal N=" + std::to_string(ideal) + " exceeds max_N=" + std::to_string(cfg.max_N));
  }
  return uhd::select_partition(image, cfg.vit);
}

json plan_report(const uhd::PartitionPlan& plan, const uhd::AppConfig& cfg) {
  json report = uhd::to_json(plan);
  json patch_grids = json::array();
  long long vit_tokens = 0;
  for (const auto& rect : plan.slice_rects) {
    const auto grid = uhd::fit_patch_grid(rect.w, rect.h, plan.vit);
    patch_grids.push_back({{"cols", grid.cols}, {"rows", grid.rows}, {"tokens", grid.tokens()}});
    vit_tokens += grid.tokens();
  }
  const auto overview = uhd::overview_grid(plan.image, plan.vit);
  report["slice_patch_grids"] = patch_grids;
  report["overview_patch_grid"] = {{"cols", overview.cols}, {"rows", overview.rows}, {"tokens", overview.tokens()}};
  report["slice_vit_tokens"] = vit_tokens;
  report["llm_tokens"] = uhd::token_count(plan, cfg.resampler_K);
  report["resampler_K"] = cfg.resampler_K;
  return report;
}

json counts_json(const uhd::SchemaCounts& c) {
  return {{"content_tokens", c.content_tokens},
          {"col_seps", c.col_seps},
          {"row_seps", c.row_seps},
          {"overview_seps", c.overview_seps},
          {"total_items", c.total_items}};
}

json matrix_summary(const uhd::Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}}; }

uhd::TokenMatrix load_or_generate_tokens(const std::string& path, int count, int dim, std::uint64_t seed) {
  if (!path.empty()) {
    return uhd::tokens_from_raw(uhd::read_tensor_file(path));
  }
  if (count < 1 || dim < 1) {
    throw UsageError("--count and --dim must be positive");
  }
  return uhd::random_tokens(count, dim, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive slice planning, compression and verification tools"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::string out_path;
  std::string format_flag;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "random seed (overrides config)");
  app.add_option("--out", out_path, "write the report to this file instead of stdout");
  app.add_option("--format", format_flag, "json|text (overrides config)")->check(CLI::IsMember({"json", "text"}));

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "partition an image into slices");
  std::string plan_image;
  plan_cmd->add_option("image", plan_image, "image size WxH")->required();

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "render the spatial separator layout");
  std::string schema_image;
  std::string schema_grid;
  schema_cmd->add_option("image", schema_image, "image size WxH");
  schema_cmd->add_option("--grid", schema_grid, "explicit slice grid COLSxROWS");

  // compress
  auto* compress_cmd = app.add_subcommand("compress", "compress slice tokens to K tokens with a random resampler");
  std::string compress_tokens;
  std::string compress_tensor_out;
  int compress_count = 576;
  int compress_dim = 32;
  std::optional<int> compress_K;
  compress_cmd->add_option("--tokens", compress_tokens, "token matrix file (UHDT format)");
  compress_cmd->add_option("--count", compress_count, "random token count when --tokens is absent");
  compress_cmd->add_option("--dim", compress_dim, "token width when --tokens is absent");
  compress_cmd->add_option("--queries", compress_K, "number of queries K (default from config)");
  compress_cmd->add_option("--tensor-out", compress_tensor_out, "write the K x dim output tensor");

  // grad-check
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference check of the resampler backward pass");
  int grad_count = 12;
  int grad_dim = 6;
  int grad_K = 4;
  double grad_eps = 1e-5;
  double grad_tol = 1e-4;
  grad_cmd->add_option("--count", grad_count, "token count");
  grad_cmd->add_option("--dim", grad_dim, "token width");
  grad_cmd->add_option("--queries", grad_K, "query count");
  grad_cmd->add_option("--eps", grad_eps, "finite-difference step");
  grad_cmd->add_option("--tolerance", grad_tol, "maximum accepted relative error");

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "FLOP estimate for one strategy");
  cost_cmd->require_subcommand(0, 1);
  std::string cost_image;
  std::string cost_strategy = "uhd";
  long long text_tokens = 0;
  cost_cmd->add_option("--image", cost_image, "image size WxH");
  cost_cmd->add_option("--strategy", cost_strategy, "uhd|llava15|uhd-mlp|fixed2x2-mlp");
  cost_cmd->add_option("--text-tokens", text_tokens, "text tokens in the LLM prefill");
  auto* compare_cmd = cost_cmd->add_subcommand("compare", "ratio of two strategies' total FLOPs");
  std::string cmp_a;
  std::string cmp_b;
  std::string cmp_image;
  compare_cmd->add_option("--a", cmp_a, "numerator strategy")->required();
  compare_cmd->add_option("--b", cmp_b, "denominator strategy")->required();
  compare_cmd->add_option("--image", cmp_image, "image size WxH")->required();
  compare_cmd->add_option("--text-tokens", text_tokens, "text tokens in the LLM prefill");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "visual-encoding flaw simulators");
  probe_cmd->require_subcommand(1);
  auto* heatmap_cmd = probe_cmd->add_subcommand("heatmap", "count heatmap for an object template");
  std::string heat_canvas = "768x768";
  int heat_step = 64;
  double heat_spread = 4.0;
  double heat_size = 4.0;
  heatmap_cmd->add_option("--canvas", heat_canvas, "canvas WxH");
  heatmap_cmd->add_option("--step", heat_step, "grid step in px");
  heatmap_cmd->add_option("--spread", heat_spread, "template half-spacing in px");
  heatmap_cmd->add_option("--size", heat_size, "object diameter in px");

  auto* phases_cmd = probe_cmd->add_subcommand("phases", "count predictions across input resolutions");
  std::string phase_scene;
  std::vector<double> phase_scales{0.5, 1.0, 1.5};
  phases_cmd->add_option("--scene", phase_scene, "scene JSON (default: 3x3 circles on 700x700)");
  phases_cmd->add_option("--scales", phase_scales, "resolution scales")->delimiter(',');

  auto* padding_cmd = probe_cmd->add_subcommand("padding", "content fraction of a square-padded input");
  std::string pad_aspect = "1:4";
  std::string pad_color = "red";
  std::string pad_ppm;
  padding_cmd->add_option("--aspect", pad_aspect, "aspect W:H");
  padding_cmd->add_option("--color", pad_color, "rectangle color");
  padding_cmd->add_option("--ppm", pad_ppm, "write the padded probe image (P6)");

  auto* render_cmd = probe_cmd->add_subcommand("render", "render a scene JSON to a portable pixmap");
  std::string render_scene_path;
  std::string render_ppm;
  render_cmd->add_option("--scene", render_scene_path, "scene JSON")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--ppm", render_ppm, "output P6 file")->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "numerical verification");
  verify_cmd->require_subcommand(1);
  auto* proofs_cmd = verify_cmd->add_subcommand("proofs", "slice ratio/area bounds and statistics");
  double verify_samples = 1e7;
  int verify_threads = 0;
  proofs_cmd->add_option("--samples", verify_samples, "Monte Carlo samples per distribution (>= 1e6)");
  proofs_cmd->add_option("--threads", verify_threads, "worker threads (0: all cores)");

  // interp-pe
  auto* interp_cmd = app.add_subcommand("interp-pe", "bilinear position-embedding resize");
  std::string interp_in;
  std::string interp_to;
  std::string interp_tensor_out;
  int interp_dim = 8;
  interp_cmd->add_option("--in", interp_in, "position-embedding file (UHDT rows x cols x dim)");
  interp_cmd->add_option("--to", interp_to, "target COLSxROWS")->required();
  interp_cmd->add_option("--dim", interp_dim, "channels of the synthetic ramp when --in is absent");
  interp_cmd->add_option("--tensor-out", interp_tensor_out, "write the resized tensor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    uhd::AppConfig cfg = config_path.empty() ? uhd::AppConfig{} : uhd::load_config(config_path);
    if (seed_flag) {
      cfg.seed = *seed_flag;
    }
    if (!format_flag.empty()) {
      cfg.format = uhd::parse_format(format_flag);
    }
    const Output out{cfg.format, out_path};

    if (plan_cmd->parsed()) {
      out.emit(plan_report(checked_plan(plan_image, cfg), cfg));
      return kExitOk;
    }

    if (schema_cmd->parsed()) {
      uhd::SliceGrid grid;
      if (!schema_grid.empty()) {
        const auto [c, r] = parse_dims(schema_grid);
        grid = {static_cast<int>(c), static_cast<int>(r)};
      } else if (!schema_image.empty()) {
        grid = checked_plan(schema_image, cfg).grid;
      } else {
        throw UsageError("schema needs an image WxH or --grid COLSxROWS");
      }
      const auto seq = uhd::serialize_layout(grid, cfg.resampler_K);
      if (cfg.format == uhd::OutputFormat::Text) {
        out.write_text(uhd::render_layout(seq) + "\n");
      } else {
        out.emit({{"grid", {{"m", grid.cols_m}, {"n", grid.rows_n}}},
                  {"K", cfg.resampler_K},
                  {"llm_tokens", uhd::token_count(grid, cfg.resampler_K)},
                  {"counts", counts_json(uhd::count_items(seq))},
                  {"layout", uhd::render_layout(seq)}});
      }
      return kExitOk;
    }

    if (compress_cmd->parsed()) {
      const auto tokens = load_or_generate_tokens(compress_tokens, compress_count, compress_dim, cfg.seed);
      const int K = compress_K.value_or(cfg.resampler_K);
      if (K < 1) {
        throw UsageError("--queries must be positive");
      }
      const auto params = uhd::AttentionParams::random(tokens.cols(), cfg.seed + 1);
      const auto queries = uhd::random_queries(K, tokens.cols(), cfg.seed + 2);
      const auto result = uhd::cross_attention(queries, tokens, params);
      double worst_row_dev = 0.0;
      for (int r = 0; r < result.attention.rows(); ++r) {
        double sum = 0.0;
        for (double v : result.attention.row(r)) {
          sum += v;
        }
        worst_row_dev = std::max(worst_row_dev, std::abs(sum - 1.0));
      }
      if (!compress_tensor_out.empty()) {
        uhd::write_tensor_file(compress_tensor_out, uhd::to_raw(result.output));
      }
      out.emit({{"input", matrix_summary(tokens)},
                {"output", matrix_summary(result.output)},
                {"max_attention_row_sum_deviation", worst_row_dev},
                {"seed", cfg.seed}});
      return kExitOk;
    }

    if (grad_cmd->parsed()) {
      if (grad_count < 1 || grad_dim < 1 || grad_K < 1) {
        throw UsageError("--count, --dim and --queries must be positive");
      }
      const auto params = uhd::AttentionParams::random(grad_dim, cfg.seed);
      const auto queries = uhd::random_queries(grad_K, grad_dim, cfg.seed + 1);
      const auto tokens = uhd::random_tokens(grad_count, grad_dim, cfg.seed + 2);
      const auto probe = uhd::random_tokens(grad_K, grad_dim, cfg.seed + 3);
      const auto report = uhd::grad_check(queries, tokens, params, grad_eps, probe);
      const bool pass = report.max_rel_err < grad_tol;
      out.emit({{"max_rel_err", report.max_rel_err},
                {"per_param_rel_err", report.per_param_err},
                {"eps", grad_eps},
                {"tolerance", grad_tol},
                {"pass", pass},
                {"seed", cfg.seed}});
      return pass ? kExitOk : kExitCheckFailed;
    }

    if (compare_cmd->parsed()) {
      const auto [w, h] = parse_dims(cmp_image);
      const auto a = uhd::parse_strategy(cmp_a);
      const auto b = uhd::parse_strategy(cmp_b);
      const auto cmp = uhd::compare_strategies(cfg.model, a, b, uhd::ImageSize(w, h), cfg.vit, text_tokens);
      out.emit({{"a", {{"strategy", cmp_a}, {"report", uhd::to_json(cmp.a)}}},
                {"b", {{"strategy", cmp_b}, {"report", uhd::to_json(cmp.b)}}},
                {"image", {{"w", w}, {"h", h}}},
                {"ratio", cmp.ratio}});
      return kExitOk;
    }

    if (cost_cmd->parsed()) {
      if (cost_image.empty()) {
        throw UsageError("cost needs --image WxH");
      }
      const auto [w, h] = parse_dims(cost_image);
      const auto report = uhd::estimate_strategy(cfg.model, uhd::parse_strategy(cost_strategy), uhd::ImageSize(w, h),
                                                 cfg.vit, text_tokens);
      json j = uhd::to_json(report);
      j["strategy"] = cost_strategy;
      out.emit(j);
      return kExitOk;
    }

    if (heatmap_cmd->parsed()) {
      const auto [w, h] = parse_dims(heat_canvas);
      const auto map = uhd::heatmap_probe(uhd::ImageSize(w, h), uhd::four_object_template(heat_spread, heat_size),
                                          heat_step);
      std::set<int> values;
      for (const auto& row : map.counts) {
        values.insert(row.begin(), row.end());
      }
      out.emit({{"canvas", {{"w", w}, {"h", h}}}, {"step_px", map.step_px}, {"counts", map.counts}, {"values", values}});
      return kExitOk;
    }

    if (phases_cmd->parsed()) {
      uhd::SyntheticScene scene;
      if (phase_scene.empty()) {
        scene = uhd::grid_scene(uhd::ImageSize(700, 700), 3, 3, 60.0);
      } else {
        std::ifstream in(phase_scene);
        if (!in) {
          throw UsageError("cannot open scene '" + phase_scene + "'");
        }
        scene = uhd::scene_from_json(json::parse(in));
      }
      json rows = json::array();
      for (double s : phase_scales) {
        const auto res = uhd::phase_classify(scene, s);
        rows.push_back({{"scale", s},
                        {"canvas", {{"w", res.scaled_canvas.width_px}, {"h", res.scaled_canvas.height_px}}},
                        {"tiles", {{"x", res.tiles_x}, {"y", res.tiles_y}}},
                        {"phase", res.phase},
                        {"answers", res.answers},
                        {"ground_truth", res.ground_truth}});
      }
      out.emit({{"phases", rows}});
      return kExitOk;
    }

    if (padding_cmd->parsed()) {
      const auto [aw, ah] = parse_aspect(pad_aspect);
      const double waste = uhd::padding_waste(aw, ah);
      if (!pad_ppm.empty()) {
        write_binary(pad_ppm, uhd::render_scene(uhd::padding_probe_scene(aw, ah, uhd::parse_color(pad_color))));
      }
      out.emit({{"aspect", pad_aspect}, {"content_fraction", waste}});
      return kExitOk;
    }

    if (render_cmd->parsed()) {
      std::ifstream in(render_scene_path);
      const auto scene = uhd::scene_from_json(json::parse(in));
      write_binary(render_ppm, uhd::render_scene(scene));
      out.emit({{"ppm", render_ppm}, {"w", scene.canvas.width_px}, {"h", scene.canvas.height_px}});
      return kExitOk;
    }

    if (proofs_cmd->parsed()) {
      if (!(verify_samples >= 1e6) || verify_samples > 1e12) {
        throw UsageError("--samples must lie in [1e6, 1e12]");
      }
      const auto report = uhd::verify_proofs(std::llround(verify_samples), cfg.seed, verify_threads);
      out.emit(uhd::to_json(report));
      return report.all_pass() ? kExitOk : kExitCheckFailed;
    }

    if (interp_cmd->parsed()) {
      const auto [c, r] = parse_dims(interp_to);
      uhd::PosEmbedGrid src;
      if (!interp_in.empty()) {
        src = uhd::pos_embed_from_raw(uhd::read_tensor_file(interp_in));
      } else {
        // square grid of the ViT budget holding a per-channel linear ramp
        const int q = static_cast<int>(cfg.vit.pretrain_width_px() / cfg.vit.patch_px());
        const int rows = static_cast<int>(cfg.vit.pretrain_height_px() / cfg.vit.patch_px());
        src = uhd::PosEmbedGrid(rows, q, interp_dim);
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < q; ++j) {
            for (int k = 0; k < interp_dim; ++k) {
              src.at(i, j, k) = i + j * (k + 1);
            }
          }
        }
      }
      const auto dst = uhd::interpolate_pos_embed(src, {static_cast<int>(c), static_cast<int>(r)});
      if (!interp_tensor_out.empty()) {
        uhd::write_tensor_file(interp_tensor_out, uhd::to_raw(dst));
      }
      out.emit({{"from", {{"rows", src.rows}, {"cols", src.cols}, {"dim", src.dim_l}}},
                {"to", {{"rows", dst.rows}, {"cols", dst.cols}, {"dim", dst.dim_l}}}});
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cerr << app.help();
  return kExitUsage;
}
