#include "uhd/cost_model.hpp"

#include <stdexcept>

#include "uhd/slice_encoding.hpp"

namespace uhd {

ModelDims CostConfig::with_resampler() const {
  return {encoder, {ProjectorSpec::Kind::Resampler, resampler_queries, resampler_width}, llm};
}

ModelDims CostConfig::with_mlp() const { return {encoder, {ProjectorSpec::Kind::Mlp, 0, mlp_hidden}, llm}; }

long long vit_token_count(std::int64_t width_px, std::int64_t height_px, std::int64_t patch_px) {
  if (patch_px <= 0 || width_px <= 0 || height_px <= 0) {
    throw std::invalid_argument("vit_token_count needs positive sizes");
  }
  if (width_px % patch_px != 0 || height_px % patch_px != 0) {
    throw std::invalid_argument("image sides must be multiples of the patch size; snap them first");
  }
  return (width_px / patch_px) * (height_px / patch_px);
}

double stack_flops(const StackDims& dims, long long tokens) {
  const double t = static_cast<double>(tokens);
  const double d = dims.hidden_dim;
  const double per_layer = 8.0 * t * d * d + 4.0 * t * t * d + 2.0 * dims.ffn_matrices * t * d * dims.ffn_dim;
  return dims.layers * per_layer;
}

double projector_flops(const ModelDims& dims, long long unit_tokens) {
  const double t = static_cast<double>(unit_tokens);
  const double d_in = dims.encoder.stack.hidden_dim;
  const double w = dims.projector.width;
  if (dims.projector.kind == ProjectorSpec::Kind::Mlp) {
    // enc -> hidden -> llm
    return 2.0 * t * (d_in * w + w * dims.llm.hidden_dim);
  }
  if (unit_tokens == 0) {
    return 0.0;
  }
  const double k = dims.projector.queries_K;
  const double kv_input = 2.0 * t * d_in * w;
  const double kv_proj = 2.0 * 2.0 * t * w * w;
  const double q_and_out_proj = 2.0 * 2.0 * k * w * w;
  const double attention = 4.0 * k * t * w;
  return kv_input + kv_proj + q_and_out_proj + attention;
}

long long projector_output_tokens(const ModelDims& dims, long long unit_tokens) {
  if (dims.projector.kind == ProjectorSpec::Kind::Mlp || unit_tokens == 0) {
    return unit_tokens;
  }
  return dims.projector.queries_K;
}

CostReport estimate_flops_for_units(const ModelDims& dims, std::span<const long long> unit_tokens,
                                    long long text_tokens) {
  CostReport report;
  report.encoder_unit_tokens.assign(unit_tokens.begin(), unit_tokens.end());
  for (long long t : unit_tokens) {
    report.encoder_flops += stack_flops(dims.encoder.stack, t);
    report.projector_flops += projector_flops(dims, t);
    report.visual_tokens_to_llm += projector_output_tokens(dims, t);
  }
  report.llm_prefill_flops = stack_flops(dims.llm, report.visual_tokens_to_llm + text_tokens);
  report.total_flops = report.encoder_flops + report.projector_flops + report.llm_prefill_flops;
  return report;
}

namespace {

std::vector<long long> adaptive_units(const PartitionPlan& plan) {
  std::vector<long long> units;
  units.reserve(plan.slice_rects.size() + 1);
  for (const auto& rect : plan.slice_rects) {
    units.push_back(fit_patch_grid(rect.w, rect.h, plan.vit).tokens());
  }
  units.push_back(overview_grid(plan.image, plan.vit).tokens());
  return units;
}

}  // namespace

CostReport estimate_flops(const ModelDims& dims, const PartitionPlan& plan, long long text_tokens) {
  const auto units = adaptive_units(plan);
  return estimate_flops_for_units(dims, units, text_tokens);
}

Strategy parse_strategy(const std::string& name) {
  if (name == "uhd") return Strategy::Uhd;
  if (name == "llava15") return Strategy::Llava15;
  if (name == "uhd-mlp") return Strategy::UhdMlp;
  if (name == "fixed2x2-mlp") return Strategy::Fixed2x2Mlp;
  throw std::invalid_argument("unknown strategy '" + name + "' (expected uhd|llava15|uhd-mlp|fixed2x2-mlp)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Uhd:
      return "uhd";
    case Strategy::Llava15:
      return "llava15";
    case Strategy::UhdMlp:
      return "uhd-mlp";
    case Strategy::Fixed2x2Mlp:
      return "fixed2x2-mlp";
  }
  return "?";
}

CostReport estimate_strategy(const CostConfig& config, Strategy strategy, const ImageSize& image,
                             const VitSpec& vit, long long text_tokens) {
  const long long full = vit.token_budget();
  switch (strategy) {
    case Strategy::Uhd:
      return estimate_flops(config.with_resampler(), select_partition(image, vit), text_tokens);
    case Strategy::UhdMlp:
      return estimate_flops(config.with_mlp(), select_partition(image, vit), text_tokens);
    case Strategy::Llava15: {
      const std::vector<long long> units{full};
      return estimate_flops_for_units(config.with_mlp(), units, text_tokens);
    }
    case Strategy::Fixed2x2Mlp: {
      const std::vector<long long> units(5, full);
      return estimate_flops_for_units(config.with_mlp(), units, text_tokens);
    }
  }
  throw std::logic_error("unhandled strategy");
}

StrategyComparison compare_strategies(const CostConfig& config, Strategy a, Strategy b, const ImageSize& image,
                                      const VitSpec& vit, long long text_tokens) {
  StrategyComparison cmp;
  cmp.a = estimate_strategy(config, a, image, vit, text_tokens);
  cmp.b = estimate_strategy(config, b, image, vit, text_tokens);
  cmp.ratio = cmp.a.total_flops / cmp.b.total_flops;
  return cmp;
}

namespace {

StackDims stack_from_json(const nlohmann::json& j) {
  StackDims s;
  s.layers = j.at("layers").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.ffn_dim = j.at("ffn_dim").get<int>();
  s.ffn_matrices = j.value("ffn_matrices", 2);
  if (s.layers < 0 || s.hidden_dim < 1 || s.ffn_dim < 1 || s.ffn_matrices < 1) {
    throw std::invalid_argument("model stack dimensions must be positive");
  }
  return s;
}

}  // namespace

CostConfig cost_config_from_json(const nlohmann::json& model) {
  CostConfig c;
  c.encoder.stack = stack_from_json(model.at("encoder"));
  c.encoder.patch_px = model.at("encoder").value("patch_px", 14);
  c.llm = stack_from_json(model.at("llm"));
  const auto& proj = model.at("projector");
  c.resampler_queries = proj.value("resampler_queries", 64);
  c.resampler_width = proj.value("resampler_width", c.llm.hidden_dim);
  c.mlp_hidden = proj.value("mlp_hidden", c.llm.hidden_dim);
  return c;
}

nlohmann::json to_json(const CostReport& r) {
  return {
      {"encoder_flops", r.encoder_flops},
      {"projector_flops", r.projector_flops},
      {"llm_prefill_flops", r.llm_prefill_flops},
      {"total_flops", r.total_flops},
      {"total_tflops", r.total_flops / 1e12},
      {"visual_tokens_to_llm", r.visual_tokens_to_llm},
      {"encoder_unit_tokens", r.encoder_unit_tokens},
  };
}

}  // namespace uhd
