#include "uhd/config.hpp"

#include <fstream>
#include <stdexcept>

namespace uhd {

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "text") return OutputFormat::Text;
  throw std::invalid_argument("unknown output format '" + s + "' (expected json|text)");
}

CostConfig AppConfig::default_cost_config() {
  CostConfig c;
  c.encoder.stack = {24, 1024, 4096, 2};
  c.encoder.patch_px = 14;
  c.llm = {40, 5120, 13824, 3};
  c.resampler_queries = 64;
  c.resampler_width = 5120;
  c.mlp_hidden = 5120;
  return c;
}

void AppConfig::validate() const {
  if (resampler_K < 1) {
    throw std::invalid_argument("resampler K must be >= 1");
  }
  if (max_N < 1) {
    throw std::invalid_argument("max_N must be >= 1");
  }
  if (model.encoder.patch_px != vit.patch_px()) {
    throw std::invalid_argument("encoder patch size disagrees with the ViT geometry");
  }
}

AppConfig config_from_json(const nlohmann::json& j) {
  AppConfig c;
  if (j.contains("vit")) {
    const auto& v = j.at("vit");
    c.vit = VitSpec(v.value("width", std::int64_t{336}), v.value("height", std::int64_t{336}),
                    v.value("patch", std::int64_t{14}));
  }
  if (j.contains("model")) {
    c.model = cost_config_from_json(j.at("model"));
  } else {
    c.model.encoder.patch_px = static_cast<int>(c.vit.patch_px());
  }
  c.resampler_K = j.value("resampler_K", c.resampler_K);
  c.model.resampler_queries = c.resampler_K;
  c.max_N = j.value("max_N", c.max_N);
  c.seed = j.value("seed", c.seed);
  c.format = parse_format(j.value("format", std::string("json")));
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config '" + path + "'");
  }
  return config_from_json(nlohmann::json::parse(in));
}

namespace {

nlohmann::json stack_json(const StackDims& s) {
  return {{"layers", s.layers}, {"hidden_dim", s.hidden_dim}, {"ffn_dim", s.ffn_dim}, {"ffn_matrices", s.ffn_matrices}};
}

}  // namespace

nlohmann::json to_json(const AppConfig& c) {
  auto encoder = stack_json(c.model.encoder.stack);
  encoder["patch_px"] = c.model.encoder.patch_px;
  return {{"vit", {{"width", c.vit.pretrain_width_px()}, {"height", c.vit.pretrain_height_px()}, {"patch", c.vit.patch_px()}}},
          {"model",
           {{"encoder", encoder},
            {"llm", stack_json(c.model.llm)},
            {"projector",
             {{"resampler_queries", c.model.resampler_queries},
              {"resampler_width", c.model.resampler_width},
              {"mlp_hidden", c.model.mlp_hidden}}}}},
          {"resampler_K", c.resampler_K},
          {"max_N", c.max_N},
          {"seed", c.seed},
          {"format", c.format == OutputFormat::Json ? "json" : "text"}};
}

}  // namespace uhd
