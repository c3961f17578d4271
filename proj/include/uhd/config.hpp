#pragma once

// Application configuration: ViT geometry, model dimensions, resampler queries,
// slice cap, seeds and output format. Every field has a default, so an empty
// JSON object is a valid config; command-line flags override loaded values.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "uhd/cost_model.hpp"
#include "uhd/partition.hpp"

namespace uhd {

enum class OutputFormat { Json, Text };

OutputFormat parse_format(const std::string& s);

struct AppConfig {
  VitSpec vit = VitSpec::clip_l14_336();
  CostConfig model = default_cost_config();
  int resampler_K{64};
  int max_N{6};
  std::uint64_t seed{42};
  OutputFormat format{OutputFormat::Json};

  // CLIP-ViT-L/14-336 encoder, Vicuna-13B language model, resampler and MLP
  // projectors at the language model width.
  static CostConfig default_cost_config();

  void validate() const;
};

AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::string& path);
nlohmann::json to_json(const AppConfig& config);

}  // namespace uhd
