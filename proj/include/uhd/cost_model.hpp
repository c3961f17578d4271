#pragma once

// Visual-token counts and inference FLOPs for encoder + projector + LLM prefill.
//
// Every transformer stack costs, per layer,
//   8*t*d^2            (Q, K, V, O projections)
//   4*t^2*d            (QK^T and attention*V)
//   2*f*t*d*d_ffn      (f feed-forward matrices; f = 2 for a plain MLP, 3 for gated)
// with t the stack's token count. Softmax and normalisation are ignored.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uhd/partition.hpp"

namespace uhd {

struct StackDims {
  int layers{};
  int hidden_dim{};
  int ffn_dim{};
  int ffn_matrices{2};
};

struct EncoderDims {
  StackDims stack;
  int patch_px{14};
};

struct ProjectorSpec {
  enum class Kind { Resampler, Mlp };
  Kind kind{Kind::Resampler};
  int queries_K{64};    // resampler only
  int width{};          // resampler attention width or MLP hidden width
};

struct ModelDims {
  EncoderDims encoder;
  ProjectorSpec projector;
  StackDims llm;
};

// Both projector variants, so strategies can swap between them.
struct CostConfig {
  EncoderDims encoder;
  StackDims llm;
  int resampler_queries{64};
  int resampler_width{};
  int mlp_hidden{};

  ModelDims with_resampler() const;
  ModelDims with_mlp() const;
};

struct CostReport {
  double encoder_flops{};
  double projector_flops{};
  double llm_prefill_flops{};
  double total_flops{};
  long long visual_tokens_to_llm{};
  std::vector<long long> encoder_unit_tokens;
};

// Requires both sides to be multiples of patch_px.
long long vit_token_count(std::int64_t width_px, std::int64_t height_px, std::int64_t patch_px);

double stack_flops(const StackDims& dims, long long tokens);
double projector_flops(const ModelDims& dims, long long unit_tokens);
long long projector_output_tokens(const ModelDims& dims, long long unit_tokens);

// Each unit (slice or overview) passes through the encoder and projector once.
CostReport estimate_flops_for_units(const ModelDims& dims, std::span<const long long> unit_tokens,
                                    long long text_tokens);

// Units are the plan's slices (fitted patch grids) plus the overview image.
CostReport estimate_flops(const ModelDims& dims, const PartitionPlan& plan, long long text_tokens);

enum class Strategy {
  Uhd,          // adaptive partition + overview, resampler
  Llava15,      // single padded square at pretraining resolution, MLP
  UhdMlp,       // adaptive partition + overview, MLP
  Fixed2x2Mlp,  // fixed 2x2 slices + overview at pretraining resolution, MLP
};

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

CostReport estimate_strategy(const CostConfig& config, Strategy strategy, const ImageSize& image,
                             const VitSpec& vit, long long text_tokens = 0);

struct StrategyComparison {
  CostReport a;
  CostReport b;
  double ratio{};  // a.total / b.total
};

StrategyComparison compare_strategies(const CostConfig& config, Strategy a, Strategy b, const ImageSize& image,
                                      const VitSpec& vit, long long text_tokens = 0);

CostConfig cost_config_from_json(const nlohmann::json& model);
nlohmann::json to_json(const CostReport& report);

}  // namespace uhd
