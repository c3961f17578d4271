#pragma once

// Numerical checks of the partition strategy's guarantees: the slice aspect
// bound by enumeration of factorizations, the slice area bounds by a dense
// sweep, and the ratio/area statistics by Monte Carlo and midpoint quadrature.
//
// Images are parametrised by the area ratio n = W*H / (W_v*H_v) and the aspect
// a = W / H, so W = sqrt(n*s*a), H = sqrt(n*s/a) with s = W_v*H_v. The slice
// aspect ratio is (W/m) / (H/rows) relative to W_v/H_v, and the slice area is
// reported as a fraction of s.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uhd/partition.hpp"

namespace uhd {

struct DistributionSpec {
  std::string name;
  double area_lo{1.0};  // exclusive
  double area_hi{20.0};
  double aspect_lo{1.0};
  double aspect_hi{6.0};
  bool fold_ratio{true};  // report max(r, 1/r)

  // n ~ U(1, 20], a ~ U[1, 6]
  static DistributionSpec default_spec();
  // n ~ U(1, 3], a ~ U[1, 2]
  static DistributionSpec alternate_spec();
  // n ~ U(0, 20], a ~ U[1, 6]; admits images smaller than one ViT input
  static DistributionSpec literal_spec();

  void validate() const;
  std::string describe() const;
};

struct StatReport {
  double expectation{};
  double variance{};
  long long samples{};
  double std_error{};
  std::uint64_t seed{};
};

struct SliceSample {
  double ratio{};
  double area{};
};

// Slice aspect ratio and normalized slice area for one (n, a) point.
SliceSample slice_sample(double area_ratio, double aspect, const VitSpec& vit, bool fold_ratio);

struct RatioBound {
  bool holds{};
  double worst_gap{};            // largest gap between adjacent distinct log(m/rows) in any candidate set
  std::vector<int> uncovered_N;  // N whose candidates do not reach +-ln 3 (aspect 6 would leave [1/2, 2])
};

RatioBound enumerate_ratio_bound(int N_max = 20);

struct SweepReport {
  double min_ratio{};
  double max_ratio{};
  double min_area{};
  double max_area{};
  long long points{};
  double area_ratio_at_min_area{};
  double area_ratio_at_max_area{};
};

// points_per_axis^2 grid: n_i = lo + (hi - lo) * (i + 1) / points, a log-spaced
// over [aspect_lo, aspect_hi]. Unfolded ratios.
SweepReport sweep_slice_bounds(int points_per_axis, double aspect_lo = 1.0 / 6.0, double aspect_hi = 6.0,
                               double area_lo = 1.0, double area_hi = 20.0,
                               const VitSpec& vit = VitSpec::clip_l14_336());

struct MonteCarloReport {
  StatReport ratio;
  StatReport area;
};

inline constexpr int kMonteCarloShards = 64;

// Shard s draws from mt19937_64(seed_seq{seed, s}); shards are merged in index
// order, so results depend only on (dist, samples, seed), not on thread count.
MonteCarloReport monte_carlo_expectations(const DistributionSpec& dist, long long samples, std::uint64_t seed,
                                          int threads = 0, const VitSpec& vit = VitSpec::clip_l14_336());

struct QuadratureReport {
  double ratio_mean{};
  double ratio_variance{};
  double area_mean{};
  double area_variance{};
  double ratio_mean_error{};  // |fine - half resolution|
  double area_mean_error{};
  long long cells{};
};

QuadratureReport midpoint_expectations(const DistributionSpec& dist, int cells_area = 2014, int cells_aspect = 2000,
                                       int threads = 0, const VitSpec& vit = VitSpec::clip_l14_336());

struct ProofCheck {
  std::string name;
  double expected{};
  double observed{};
  double tolerance{};
  bool pass{};
  std::string assumption;
};

struct ProofsReport {
  std::vector<ProofCheck> checks;
  MonteCarloReport default_mc;
  MonteCarloReport alternate_mc;
  MonteCarloReport literal_mc;
  bool all_pass() const;
};

ProofsReport verify_proofs(long long samples, std::uint64_t seed, int threads = 0);

nlohmann::json to_json(const StatReport& r);
nlohmann::json to_json(const ProofsReport& r);

}  // namespace uhd
